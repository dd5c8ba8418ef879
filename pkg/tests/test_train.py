import numpy as np
import pytest

from mocha_stereo.config import RunConfig
from mocha_stereo.motif import MotifBank
from mocha_stereo.pipeline import VolumeObjective
from mocha_stereo.scene import synth_scene, two_plane_spec
from mocha_stereo.train import central_difference, fit_motif_bank, grad_check, richardson_gradient


def test_quadratic_against_analytic():
    theta = np.random.default_rng(0).standard_normal(7)
    res = grad_check(lambda t: float(t @ t), theta, g_ref=lambda t: 2 * t)
    assert res.max_discrepancy < 1e-8


@pytest.mark.parametrize("eps", [2.0 ** -20, 2.0 ** -10, 0.5])
def test_linear_is_exact(eps):
    # dyadic steps keep theta +/- eps representable, so no rounding enters
    a = np.array([0.5, -2.0, 3.0, 0.25])
    theta = np.array([1.0, 2.0, -1.0, 0.0])
    res = grad_check(lambda t: float(a @ t), theta, g_ref=a, eps=eps)
    assert res.max_discrepancy < 1e-12


def test_richardson_cancels_second_order_error():
    fn = lambda t: float(np.sum(np.sin(t) * t ** 3))
    theta = np.array([0.3, -1.1, 2.0])
    exact = np.cos(theta) * theta ** 3 + 3 * np.sin(theta) * theta ** 2
    coarse = np.abs(central_difference(fn, theta, 1e-2) - exact).max()
    fine = np.abs(richardson_gradient(fn, theta, 1e-2) - exact).max()
    assert fine < coarse / 100


def test_subset_of_coordinates():
    theta = np.arange(6.0)
    res = grad_check(lambda t: float(t @ t), theta, g_ref=2 * theta, coords=[1, 4])
    assert res.coords == (1, 4)
    np.testing.assert_allclose(res.numeric, [2.0, 8.0], atol=1e-8)


class Quadratic:
    """Stand-in objective with the same interface as VolumeObjective."""

    def __init__(self):
        self.weights = type("W", (), {"bank": MotifBank(np.full((1, 3, 3), 0.5))})()
        self.target = np.linspace(-1, 1, 9)

    def __call__(self, theta):
        return float(np.sum((theta - self.target) ** 2))


def test_zero_learning_rate_keeps_bank():
    obj = Quadratic()
    bank, trace = fit_motif_bank(obj, steps=5, lr=0.0)
    np.testing.assert_array_equal(bank.SW, obj.weights.bank.SW)
    assert len(trace) == 6 and len(set(trace)) == 1


def test_quadratic_descends_to_target():
    obj = Quadratic()
    bank, trace = fit_motif_bank(obj, steps=40, lr=0.2)
    assert all(b <= a for a, b in zip(trace, trace[1:]))
    np.testing.assert_allclose(bank.flat(), obj.target, atol=1e-6)


def test_step_along_oracle_gradient_does_not_increase_pipeline_loss():
    cfg = RunConfig(max_disp=8, dtype="float64")
    scene = synth_scene(two_plane_spec(0, d_choices=range(4, 25, 4)))
    obj = VolumeObjective([scene], cfg)
    theta = obj.weights.bank.flat()
    theta[5] += 0.05
    g = richardson_gradient(obj, theta)
    base = obj(theta)
    assert obj(theta - 1e-2 * g) <= base


def test_fit_requires_a_step():
    with pytest.raises(ValueError):
        fit_motif_bank(Quadratic(), steps=0)
