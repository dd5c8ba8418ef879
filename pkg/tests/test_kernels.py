import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from mocha_stereo.kernels import (ShapeError, avg_pool, bilinear_sample, conv2d, conv3d, dft2d,
                                  gaussian_kernel3, gaussian_lowpass, idft2d, sigmoid, softmax,
                                  upsample_bilinear)


def rng(seed=0):
    return np.random.default_rng(seed)


class TestConv2d:
    def test_unit_kernel_is_identity(self):
        x = rng().standard_normal((3, 5, 6))
        k = np.zeros((3, 3, 1, 1))
        k[np.arange(3), np.arange(3)] = 1.0
        np.testing.assert_array_equal(conv2d(x, k), x)

    def test_box_filter_keeps_interior_constant(self):
        x = np.full((1, 6, 6), 2.5)
        out = conv2d(x, np.full((1, 1, 3, 3), 1 / 9))
        # zero padding darkens only the border ring
        np.testing.assert_allclose(out[0, 1:-1, 1:-1], 2.5, rtol=1e-15)

    def test_matches_loop_oracle(self):
        r = rng(1)
        x = r.standard_normal((1, 4, 4))
        k = r.standard_normal((1, 1, 3, 3))
        np.testing.assert_allclose(conv2d(x, k), oracles.conv2d(x, k), atol=1e-12)

    def test_multichannel_matches_loop_oracle(self):
        r = rng(2)
        x = r.standard_normal((3, 6, 5))
        k = r.standard_normal((2, 3, 3, 5))
        np.testing.assert_allclose(conv2d(x, k), oracles.conv2d(x, k), atol=1e-12)

    def test_bias(self):
        x = rng().standard_normal((1, 4, 4))
        k = np.zeros((2, 1, 3, 3))
        np.testing.assert_array_equal(conv2d(x, k, bias=[1.0, -2.0])[:, 0, 0], [1.0, -2.0])

    def test_channel_mismatch(self):
        with pytest.raises(ShapeError):
            conv2d(np.zeros((2, 4, 4)), np.zeros((1, 3, 3, 3)))

    def test_even_kernel_rejected(self):
        with pytest.raises(ShapeError):
            conv2d(np.zeros((1, 4, 4)), np.zeros((1, 1, 2, 2)))

    @settings(max_examples=30, deadline=None)
    @given(a=st.floats(-3, 3), b=st.floats(-3, 3), seed=st.integers(0, 10_000))
    def test_linearity(self, a, b, seed):
        r = rng(seed)
        x, y = r.standard_normal((2, 2, 6, 6))
        k = r.standard_normal((3, 2, 3, 3))
        lhs = conv2d(a * x + b * y, k)
        rhs = a * conv2d(x, k) + b * conv2d(y, k)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-6, atol=1e-9)


class TestConv3d:
    def test_delta_kernel_is_identity(self):
        x = rng().standard_normal((2, 3, 4, 4))
        k = np.zeros((2, 2, 3, 3, 3))
        k[0, 0, 1, 1, 1] = k[1, 1, 1, 1, 1] = 1.0
        np.testing.assert_array_equal(conv3d(x, k), x)

    def test_zero_kernel(self):
        x = rng().standard_normal((2, 3, 4, 4))
        assert not conv3d(x, np.zeros((1, 2, 3, 3, 3))).any()

    def test_matches_loop_oracle(self):
        r = rng(3)
        x = r.standard_normal((2, 3, 4, 4))
        k = r.standard_normal((2, 2, 3, 3, 3))
        np.testing.assert_allclose(conv3d(x, k), oracles.conv3d(x, k), atol=1e-12)

    def test_channel_mismatch(self):
        with pytest.raises(ShapeError):
            conv3d(np.zeros((2, 3, 4, 4)), np.zeros((1, 3, 3, 3, 3)))


class TestGaussian:
    def test_kernel_sums_to_one(self):
        g = gaussian_kernel3()
        assert g.shape == (3, 3)
        assert abs(g.sum() - 1.0) < 1e-15
        np.testing.assert_allclose(g, oracles.gaussian3(), atol=1e-15)

    def test_constant_passes_through(self):
        x = np.full((2, 5, 7), 0.3)
        np.testing.assert_allclose(gaussian_lowpass(x), x, atol=1e-15)

    def test_impulse_response(self):
        x = np.zeros((1, 5, 5))
        x[0, 2, 2] = 1.0
        out = gaussian_lowpass(x)
        np.testing.assert_allclose(out[0, 1:4, 1:4], gaussian_kernel3(), atol=1e-15)
        assert out[0].sum() == pytest.approx(1.0)

    def test_matches_loop_oracle(self):
        x = rng(4).standard_normal((2, 6, 7))
        np.testing.assert_allclose(gaussian_lowpass(x), oracles.gaussian_wrap(x), atol=1e-12)


class TestFourier:
    def test_constant_is_dc_only(self):
        X = dft2d(np.full((1, 4, 4), 1.5))
        assert X[0, 0, 0] == pytest.approx(16 * 1.5)
        X[0, 0, 0] = 0
        assert np.abs(X).max() < 1e-12

    def test_impulse_has_flat_spectrum(self):
        x = np.zeros((1, 6, 6))
        x[0, 0, 0] = 1.0
        np.testing.assert_allclose(np.abs(dft2d(x)), 1.0, atol=1e-12)

    def test_matches_direct_dft(self):
        x = rng(5).standard_normal((5, 6))
        np.testing.assert_allclose(dft2d(x[None])[0], oracles.dft2(x), atol=1e-10)

    def test_inverse_matches_direct(self):
        X = rng(6).standard_normal((4, 5)) + 1j * rng(7).standard_normal((4, 5))
        re, im = idft2d(X[None], return_imag=True)
        ref = oracles.idft2(X)
        np.testing.assert_allclose(re[0], ref.real, atol=1e-12)
        np.testing.assert_allclose(im[0], ref.imag, atol=1e-12)

    def test_round_trip(self):
        x = rng(8).standard_normal((3, 8, 8))
        assert np.abs(idft2d(dft2d(x)) - x).max() < 1e-6 * np.abs(x).max()

    @settings(max_examples=25, deadline=None)
    @given(arrays(np.float64, (2, 5, 6), elements=st.floats(-1e3, 1e3)))
    def test_parseval(self, x):
        energy = np.sum(x * x)
        spectral = np.sum(np.abs(dft2d(x)) ** 2) / 30
        assert abs(energy - spectral) <= 1e-5 * max(energy, 1e-300) + 1e-9


class TestSoftmax:
    def test_uniform(self):
        np.testing.assert_allclose(softmax(np.zeros(4)), 0.25)

    def test_dominant_entry(self):
        p = softmax(np.array([0.0, 1000.0, 0.0, 0.0]))
        np.testing.assert_allclose(p, [0, 1, 0, 0], atol=1e-6)

    def test_matches_direct_formula(self):
        x = rng(9).standard_normal((5, 3, 3))
        e = np.exp(x)
        np.testing.assert_allclose(softmax(x, axis=0), e / e.sum(axis=0), rtol=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, (6, 3), elements=st.floats(-1e6, 1e6)))
    def test_sums_to_one(self, x):
        p = softmax(x, axis=0)
        assert np.all(p >= 0) and np.all(p <= 1)
        np.testing.assert_allclose(p.sum(axis=0), 1.0, atol=1e-6)


class TestBilinear:
    def test_integer_coords_exact(self):
        img = rng(10).standard_normal((2, 4, 5))
        ys, xs = np.mgrid[0:4, 0:5].astype(float)
        vals, ok = bilinear_sample(img, np.stack([xs, ys]))
        np.testing.assert_array_equal(vals, img)
        assert ok.all()

    def test_outside_is_zero_and_invalid(self):
        img = np.ones((1, 3, 3))
        coords = np.array([[[-0.5, 2.5, 1.0]], [[1.0, 1.0, 2.01]]])
        vals, ok = bilinear_sample(img, coords)
        assert not ok.any()
        assert not vals.any()

    def test_midpoint_is_mean(self):
        img = np.array([[[1.0, 3.0], [5.0, 7.0]]])
        vals, ok = bilinear_sample(img, np.array([[[0.5]], [[0.5]]]))
        assert vals[0, 0, 0] == pytest.approx(4.0)
        assert ok[0, 0]

    def test_matches_loop_oracle(self):
        r = rng(11)
        img = r.standard_normal((2, 5, 6))
        coords = r.uniform(-1, 6, size=(2, 4, 4))
        vals, ok = bilinear_sample(img, coords)
        for i in range(4):
            for j in range(4):
                ref, ref_ok = oracles.bilinear(img, coords[0, i, j], coords[1, i, j])
                assert ok[i, j] == ref_ok
                np.testing.assert_allclose(vals[:, i, j], ref, atol=1e-12)


class TestPooling:
    def test_mean_of_block(self):
        assert avg_pool(np.array([[[1.0, 3.0], [5.0, 7.0]]]), 2)[0, 0, 0] == 4.0

    def test_constant_both_scales(self):
        x = np.full((2, 8, 8), 1.25)
        np.testing.assert_array_equal(avg_pool(x, 4), 1.25)
        np.testing.assert_allclose(upsample_bilinear(x, 4), 1.25, rtol=1e-15)

    def test_indivisible_rejected(self):
        with pytest.raises(ShapeError):
            avg_pool(np.zeros((1, 6, 8)), 4)

    def test_pool_then_upsample_matches_composed_oracle(self):
        x = rng(12).standard_normal((2, 8, 8))
        got = upsample_bilinear(avg_pool(x, 2), 2)
        ref = oracles.upsample(oracles.avg_pool(x, 2), 2)
        np.testing.assert_allclose(got, ref, atol=1e-12)

    def test_upsample_matches_loop_oracle(self):
        x = rng(13).standard_normal((1, 3, 5))
        np.testing.assert_allclose(upsample_bilinear(x, 4), oracles.upsample(x, 4), atol=1e-12)


def test_sigmoid_is_stable_and_exact():
    x = np.array([-800.0, -2.0, 0.0, 3.0, 800.0])
    s = sigmoid(x)
    assert np.all(np.isfinite(s))
    np.testing.assert_allclose(s[1:4], oracles.sigmoid(x[1:4]), rtol=1e-15)
    assert s[0] == 0.0 and s[-1] == 1.0
