import numpy as np
import pytest

from mocha_stereo.refine import StereoRig, reconstruction_error
from mocha_stereo.scene import Plane, SceneSpec, synth_scene, two_plane_spec


def flat(d, H=64, W=64, **kw):
    return SceneSpec(H, W, [Plane(float(d), (0, H, 0, W))], **kw)


def test_zero_disparity_copies_left():
    I_l, I_r, d, valid = synth_scene(flat(0))
    np.testing.assert_array_equal(I_r, I_l)
    assert valid.all() and not d.any()


def test_integer_shift():
    I_l, I_r, d, valid = synth_scene(flat(4))
    # left column x is seen by right column x - 4
    np.testing.assert_array_equal(I_r[:, :, :-4], I_l[:, :, 4:])
    assert not valid[:, :4].any() and valid[:, 4:].all()


def test_images_in_unit_range_and_deterministic():
    a = synth_scene(two_plane_spec(5))
    b = synth_scene(two_plane_spec(5))
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)
    assert a[0].min() >= 0 and a[0].max() <= 1


@pytest.mark.parametrize("seed", range(4))
@pytest.mark.parametrize("split", ["vertical", "horizontal"])
def test_two_plane_reconstruction(seed, split):
    I_l, I_r, d, valid = synth_scene(two_plane_spec(seed, split=split))
    assert valid.mean() > 0.6
    err = reconstruction_error(I_l, I_r, d, StereoRig.rectified())
    assert np.abs(err.E[:, valid]).max() < 1e-6


def test_sloped_plane_reconstruction():
    spec = SceneSpec(64, 64, [Plane(3.0, (0, 64, 0, 32)), Plane(6.0, (0, 64, 32, 64), gx=0.25)])
    I_l, I_r, d, valid = synth_scene(spec)
    assert valid[:, 40:].mean() > 0.9
    err = reconstruction_error(I_l, I_r, d, StereoRig.rectified())
    # where d is an integer both resamplings hit pixel centres and the warp is exact;
    # elsewhere generation and warping interpolate twice
    integral = valid & (d == np.round(d))
    assert integral[:, 32:].sum() > 100
    assert np.abs(err.E[:, integral]).max() < 1e-6
    assert np.abs(err.E[:, valid]).mean() < 0.05


def test_occluded_pixels_are_invalid():
    # the near right plane hides left-plane columns just left of the boundary
    spec = SceneSpec(64, 64, [Plane(2.0, (0, 64, 0, 32)), Plane(10.0, (0, 64, 32, 64))])
    _, _, _, valid = synth_scene(spec)
    assert not valid[:, 24:30].any()
    assert valid[:, 2:22].all() and valid[:, 42:].all()


def test_noise_is_seeded():
    a = synth_scene(flat(2, noise=0.01, texture_seed=3))
    clean = synth_scene(flat(2, texture_seed=3))
    assert 0 < np.abs(a[0] - clean[0]).max() < 0.1
    np.testing.assert_array_equal(a[0], synth_scene(flat(2, noise=0.01, texture_seed=3))[0])


def test_two_plane_choices():
    spec = two_plane_spec(1, d_choices=[4, 8, 12])
    ds = {p.d0 for p in spec.planes}
    assert len(ds) == 2 and ds <= {4.0, 8.0, 12.0}


def test_rejects_bad_sizes():
    with pytest.raises(ValueError):
        flat(1, H=48)


def test_rejects_overlapping_planes():
    with pytest.raises(ValueError, match="tile"):
        SceneSpec(64, 64, [Plane(1.0, (0, 64, 0, 40)), Plane(2.0, (0, 64, 30, 64))])


def test_disparity_range_enforced():
    with pytest.raises(ValueError):
        flat(16, max_disp=16).disparity()
    assert flat(15, max_disp=16).disparity().max() == 15
