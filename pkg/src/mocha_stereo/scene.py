"""Synthetic rectified stereo scenes built from planar disparity layouts.

Disparity is left-referenced: left pixel (x, y) sees the same point as right
pixel (x - d, y).  The right view is generated as I_r(x, y) = I_l(x + d(x, y), y),
and a left pixel is valid only if the pixel it maps to maps back to it.
"""

from dataclasses import dataclass, field

import numpy as np

from .kernels import bilinear_sample, gaussian_lowpass


@dataclass(frozen=True)
class Plane:
    """Disparity d0 + gx*(x - x0) + gy*(y - y0) over rows [y0, y1) and columns [x0, x1)."""

    d0: float
    region: tuple
    gx: float = 0.0
    gy: float = 0.0


@dataclass
class SceneSpec:
    H: int = 64
    W: int = 64
    planes: list = field(default_factory=list)
    texture_seed: int = 0
    noise: float = 0.0
    max_disp: int | None = None

    def __post_init__(self):
        if self.H % 32 or self.W % 32:
            raise ValueError(f"scene size {self.H}x{self.W} must be divisible by 32")
        if not self.planes:
            raise ValueError("scene needs at least one plane")
        cover = np.zeros((self.H, self.W), dtype=np.int64)
        for p in self.planes:
            y0, y1, x0, x1 = p.region
            cover[y0:y1, x0:x1] += 1
        if not np.all(cover == 1):
            raise ValueError("planes must tile the image exactly once")

    def disparity(self):
        d = np.zeros((self.H, self.W))
        ys, xs = np.mgrid[0:self.H, 0:self.W]
        for p in self.planes:
            y0, y1, x0, x1 = p.region
            sl = (slice(y0, y1), slice(x0, x1))
            d[sl] = p.d0 + p.gx * (xs[sl] - x0) + p.gy * (ys[sl] - y0)
        if self.max_disp is not None and (d.min() < 1 or d.max() > self.max_disp - 1):
            raise ValueError(f"disparities must lie in [1, {self.max_disp - 1}], got [{d.min()}, {d.max()}]")
        return d


def two_plane_spec(seed, H=64, W=64, d_choices=range(2, 13), split="vertical", noise=0.0, max_disp=None):
    """Two fronto-parallel planes split at a random column (or row)."""
    rng = np.random.default_rng([seed, 7])
    d_choices = list(d_choices)
    d1, d2 = rng.choice(d_choices, size=2, replace=False)
    if split == "vertical":
        b = int(rng.integers(W // 4, 3 * W // 4))
        planes = [Plane(float(d1), (0, H, 0, b)), Plane(float(d2), (0, H, b, W))]
    else:
        b = int(rng.integers(H // 4, 3 * H // 4))
        planes = [Plane(float(d1), (0, b, 0, W)), Plane(float(d2), (b, H, 0, W))]
    return SceneSpec(H, W, planes, texture_seed=seed, noise=noise, max_disp=max_disp)


def texture(H, W, seed, channels=3):
    rng = np.random.default_rng([seed, 11])
    t = gaussian_lowpass(rng.uniform(0.0, 1.0, size=(channels, H, W)))
    lo, hi = t.min(), t.max()
    return (t - lo) / (hi - lo)


def _render_right(spec, d):
    """Right-view source coordinates and winning plane index per right pixel.

    For each plane the left column mapping to right column x' solves
    x' = x - d(x, y); where several planes land on x' the nearest (largest
    disparity) wins.  Unseen right pixels get plane index -1.
    """
    H, W = spec.H, spec.W
    ys, xr = np.mgrid[0:H, 0:W].astype(np.float64)
    best_d = np.full((H, W), -np.inf)
    src_x = np.full((H, W), np.nan)
    owner = np.full((H, W), -1, dtype=np.int64)
    for k, p in enumerate(spec.planes):
        y0, y1, x0, x1 = p.region
        if p.gx == 1.0:
            continue
        offset = p.d0 - p.gx * x0 + p.gy * (ys - y0)
        x = (xr + offset) / (1.0 - p.gx)
        dk = x - xr
        inside = (ys >= y0) & (ys < y1) & (x >= x0) & (x <= x1 - 1) & (dk > best_d)
        best_d = np.where(inside, dk, best_d)
        src_x = np.where(inside, x, src_x)
        owner = np.where(inside, k, owner)
    return src_x, owner


def plane_index(spec):
    idx = np.zeros((spec.H, spec.W), dtype=np.int64)
    for k, p in enumerate(spec.planes):
        y0, y1, x0, x1 = p.region
        idx[y0:y1, x0:x1] = k
    return idx


def synth_scene(spec):
    """Returns (I_l, I_r, d_gt, valid) with images [3, H, W] in [0, 1].

    A left pixel is valid when its right correspondence lies inside the
    image and is not occluded by another plane.
    """
    H, W = spec.H, spec.W
    d = spec.disparity()
    I_l = texture(H, W, spec.texture_seed)
    ys, xs = np.mgrid[0:H, 0:W].astype(np.float64)

    src_x, owner = _render_right(spec, d)
    seen = owner >= 0
    I_r, r_ok = bilinear_sample(I_l, np.stack([np.where(seen, src_x, -1.0), ys]))
    # right pixels seeing nothing in the left view get unrelated texture
    filler = texture(H, W, spec.texture_seed + 7919)
    I_r = np.where(r_ok[None], I_r, filler)

    xr = xs - d
    in_bounds = (xr >= 0) & (xr <= W - 1)
    xr0 = np.clip(np.floor(np.where(in_bounds, xr, 0)).astype(np.int64), 0, W - 1)
    xr1 = np.clip(np.ceil(np.where(in_bounds, xr, 0)).astype(np.int64), 0, W - 1)
    yi = ys.astype(np.int64)
    mine = plane_index(spec)
    valid = in_bounds & (owner[yi, xr0] == mine) & (owner[yi, xr1] == mine)

    if spec.noise > 0:
        rng = np.random.default_rng([spec.texture_seed, 13])
        I_l = I_l + spec.noise * rng.standard_normal(I_l.shape)
        I_r = I_r + spec.noise * rng.standard_normal(I_r.shape)
    return I_l, I_r, d, valid
