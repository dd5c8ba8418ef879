"""Full-resolution refinement: disparity upsampling, plane-induced warping
error and the reconstruction-error motif penalty (REMP)."""

from dataclasses import dataclass

import numpy as np

from .kernels import ShapeError, avg_pool, bilinear_sample, conv2d, leaky_relu, sigmoid, upsample_bilinear

EPS_DISP = 1e-3
POOL = 4


@dataclass(frozen=True)
class StereoRig:
    """Calibrated pair.  Coordinates relate as X_l = R X_r - T, so for R = I
    the vector T is the left camera centre seen from the right camera; the
    rectified rig built by :meth:`rectified` uses T = (-B, 0, 0)."""

    K_l: np.ndarray
    K_r: np.ndarray
    R: np.ndarray
    T: np.ndarray
    baseline: float
    focal: float

    def validate(self):
        R = np.asarray(self.R, dtype=np.float64)
        if R.shape != (3, 3) or not np.allclose(R.T @ R, np.eye(3), atol=1e-6):
            raise ValueError("rotation R must be orthonormal (R^T R = I)")
        for name, K in (("K_l", self.K_l), ("K_r", self.K_r)):
            if np.shape(K) != (3, 3) or abs(np.linalg.det(K)) < 1e-12:
                raise ValueError(f"{name} must be an invertible 3x3 matrix")
        if self.baseline <= 0 or self.focal <= 0:
            raise ValueError("baseline and focal length must be positive")

    def is_rectified(self):
        return (np.allclose(self.R, np.eye(3)) and np.allclose(self.K_l, self.K_r)
                and np.allclose(self.T, [-self.baseline, 0.0, 0.0]))

    @classmethod
    def rectified(cls, focal=100.0, baseline=0.5, cx=None, cy=None, size=(64, 64)):
        H, W = size
        cx = (W - 1) / 2 if cx is None else cx
        cy = (H - 1) / 2 if cy is None else cy
        K = np.array([[focal, 0.0, cx], [0.0, focal, cy], [0.0, 0.0, 1.0]])
        return cls(K, K.copy(), np.eye(3), np.array([-baseline, 0.0, 0.0]), baseline, focal)


def _intrinsics(fx, fy, cx, cy):
    return np.array([[fx, 0.0, cx], [0.0, fy, cy], [0.0, 0.0, 1.0]])


def parse_rig(text):
    """Rig from ``key = values`` lines: left_fx, left_fy, left_cx, left_cy (same
    for right_), R (9 values row-major), T (3 values), baseline."""
    vals = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"rig line {n}: expected 'key = value'")
        key, rest = (p.strip() for p in line.split("=", 1))
        vals[key] = [float(v) for v in rest.replace(",", " ").split()]
    required = {f"{side}_{k}": 1 for side in ("left", "right") for k in ("fx", "fy", "cx", "cy")}
    required.update(R=9, T=3, baseline=1)
    for key, count in required.items():
        if key not in vals:
            raise ValueError(f"rig file missing {key!r}")
        if len(vals[key]) != count:
            raise ValueError(f"rig key {key!r} needs {count} values, got {len(vals[key])}")
    unknown = set(vals) - set(required)
    if unknown:
        raise ValueError(f"unknown rig keys: {sorted(unknown)}")
    K_l = _intrinsics(*(vals[f"left_{k}"][0] for k in ("fx", "fy", "cx", "cy")))
    K_r = _intrinsics(*(vals[f"right_{k}"][0] for k in ("fx", "fy", "cx", "cy")))
    rig = StereoRig(K_l, K_r, np.array(vals["R"]).reshape(3, 3), np.array(vals["T"]),
                    vals["baseline"][0], vals["left_fx"][0])
    rig.validate()
    return rig


def format_rig(rig):
    lines = []
    for side, K in (("left", rig.K_l), ("right", rig.K_r)):
        lines += [f"{side}_{key} = {float(K[i, j])!r}"
                  for key, (i, j) in (("fx", (0, 0)), ("fy", (1, 1)), ("cx", (0, 2)), ("cy", (1, 2)))]
    lines.append("R = " + " ".join(repr(float(v)) for v in np.ravel(rig.R)))
    lines.append("T = " + " ".join(repr(float(v)) for v in np.ravel(rig.T)))
    lines.append(f"baseline = {float(rig.baseline)!r}")
    return "\n".join(lines) + "\n"


def upsample_disparity(d_quarter, factor=4):
    """Bilinear x4 upsampling; values scale with the resolution."""
    return factor * upsample_bilinear(np.asarray(d_quarter)[None], factor)[0]


def disparity_to_depth(d, rig):
    """depth = focal * baseline / d; returns (depth, valid) with d <= 1e-3 px invalid."""
    d = np.asarray(d)
    valid = d > EPS_DISP
    depth = np.where(valid, rig.focal * rig.baseline / np.where(valid, d, 1.0), 0.0)
    return depth, valid


@dataclass(frozen=True)
class PlaneModel:
    normal: np.ndarray
    distance: np.ndarray  # [H, W], perpendicular distance per pixel
    valid: np.ndarray

    @classmethod
    def from_disparity(cls, d, rig, normal=(0.0, 0.0, 1.0)):
        """Plane through each pixel's back-projected point with the given normal
        (right-camera frame)."""
        n = np.asarray(normal, dtype=np.float64)
        if abs(np.linalg.norm(n) - 1.0) > 1e-6:
            raise ValueError("plane normal must have unit length")
        depth, valid = disparity_to_depth(d, rig)
        H, W = np.shape(d)
        ys, xs = np.mgrid[0:H, 0:W].astype(np.float64)
        rays = np.linalg.solve(rig.K_l, np.stack([xs.ravel(), ys.ravel(), np.ones(H * W)]))
        X_l = rays * depth.ravel()
        X_r = rig.R.T @ (X_l + np.reshape(rig.T, (3, 1)))
        dist = (n @ X_r).reshape(H, W)
        valid = valid & (dist > 0)
        return cls(n, np.where(valid, dist, 0.0), valid)


@dataclass(frozen=True)
class ReconstructionError:
    E: np.ndarray  # [3, H, W]
    valid: np.ndarray


def homography_coords(rig, plane):
    """Right-view sampling coordinates [2, H, W] for every left pixel.

    With X_l = R X_r - T and the plane N . X_r = D, the matrix
    H(p) = K_l (R - T N^T / D(p)) K_r^-1 carries right pixels into the left
    view, so left pixel p samples the right image at H(p)^-1 p.
    """
    H, W = plane.distance.shape
    ys, xs = np.mgrid[0:H, 0:W].astype(np.float64)
    D = np.where(plane.valid, plane.distance, 1.0).reshape(-1, 1, 1)
    A = rig.R[None] - np.outer(rig.T, plane.normal)[None] / D
    Hmat = rig.K_l[None] @ A @ np.linalg.inv(rig.K_r)[None]
    p = np.stack([xs.ravel(), ys.ravel(), np.ones(H * W)], axis=-1)[..., None]
    q = np.linalg.solve(Hmat, p)[..., 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = q[:, 0] / q[:, 2]
        v = q[:, 1] / q[:, 2]
    coords = np.stack([u.reshape(H, W), v.reshape(H, W)])
    return np.where(plane.valid[None], coords, -1.0)


def reconstruction_error(I_l, I_r, d, rig, plane=None):
    """Warp I_r into the left view and subtract I_l.

    ``plane=None`` on a rectified rig takes the direct path sampling I_r at
    (x - d, y); otherwise a plane model (fronto-parallel by default) drives
    the per-pixel homography.  Invalid pixels carry E = 0.
    """
    rig.validate()
    I_l = np.asarray(I_l)
    I_r = np.asarray(I_r)
    d = np.asarray(d)
    if I_l.shape != I_r.shape or I_l.shape[1:] != d.shape:
        raise ShapeError(f"image/disparity shapes disagree: {I_l.shape}, {I_r.shape}, {d.shape}")
    Hh, Ww = d.shape
    if plane is None and rig.is_rectified():
        ys, xs = np.mgrid[0:Hh, 0:Ww].astype(d.dtype)
        coords = np.stack([xs - d, ys])
        depth_ok = d > EPS_DISP
    else:
        if plane is None:
            plane = PlaneModel.from_disparity(d, rig)
        coords = homography_coords(rig, plane)
        depth_ok = plane.valid
    warped, ok = bilinear_sample(I_r, coords)
    valid = ok & depth_ok
    E = np.where(valid[None], warped - I_l, 0.0)
    return ReconstructionError(E, valid)


@dataclass
class RempWeights:
    enc1: np.ndarray  # [16, 4, 3, 3]
    enc2: np.ndarray  # [32, 16, 3, 3]
    dec: np.ndarray  # [16, 48, 3, 3]
    lmc1: np.ndarray  # [16, 16, 3, 3]
    lmc2: np.ndarray  # [16, 16, 3, 3]
    final: np.ndarray  # [1, 16, 3, 3]
    pool: int = POOL

    @classmethod
    def init(cls, seed=0, final_gain=0.1, dtype=np.float64):
        rng = np.random.default_rng([seed, 5])

        def conv(cout, cin, gain=1.0):
            return (gain * rng.standard_normal((cout, cin, 3, 3)) / np.sqrt(cin * 9)).astype(dtype)

        return cls(conv(16, 4), conv(32, 16), conv(16, 48), conv(16, 16), conv(16, 16),
                   conv(1, 16, final_gain))


def unet(x, w):
    e1 = leaky_relu(conv2d(x, w.enc1))
    e2 = leaky_relu(conv2d(avg_pool(e1, 2), w.enc2))
    up = upsample_bilinear(e2, 2)
    return leaky_relu(conv2d(np.concatenate([up, e1]), w.dec))


def low_frequency(o, k=POOL):
    return upsample_bilinear(avg_pool(o, k), k)


def motif_gate(o, w):
    return sigmoid(conv2d(leaky_relu(conv2d(o, w.lmc1)), w.lmc2))


def remp_branches(d_prime, E, w, gate=None):
    """Intermediate fields of the penalty: (o, lfe, gate, combined)."""
    E = getattr(E, "E", E)
    d_prime = np.asarray(d_prime)
    if np.shape(E)[1:] != d_prime.shape:
        raise ShapeError(f"error map {np.shape(E)} does not match disparity {d_prime.shape}")
    H, W = d_prime.shape
    if H % w.pool or W % w.pool:
        raise ShapeError(f"REMP needs sizes divisible by {w.pool}, got {H}x{W}")
    o = unet(np.concatenate([d_prime[None], E]), w)
    lfe = low_frequency(o, w.pool)
    g = motif_gate(o, w) if gate is None else np.broadcast_to(gate, o.shape)
    combined = lfe * (1 - g) + o * g
    return o, lfe, g, combined


def remp(d_prime, E, w, gate=None):
    """Refined disparity d' - Conv(LFE(o)(1 - g) + o g) with g the motif gate.

    ``gate`` overrides the learned gate (for probing the branch extremes).
    """
    *_, combined = remp_branches(d_prime, E, w, gate)
    return np.asarray(d_prime) - conv2d(combined, w.final)[0]
