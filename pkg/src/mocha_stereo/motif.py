"""Motif mining: the 1D matrix profile and motif channel attention on feature maps."""

from dataclasses import dataclass

import numpy as np

from .kernels import ShapeError, conv2d, dft2d, gaussian_lowpass, idft2d

WINDOW = 3
PARTS = ("magnitude", "real")
NORM_MODES = ("l2", "none")
# relative round-off level below which a motif plane counts as zero
ZERO_TOL = 1e-10


@dataclass(frozen=True)
class MatrixProfile:
    distances: np.ndarray
    indices: np.ndarray
    L: int

    @property
    def motif(self):
        """(a, b, distance) of the closest subsequence pair, lowest (a, b) on ties."""
        a = int(np.argmin(self.distances))
        return a, int(self.indices[a]), float(self.distances[a])


def matrix_profile_1d(series, L):
    """Brute-force matrix profile with plain Euclidean distance.

    Neighbors must satisfy |i - j| >= L, so overlapping (trivial) matches
    never count.  Ties resolve to the lowest neighbor index.  A start with
    no admissible neighbor (possible when n < 3L - 1) gets distance inf and
    index -1.
    """
    T = np.asarray(series, dtype=np.float64).ravel()
    n = T.size
    if L < 2:
        raise ValueError(f"subsequence length must be >= 2, got {L}")
    if n < 2 * L:
        raise ValueError(f"series of length {n} too short for L={L} (need n >= 2L)")
    m = n - L + 1
    # accumulate offset by offset so every distance sums its terms left to right
    acc = np.zeros((m, m))
    for t in range(L):
        w = T[t:t + m]
        acc += (w[:, None] - w[None, :]) ** 2
    D = np.sqrt(acc)
    idx = np.arange(m)
    D[np.abs(idx[:, None] - idx[None, :]) < L] = np.inf
    nn = np.argmin(D, axis=1)
    dist = D[idx, nn]
    return MatrixProfile(distances=dist, indices=np.where(np.isfinite(dist), nn, -1), L=L)


@dataclass
class MotifBank:
    """N_s learnable 3x3 windows applied to the high-passed spectrum."""

    SW: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        self.SW = np.asarray(self.SW)
        if self.SW.ndim == 2 and self.SW.shape[1] == WINDOW * WINDOW:
            self.SW = self.SW.reshape(-1, WINDOW, WINDOW)
        if self.SW.ndim != 3 or self.SW.shape[1:] != (WINDOW, WINDOW) or self.SW.shape[0] < 1:
            raise ShapeError(f"motif windows must be [N_s, 3, 3] with N_s >= 1, got {self.SW.shape}")

    @property
    def n_s(self):
        return self.SW.shape[0]

    @classmethod
    def random(cls, n_s=4, seed=0, dtype=np.float64):
        rng = np.random.default_rng(seed)
        SW = rng.uniform(-0.5, 0.5, size=(n_s, WINDOW, WINDOW)).astype(dtype)
        return cls(SW, seed=seed)

    def flat(self):
        return self.SW.reshape(-1).copy()

    def with_params(self, theta):
        return MotifBank(np.asarray(theta).reshape(self.SW.shape), seed=self.seed)

    def dumps(self):
        return "".join(" ".join(repr(float(v)) for v in w.ravel()) + "\n" for w in self.SW)

    @classmethod
    def loads(cls, text):
        rows = [line.split() for line in text.splitlines() if line.strip() and not line.startswith("#")]
        for k, row in enumerate(rows):
            if len(row) != WINDOW * WINDOW:
                raise ValueError(f"motif bank line {k + 1}: expected 9 values, got {len(row)}")
        return cls(np.array([[float(v) for v in row] for row in rows]))

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.loads(fh.read())


@dataclass(frozen=True)
class MotifChannels:
    f_mc: np.ndarray
    norm_mode: str = "l2"
    part: str = "magnitude"


def highpass_frequency(f, sigma=1.0):
    """Spectrum of the Gaussian high-pass residual, dft(f - G(f))."""
    f = np.asarray(f)
    return dft2d(f - gaussian_lowpass(f, sigma))


def normalize_planes(planes, norm_mode="l2", floor=0.0):
    """Scale each plane to unit L2 norm.  Planes with norm <= ``floor``
    are round-off residue and come back as exact zeros."""
    if norm_mode not in NORM_MODES:
        raise ValueError(f"unknown norm_mode {norm_mode!r}")
    norms = np.sqrt(np.sum(planes * planes, axis=(-2, -1), keepdims=True))
    floor = np.reshape(floor, (-1, 1, 1)) if np.ndim(floor) else floor
    live = norms > floor
    if norm_mode == "none":
        return np.where(live, planes, 0.0)
    return np.where(live, planes / np.where(live, norms, 1.0), 0.0)


def motif_channels(f, bank, norm_mode="l2", part="magnitude"):
    """Motif channels [N_s, H, W] from features f [C, H, W].

    Each window slides over the frequency planes of the high-passed features
    (real and imaginary parts alike, zero-padded), responses are summed over
    channels, brought back to the spatial domain and normalized per plane.

    A window over the spectrum acts as a smooth spatial modulation of the
    high-passed signal, so the complex spatial result carries a
    position-dependent phase.  ``part="magnitude"`` drops that phase, which
    keeps the left and right views' motif channels comparable;
    ``part="real"`` keeps the real component instead.
    """
    f = np.asarray(f)
    if f.ndim != 3:
        raise ShapeError(f"motif_channels expects [C,H,W], got {f.shape}")
    if f.shape[1] < WINDOW or f.shape[2] < WINDOW:
        raise ShapeError(f"motif_channels needs H, W >= 3, got {f.shape[1:]}")
    if part not in PARTS:
        raise ValueError(f"part must be one of {PARTS}, got {part!r}")
    spectrum = highpass_frequency(f).sum(axis=0)
    # the window is linear, so summing channels first is the same aggregation
    kern = np.asarray(bank.SW)[:, None]
    re = conv2d(spectrum.real[None], kern)
    im = conv2d(spectrum.imag[None], kern)
    z_re, z_im = idft2d(re + 1j * im, return_imag=True)
    planes = z_re if part == "real" else np.hypot(z_re, z_im)
    floor = ZERO_TOL * np.sqrt(np.sum(f * f)) * np.sqrt(np.sum(kern * kern, axis=(1, 2, 3)))
    return MotifChannels(normalize_planes(planes, norm_mode, floor).astype(f.dtype, copy=False), norm_mode, part)
