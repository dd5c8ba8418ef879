"""Training loss and evaluation metrics for disparity maps."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LossReport:
    total: float
    init_term: float
    iter_terms: tuple
    gamma: float

    def lines(self):
        out = [f"total {self.total!r}", f"init_term {self.init_term!r}"]
        out += [f"iter_term_{i + 1} {t!r}" for i, t in enumerate(self.iter_terms)]
        out.append(f"gamma {self.gamma!r}")
        return out


@dataclass(frozen=True)
class MetricReport:
    epe: float
    bad_tau: float
    tau: float
    valid_count: int

    def lines(self):
        return [f"epe {self.epe!r}", f"bad_{self.tau} {self.bad_tau!r}", f"valid_count {self.valid_count}"]


def _mask(shape, mask):
    if mask is None:
        return np.ones(shape, dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != shape:
        raise ValueError(f"mask shape {mask.shape} != map shape {shape}")
    return mask


def smooth_l1(x):
    """Elementwise Huber with unit threshold: 0.5 x^2 inside |x| < 1, |x| - 0.5 outside."""
    a = np.abs(x)
    return np.where(a < 1.0, 0.5 * x * x, a - 0.5)


def total_loss(d0, history, d_gt, gamma=0.9, mask=None):
    """SmoothL1 on d0 plus gamma^(n-i)-weighted L1 on d_1..d_n; means over valid pixels."""
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    history = list(history)
    if not history:
        raise ValueError("history must hold at least one refined map")
    d_gt = np.asarray(d_gt)
    m = _mask(d_gt.shape, mask)
    if not m.any():
        raise ValueError("mask selects no pixels")
    init_term = float(np.mean(smooth_l1(np.asarray(d0) - d_gt)[m]))
    n = len(history)
    iter_terms = tuple(float(gamma ** (n - i) * np.mean(np.abs(np.asarray(di) - d_gt)[m]))
                       for i, di in enumerate(history, start=1))
    return LossReport(init_term + sum(iter_terms), init_term, iter_terms, gamma)


def epe(d, d_gt, mask=None):
    d_gt = np.asarray(d_gt)
    m = _mask(d_gt.shape, mask)
    if not m.any():
        raise ValueError("mask selects no pixels")
    return float(np.mean(np.abs(np.asarray(d) - d_gt)[m]))


def bad_tau(d, d_gt, tau=3.0, mask=None):
    """Percentage of valid pixels whose absolute error exceeds tau."""
    d_gt = np.asarray(d_gt)
    m = _mask(d_gt.shape, mask)
    if not m.any():
        raise ValueError("mask selects no pixels")
    return float(100.0 * np.mean((np.abs(np.asarray(d) - d_gt) > tau)[m]))


def evaluate(d, d_gt, tau=3.0, mask=None):
    m = _mask(np.shape(d_gt), mask)
    return MetricReport(epe(d, d_gt, m), bad_tau(d, d_gt, tau, m), tau, int(m.sum()))


def format_report(lines):
    return "\n".join(lines) + "\n"


def parse_report(text):
    out = {}
    for line in text.splitlines():
        if line.strip():
            key, value = line.split(None, 1)
            out[key] = float(value)
    return out
