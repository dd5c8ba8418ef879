"""Finite-difference gradients, gradient checking and motif-bank fitting."""

from dataclasses import dataclass

import numpy as np


def central_difference(fn, theta, eps=1e-4, coords=None):
    """(fn(theta + eps e_i) - fn(theta - eps e_i)) / (2 eps) for each coordinate i."""
    theta = np.asarray(theta, dtype=np.float64)
    coords = range(theta.size) if coords is None else coords
    g = []
    for i in coords:
        tp = theta.copy()
        tm = theta.copy()
        tp.flat[i] += eps
        tm.flat[i] -= eps
        g.append((fn(tp) - fn(tm)) / (2.0 * eps))
    return np.array(g)


def richardson_gradient(fn, theta, h=1e-3, coords=None):
    """Central differences at h and h/2 combined to cancel the O(h^2) term."""
    coarse = central_difference(fn, theta, h, coords)
    fine = central_difference(fn, theta, h / 2, coords)
    return (4.0 * fine - coarse) / 3.0


@dataclass(frozen=True)
class GradCheck:
    max_discrepancy: float
    coords: tuple
    numeric: np.ndarray
    reference: np.ndarray


def grad_check(fn, theta, g_ref=None, eps=1e-4, coords=None, ref_h=1e-3):
    """Compare central differences at ``eps`` against a reference gradient.

    ``g_ref`` may be an array (full gradient or one entry per coordinate),
    a callable returning the full gradient, or None for a Richardson
    estimate at the independent step ``ref_h``.  The discrepancy per
    coordinate is |g_num - g_ref| / max(1, |g_num|, |g_ref|).
    """
    theta = np.asarray(theta, dtype=np.float64)
    coords = tuple(range(theta.size)) if coords is None else tuple(int(c) for c in coords)
    g_num = central_difference(fn, theta, eps, coords)
    if g_ref is None:
        ref = richardson_gradient(fn, theta, ref_h, coords)
    else:
        full = np.asarray(g_ref(theta) if callable(g_ref) else g_ref, dtype=np.float64).ravel()
        ref = full if full.size == len(coords) and full.size != theta.size else full[list(coords)]
    scale = np.maximum(1.0, np.maximum(np.abs(g_num), np.abs(ref)))
    disc = float(np.max(np.abs(g_num - ref) / scale))
    return GradCheck(disc, coords, g_num, ref)


def fit_motif_bank(objective, steps=50, lr=0.5, eps=1e-4, theta0=None, callback=None):
    """Plain gradient descent on the motif windows with central-difference gradients.

    ``objective`` maps the flat window vector to a scalar loss (for example
    a :class:`~mocha_stereo.pipeline.VolumeObjective`).  Returns (bank,
    trace) where trace[k] is the loss before step k and trace[-1] the final loss.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    theta = np.array(objective.weights.bank.flat() if theta0 is None else theta0, dtype=np.float64)
    trace = []
    for k in range(steps):
        trace.append(objective(theta))
        if lr != 0.0:
            theta = theta - lr * central_difference(objective, theta, eps)
        if callback is not None:
            callback(k, trace[-1], theta)
    trace.append(objective(theta))
    return objective.weights.bank.with_params(theta), trace
