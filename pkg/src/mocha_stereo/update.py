"""Iterative disparity updates at quarter resolution with a small conv-GRU."""

from dataclasses import dataclass, field

import numpy as np

from .kernels import ShapeError, conv2d, leaky_relu, sigmoid

HIDDEN = 32
RADIUS = 4
MOTION = 16


def lookup(C, d, radius=RADIUS):
    """Sample the cost volume C [D, H, W] at d + o for o in [-radius, radius].

    Linear interpolation along disparity; positions outside [0, D-1] clamp
    to the nearest slice.  Returns [2r+1, H, W].
    """
    C = np.asarray(getattr(C, "C", C))
    d = np.asarray(d)
    D, H, W = C.shape
    if d.shape != (H, W):
        raise ShapeError(f"disparity {d.shape} does not match volume {C.shape}")
    offsets = np.arange(-radius, radius + 1, dtype=d.dtype).reshape(-1, 1, 1)
    pos = np.clip(d[None] + offsets, 0, D - 1)
    base = np.floor(pos)
    a = pos - base
    lo = base.astype(np.int64)
    hi = np.minimum(lo + 1, D - 1)
    rows = np.arange(H)[None, :, None]
    cols = np.arange(W)[None, None, :]
    return C[lo, rows, cols] * (1 - a) + C[hi, rows, cols] * a


@dataclass
class UpdaterWeights:
    motion: np.ndarray  # [MOTION, 2r+2, 3, 3]
    z: np.ndarray  # [C_h, C_h + C_ctx + MOTION, 3, 3]
    r: np.ndarray
    q: np.ndarray
    head: np.ndarray  # [1, C_h, 3, 3]
    head_bias: float = 0.0

    @property
    def hidden(self):
        return self.z.shape[0]

    @classmethod
    def init(cls, seed=0, hidden=HIDDEN, context=32, radius=RADIUS, head_gain=0.1, dtype=np.float64):
        rng = np.random.default_rng([seed, 4])

        def conv(cout, cin, gain=1.0):
            return (gain * rng.standard_normal((cout, cin, 3, 3)) / np.sqrt(cin * 9)).astype(dtype)

        n_in = hidden + context + MOTION
        return cls(
            motion=conv(MOTION, 2 * radius + 2),
            z=conv(hidden, n_in),
            r=conv(hidden, n_in),
            q=conv(hidden, n_in),
            head=conv(1, hidden, head_gain),
        )

    @classmethod
    def zeros(cls, hidden=HIDDEN, context=32, radius=RADIUS, dtype=np.float64):
        n_in = hidden + context + MOTION
        return cls(
            motion=np.zeros((MOTION, 2 * radius + 2, 3, 3), dtype),
            z=np.zeros((hidden, n_in, 3, 3), dtype),
            r=np.zeros((hidden, n_in, 3, 3), dtype),
            q=np.zeros((hidden, n_in, 3, 3), dtype),
            head=np.zeros((1, hidden, 3, 3), dtype),
        )


@dataclass
class DisparityState:
    d: np.ndarray
    hidden: np.ndarray
    history: list = field(default_factory=list)

    @classmethod
    def start(cls, d0, context=None, hidden=HIDDEN):
        d0 = np.asarray(d0)
        if context is None:
            h = np.zeros((hidden,) + d0.shape, dtype=d0.dtype)
        else:
            context = np.asarray(context)
            if context.shape[0] < hidden:
                raise ShapeError(f"context has {context.shape[0]} channels, need >= {hidden} to seed the hidden state")
            h = np.tanh(context[:hidden])
        return cls(d0, h, [d0])


def motion_features(corr, d, w):
    return leaky_relu(conv2d(np.concatenate([corr, d[None]]), w.motion))


def gru_step(state, context, corr, w):
    """One conv-GRU update; returns a new state with d + delta appended to history."""
    h = state.hidden
    if h.shape[0] != w.hidden:
        raise ShapeError(f"hidden state has {h.shape[0]} channels, weights expect {w.hidden}")
    x = np.concatenate([context, motion_features(corr, state.d, w)])
    hx = np.concatenate([h, x])
    z = sigmoid(conv2d(hx, w.z))
    r = sigmoid(conv2d(hx, w.r))
    q = np.tanh(conv2d(np.concatenate([r * h, x]), w.q))
    h_new = (1 - z) * h + z * q
    delta = conv2d(h_new, w.head)[0] + w.head_bias
    d_new = state.d + delta
    return DisparityState(d_new, h_new, state.history + [d_new])


def iterate(C, d0, context, w, n_iters, radius=RADIUS):
    """Run ``n_iters`` updates from d0; the state's history holds d_0..d_n."""
    state = DisparityState.start(d0, context, w.hidden)
    for _ in range(n_iters):
        state = gru_step(state, context, lookup(C, state.d, radius), w)
    return state
