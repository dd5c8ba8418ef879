"""Motif channel correlation volume.

Shift conventions: ``shift_sign="minus"`` pairs left column w with right
column w - d (left-referenced disparity); ``shift_sign="plus"`` uses w + d.
Sites whose partner column falls outside the map contribute zero.
"""

from dataclasses import dataclass

import numpy as np

from .kernels import ShapeError, conv3d, leaky_relu, softmax

SHIFT_SIGNS = ("minus", "plus")


@dataclass(frozen=True)
class GroupVolume:
    C_g: np.ndarray  # [N_g, D, H, W]
    n_groups: int
    n_channels: int
    shift_sign: str = "minus"


@dataclass(frozen=True)
class ChannelCorrVolume:
    C_c: np.ndarray  # [D, H, W]
    embed_weights: np.ndarray


@dataclass(frozen=True)
class FusedVolume:
    C: np.ndarray  # [D, H, W]
    V_g: np.ndarray  # [N_g, D, H, W]

    @property
    def max_disp(self):
        return self.C.shape[0]


def _check_shift(shift_sign):
    if shift_sign not in SHIFT_SIGNS:
        raise ValueError(f"shift_sign must be one of {SHIFT_SIGNS}, got {shift_sign!r}")


def _shifted_products(a, b, D, shift_sign):
    """out[..., d, h, w] = a[..., h, w] * b[..., h, w -/+ d], zero-filled.

    a, b: [..., H, W] -> [..., D, H, W]
    """
    W = a.shape[-1]
    out = np.zeros(a.shape[:-2] + (D,) + a.shape[-2:], dtype=np.result_type(a, b))
    for d in range(D):
        if shift_sign == "minus":
            out[..., d, :, d:] = a[..., :, d:] * b[..., :, :W - d]
        else:
            out[..., d, :, :W - d] = a[..., :, :W - d] * b[..., :, d:]
    return out


def _check_disp(D, W):
    if D < 1 or D > W:
        raise ValueError(f"max disparity must be in [1, {W}], got {D}")


def gwc_volume(f_l, f_r, max_disp, n_groups=8, shift_sign="minus"):
    """Group-wise correlation: per-group channel mean of f_l * shifted f_r."""
    f_l = np.asarray(f_l)
    f_r = np.asarray(f_r)
    _check_shift(shift_sign)
    if f_l.shape != f_r.shape or f_l.ndim != 3:
        raise ShapeError(f"gwc_volume needs matching [C,H,W] features, got {f_l.shape} and {f_r.shape}")
    C, H, W = f_l.shape
    if C % n_groups:
        raise ValueError(f"{C} channels not divisible into {n_groups} groups")
    _check_disp(max_disp, W)
    per = C // n_groups
    prod = _shifted_products(f_l.reshape(n_groups, per, H, W), f_r.reshape(n_groups, per, H, W),
                             max_disp, shift_sign)
    return GroupVolume(prod.sum(axis=1) / per, n_groups, C, shift_sign)


def camp(f_mc, f_l):
    """Channel affinity tensor [N_s, N_c, H, W]: every motif plane times every feature plane."""
    f_mc = np.asarray(getattr(f_mc, "f_mc", f_mc))
    f_l = np.asarray(f_l)
    if f_mc.shape[1:] != f_l.shape[1:]:
        raise ShapeError(f"camp: spatial mismatch {f_mc.shape[1:]} vs {f_l.shape[1:]}")
    return f_mc[:, None] * f_l[None]


def init_embed_weights(k_e=4, seed=0, dtype=np.float64):
    rng = np.random.default_rng([seed, 2])
    return (rng.standard_normal((k_e, 1, 3, 3, 3)) / np.sqrt(27.0)).astype(dtype)


def embed(camp_t, embed_weights):
    """3D-conv embedding over (c, h, w) with motif index as batch -> [N_s, K_e, N_c, H, W].

    Same result as ``conv3d(camp_t[s][None], embed_weights)`` per motif plane,
    evaluated for all planes at once.
    """
    camp_t = np.asarray(camp_t)
    w = np.asarray(embed_weights)
    if w.ndim != 5 or w.shape[1] != 1:
        raise ShapeError(f"embedding kernels must be [K_e, 1, k1, k2, k3], got {w.shape}")
    K, _, k1, k2, k3 = w.shape
    S, C, H, W = camp_t.shape
    xp = np.pad(camp_t, ((0, 0), (k1 // 2,) * 2, (k2 // 2,) * 2, (k3 // 2,) * 2))
    out = np.zeros((S, K, C, H, W), dtype=np.result_type(camp_t, w))
    for a in range(k1):
        for b in range(k2):
            for c in range(k3):
                win = xp[:, None, a:a + C, b:b + H, c:c + W]
                out += w[None, :, 0, a, b, c, None, None, None] * win
    return out


def _shifted_dot(a, b, D, shift_sign):
    """out[d, h, w] = sum_p a[p, h, w] * b[p, h, w -/+ d], zero-filled."""
    H, W = a.shape[-2:]
    out = np.zeros((D, H, W), dtype=np.result_type(a, b))
    for d in range(D):
        if shift_sign == "minus":
            out[d, :, d:] = np.einsum("phw,phw->hw", a[:, :, d:], b[:, :, :W - d])
        else:
            out[d, :, :W - d] = np.einsum("phw,phw->hw", a[:, :, :W - d], b[:, :, d:])
    return out


def feature_embedding(f, embed_weights):
    """Feature-only half of the CAMP embedding.

    Since CAMP(s, c, h, w) = f_mc(s, h, w) * f(c, h, w), the 3D conv splits
    into spatial taps of the motif plane times G[k, tap, c, h, w], the sum
    over the channel taps of the kernel applied to f.  G is reusable while
    only the motif windows change.
    """
    f = np.asarray(f)
    w = np.asarray(embed_weights)
    K, _, k1, k2, k3 = w.shape
    C, H, W = f.shape
    fp = np.pad(f, ((k1 // 2,) * 2, (k2 // 2,) * 2, (k3 // 2,) * 2))
    G = np.zeros((K, k2 * k3, C, H, W), dtype=np.result_type(f, w))
    for b in range(k2):
        for c in range(k3):
            for a in range(k1):
                G[:, b * k3 + c] += w[:, 0, a, b, c, None, None, None] * fp[None, a:a + C, b:b + H, c:c + W]
    return G


def embed_factored(f_mc, G, ksize=(3, 3)):
    """Embedding [N_s, K_e, N_c, H, W] of f_mc x f from cached ``feature_embedding``."""
    f_mc = np.asarray(getattr(f_mc, "f_mc", f_mc))
    k2, k3 = ksize
    S, H, W = f_mc.shape
    mp = np.pad(f_mc, ((0, 0), (k2 // 2,) * 2, (k3 // 2,) * 2))
    taps = np.stack([mp[:, b:b + H, c:c + W] for b in range(k2) for c in range(k3)], axis=1)
    return np.einsum("sthw,ktchw->skchw", taps, G, optimize=True)


def correlate_embeddings(E_l, E_r, max_disp, shift_sign="minus"):
    S, K, C, H, W = E_l.shape
    return _shifted_dot(E_l.reshape(S * K * C, H, W), E_r.reshape(S * K * C, H, W), max_disp, shift_sign)


def channel_correlation(camp_l, embed_weights, max_disp, shift_sign="minus", camp_r=None):
    """Correlate embedded CAMP with its disparity-shifted copy.

    Single-view by default; pass ``camp_r`` to correlate left against right.
    """
    _check_shift(shift_sign)
    camp_l = np.asarray(camp_l)
    if camp_l.ndim != 4:
        raise ShapeError(f"camp must be [N_s,N_c,H,W], got {camp_l.shape}")
    _check_disp(max_disp, camp_l.shape[-1])
    E_l = embed(camp_l, embed_weights)
    if camp_r is None:
        E_r = E_l
    else:
        if np.shape(camp_r) != camp_l.shape:
            raise ShapeError(f"right camp shape {np.shape(camp_r)} != left {camp_l.shape}")
        E_r = embed(np.asarray(camp_r), embed_weights)
    return ChannelCorrVolume(correlate_embeddings(E_l, E_r, max_disp, shift_sign), embed_weights)


def mccv_combine(gv, cc):
    """Broadcast the channel correlation over groups and sum."""
    C_g = gv.C_g if isinstance(gv, GroupVolume) else np.asarray(gv)
    C_c = cc.C_c if isinstance(cc, ChannelCorrVolume) else np.asarray(cc)
    if C_g.shape[1:] != C_c.shape:
        raise ShapeError(f"mccv_combine: group volume {C_g.shape} vs channel volume {C_c.shape}")
    V_g = C_g * C_c[None]
    return FusedVolume(V_g.sum(axis=0), V_g)


@dataclass
class AggregationHead:
    """Two 3x3x3 conv layers reducing the N_g stacked volumes to one score per (d, h, w)."""

    w1: np.ndarray  # [hidden, N_g, 3, 3, 3]
    w2: np.ndarray  # [1, hidden, 3, 3, 3]

    @classmethod
    def init(cls, n_groups=8, seed=0, hidden=8, gain=1.0, noise=0.0, dtype=np.float64):
        """Group-summing initialization plus optional seeded noise.

        With noise=0 the scores equal ``gain * leaky_relu(sum_g V_g)``, i.e. the
        head starts out as a temperature-scaled readout of the fused volume.
        """
        rng = np.random.default_rng([seed, 3])
        w1 = noise * rng.standard_normal((hidden, n_groups, 3, 3, 3)) / np.sqrt(n_groups * 27)
        w2 = noise * rng.standard_normal((1, hidden, 3, 3, 3)) / np.sqrt(hidden * 27)
        w1[:, :, 1, 1, 1] += 1.0
        w2[:, :, 1, 1, 1] += gain / hidden
        return cls(w1.astype(dtype), w2.astype(dtype))

    @classmethod
    def random(cls, n_groups=8, seed=0, hidden=8, dtype=np.float64):
        rng = np.random.default_rng([seed, 3])
        w1 = rng.standard_normal((hidden, n_groups, 3, 3, 3)) / np.sqrt(n_groups * 27)
        w2 = rng.standard_normal((1, hidden, 3, 3, 3)) / np.sqrt(hidden * 27)
        return cls(w1.astype(dtype), w2.astype(dtype))

    def scores(self, V_g):
        return conv3d(leaky_relu(conv3d(V_g, self.w1)), self.w2)[0]


def soft_argmax(scores):
    """Expected disparity under softmax over the leading (disparity) axis."""
    p = softmax(scores, axis=0)
    d = np.arange(scores.shape[0], dtype=p.dtype).reshape((-1,) + (1,) * (scores.ndim - 1))
    return np.sum(d * p, axis=0)


def init_disparity(V_g, head):
    """Initial disparity map [H, W] from the per-group projected volumes."""
    V_g = getattr(V_g, "V_g", V_g)
    return soft_argmax(head.scores(np.asarray(V_g)))


def hard_argmax(C):
    """Integer disparity of the largest cost per pixel (zero-training readout)."""
    C = getattr(C, "C", C)
    return np.argmax(np.asarray(C), axis=0)


def dump_volume(path, C):
    C = np.asarray(getattr(C, "C", C))
    D, H, W = C.shape
    with open(path, "wb") as fh:
        fh.write(f"MCCV {D} {H} {W}\n".encode("ascii"))
        fh.write(C.astype("<f4").tobytes())


def load_volume(path):
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").split()
        if len(header) != 4 or header[0] != "MCCV":
            raise ValueError(f"{path}: bad volume header {header!r}")
        D, H, W = map(int, header[1:])
        data = np.frombuffer(fh.read(), dtype="<f4")
    if data.size != D * H * W:
        raise ValueError(f"{path}: expected {D * H * W} values, found {data.size}")
    return data.reshape(D, H, W)
