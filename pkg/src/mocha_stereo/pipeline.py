"""End-to-end matching pipeline and the volume-chain objective used for
gradient checks and motif-bank fitting."""

from dataclasses import dataclass

import numpy as np

from .features import extract_context, extract_features
from .kernels import avg_pool
from .metrics import total_loss
from .motif import MotifBank, motif_channels
from .refine import RempWeights, StereoRig, reconstruction_error, remp, upsample_disparity
from .update import UpdaterWeights, iterate
from .volume import (AggregationHead, ChannelCorrVolume, camp, channel_correlation, correlate_embeddings,
                     embed_factored, feature_embedding, gwc_volume, hard_argmax, init_disparity,
                     init_embed_weights, mccv_combine)


@dataclass
class PipelineWeights:
    bank: MotifBank
    embed: np.ndarray
    agg: AggregationHead
    updater: UpdaterWeights
    remp: RempWeights

    @classmethod
    def from_config(cls, cfg):
        dt = cfg.np_dtype
        return cls(
            bank=MotifBank.random(cfg.n_motif, seed=cfg.motif_seed, dtype=dt),
            embed=init_embed_weights(cfg.k_embed, seed=cfg.embed_seed, dtype=dt),
            agg=AggregationHead.init(cfg.n_groups, seed=cfg.agg_seed, gain=cfg.agg_gain, dtype=dt),
            updater=UpdaterWeights.init(seed=cfg.updater_seed, radius=cfg.radius, dtype=dt),
            remp=RempWeights.init(seed=cfg.remp_seed, dtype=dt),
        )


@dataclass
class MatchResult:
    fused: object
    d0: np.ndarray
    state: object
    d_up: np.ndarray
    error: object
    disparity: np.ndarray


def build_volume(f_l, f_r, bank, embed, cfg, raw_l=None, raw_r=None):
    """Group volume, channel correlation and fused volume at quarter resolution.

    Motif channels are mined from ``raw_l``/``raw_r`` (the un-normalized
    features) when given, otherwise from the features themselves.
    """
    raw_l = f_l if raw_l is None else raw_l
    raw_r = f_r if raw_r is None else raw_r
    gv = gwc_volume(f_l, f_r, cfg.max_disp, cfg.n_groups, cfg.shift_sign)
    camp_l = camp(motif_channels(raw_l, bank, cfg.norm_mode, cfg.motif_part), f_l)
    camp_r = None
    if cfg.two_view:
        camp_r = camp(motif_channels(raw_r, bank, cfg.norm_mode, cfg.motif_part), f_r)
    cc = channel_correlation(camp_l, embed, cfg.max_disp, cfg.shift_sign, camp_r)
    return gv, cc, mccv_combine(gv, cc)


def match(I_l, I_r, cfg, weights=None, rig=None, iters=None):
    dt = cfg.np_dtype
    I_l = np.asarray(I_l, dtype=dt)
    I_r = np.asarray(I_r, dtype=dt)
    weights = weights or PipelineWeights.from_config(cfg)
    _, H, W = I_l.shape
    rig = rig or StereoRig.rectified(cfg.focal, cfg.baseline, size=(H, W))
    n = cfg.iters if iters is None else iters

    fp = extract_features(I_l, I_r, seed=cfg.feature_seed, dtype=dt)
    ctx = extract_context(I_l, seed=cfg.feature_seed, dtype=dt)
    _, _, fused = build_volume(fp.left[4], fp.right[4], weights.bank, weights.embed, cfg,
                               fp.raw_left[4], fp.raw_right[4])
    d0 = init_disparity(fused, weights.agg)
    state = iterate(fused, d0, ctx[4], weights.updater, n, cfg.radius)
    d_up = upsample_disparity(state.d)
    err = reconstruction_error(I_l, I_r, d_up, rig)
    d_final = remp(d_up, err, weights.remp)
    return MatchResult(fused, d0, state, d_up, err, d_final)


def quarter_ground_truth(d_gt, valid, margin=0):
    """Quarter-resolution disparity (in quarter pixels) and its mask.

    A block is kept only if all its pixels are valid and share one
    disparity; ``margin`` then erodes the mask by that many quarter pixels,
    treating the image border as invalid.
    """
    d_gt = np.asarray(d_gt, dtype=np.float64)
    dq = avg_pool(d_gt[None], 4)[0] / 4
    var = avg_pool(d_gt[None] ** 2, 4)[0] / 16 - dq ** 2
    mask = (avg_pool(np.asarray(valid, dtype=np.float64)[None], 4)[0] == 1) & (var < 1e-9)
    for _ in range(margin):
        shrunk = np.zeros_like(mask)
        shrunk[1:-1, 1:-1] = mask[1:-1, 1:-1]
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                shrunk[1:-1, 1:-1] &= mask[1 + dy:mask.shape[0] - 1 + dy, 1 + dx:mask.shape[1] - 1 + dx]
        mask = shrunk
    return dq, mask


def argmax_readout(fused):
    return hard_argmax(fused)


class VolumeObjective:
    """Loss of the chain motif windows -> motif channels -> CAMP -> channel
    correlation -> fused volume -> initial disparity -> loss, with features
    and group volumes cached per scene.

    The loss uses d_0 both as the initial map and as the single refined
    map, so it stays a smooth function of the window weights.  The CAMP
    embedding runs in factored form (see ``feature_embedding``).
    """

    def __init__(self, scenes, cfg, weights=None):
        cfg = cfg.with_(dtype="float64")
        self.cfg = cfg
        self.weights = weights or PipelineWeights.from_config(cfg)
        self.cache = []
        for I_l, I_r, d_gt, valid in scenes:
            fp = extract_features(I_l, I_r, seed=cfg.feature_seed)
            f_l, f_r = fp.left[4], fp.right[4]
            gv = gwc_volume(f_l, f_r, cfg.max_disp, cfg.n_groups, cfg.shift_sign)
            G_l = feature_embedding(f_l, self.weights.embed)
            G_r = feature_embedding(f_r, self.weights.embed) if cfg.two_view else None
            dq, mq = quarter_ground_truth(d_gt, valid)
            self.cache.append((fp.raw_left[4], fp.raw_right[4], gv, G_l, G_r, dq, mq))

    @property
    def n_params(self):
        return self.weights.bank.SW.size

    def scene_loss(self, bank, k):
        cfg = self.cfg
        raw_l, raw_r, gv, G_l, G_r, dq, mq = self.cache[k]
        E_l = embed_factored(motif_channels(raw_l, bank, cfg.norm_mode, cfg.motif_part), G_l)
        E_r = E_l
        if cfg.two_view:
            E_r = embed_factored(motif_channels(raw_r, bank, cfg.norm_mode, cfg.motif_part), G_r)
        cc = ChannelCorrVolume(correlate_embeddings(E_l, E_r, cfg.max_disp, cfg.shift_sign), self.weights.embed)
        d0 = init_disparity(mccv_combine(gv, cc), self.weights.agg)
        return total_loss(d0, [d0], dq, cfg.gamma, mq).total

    def __call__(self, theta):
        bank = self.weights.bank.with_params(theta)
        return float(np.mean([self.scene_loss(bank, k) for k in range(len(self.cache))]))
