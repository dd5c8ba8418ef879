"""Seeded Siamese convolutional pyramids used as feature and context extractors."""

from dataclasses import dataclass

import numpy as np

from .kernels import conv2d, leaky_relu

FEATURE_CHANNELS = (16, 32, 48, 64, 96)  # outputs at 1/2, 1/4, 1/8, 1/16, 1/32
CONTEXT_CHANNELS = (16, 32, 32, 32)      # outputs at 1/2, 1/4, 1/8, 1/16
FEATURE_SCALES = (4, 8, 16, 32)
CONTEXT_SCALES = (4, 8, 16)


@dataclass(frozen=True)
class FeaturePyramid:
    """Per-view features keyed by scale.  ``left``/``right`` hold the
    (optionally normalized) features; ``raw_left``/``raw_right`` the conv
    outputs before normalization."""

    left: dict
    right: dict
    raw_left: dict = None
    raw_right: dict = None

    def channels(self, scale):
        return self.left[scale].shape[0]


def pyramid_weights(channels, seed, in_channels=3, stream=0, dtype=np.float64):
    rng = np.random.default_rng([seed, stream])
    weights = []
    cin = in_channels
    for cout in channels:
        fan_in = cin * 9
        weights.append((rng.standard_normal((cout, cin, 3, 3)) / np.sqrt(fan_in)).astype(dtype))
        cin = cout
    return weights


def run_pyramid(img, weights):
    """Apply stride-2 conv + leaky ReLU stages; returns outputs keyed by scale."""
    x = 2.0 * np.asarray(img) - 1.0
    out = {}
    scale = 1
    for w in weights:
        x = leaky_relu(conv2d(x, w))[:, ::2, ::2]
        scale *= 2
        out[scale] = x
    return out


def normalize_features(f, eps=1e-12):
    """Per-pixel: remove the channel mean, then scale to unit L2 norm."""
    f = f - f.mean(axis=0, keepdims=True)
    norm = np.sqrt(np.sum(f * f, axis=0, keepdims=True))
    return f / np.maximum(norm, eps)


def _check_size(img, multiple):
    _, H, W = np.shape(img)
    if H % multiple or W % multiple:
        raise ValueError(f"image size {H}x{W} must be divisible by {multiple}")


def extract_features(img_l, img_r, seed=0, dtype=np.float64, normalize=True):
    """Left/right features at 1/4..1/32 with shared weights.

    With ``normalize`` every feature vector is centered and unit-length, so
    correlation costs behave like normalized cross-correlation.  The
    un-normalized maps stay available as ``raw_left``/``raw_right``: centered
    vectors sum to zero over channels, which would erase any channel-summed
    statistic such as the motif channels.
    """
    _check_size(img_l, 32)
    if np.shape(img_l) != np.shape(img_r):
        raise ValueError(f"left/right shapes differ: {np.shape(img_l)} vs {np.shape(img_r)}")
    w = pyramid_weights(FEATURE_CHANNELS, seed, stream=0, dtype=dtype)
    left = run_pyramid(np.asarray(img_l, dtype=dtype), w)
    right = run_pyramid(np.asarray(img_r, dtype=dtype), w)
    post = normalize_features if normalize else (lambda f: f)
    return FeaturePyramid({s: post(left[s]) for s in FEATURE_SCALES},
                          {s: post(right[s]) for s in FEATURE_SCALES},
                          {s: left[s] for s in FEATURE_SCALES},
                          {s: right[s] for s in FEATURE_SCALES})


def extract_context(img_l, seed=0, dtype=np.float64):
    """Left-view context maps at 1/4, 1/8 and 1/16."""
    _check_size(img_l, 16)
    w = pyramid_weights(CONTEXT_CHANNELS, seed, stream=1, dtype=dtype)
    out = run_pyramid(np.asarray(img_l, dtype=dtype), w)
    return {s: out[s] for s in CONTEXT_SCALES}
