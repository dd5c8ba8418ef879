"""Dense array numerics shared by every pipeline stage.

Arrays are plain numpy ndarrays laid out channel-first ([C, H, W] for
images, [C, D1, D2, D3] for volumes).  Kernel ops use cross-correlation
semantics (no kernel flip) and zero padding; the Gaussian low-pass is the
one exception and wraps at the borders.
"""

import numpy as np

LEAKY_SLOPE = 0.1


class ShapeError(ValueError):
    pass


def _check_odd(ksize):
    for k in ksize:
        if k % 2 != 1:
            raise ShapeError(f"kernel sizes must be odd, got {tuple(ksize)}")


def conv2d(x, kernels, bias=None):
    """Same-size 2D cross-correlation.

    x: [Cin, H, W], kernels: [Cout, Cin, kh, kw] -> [Cout, H, W]
    """
    x = np.asarray(x)
    kernels = np.asarray(kernels)
    if x.ndim != 3 or kernels.ndim != 4:
        raise ShapeError(f"conv2d expects [C,H,W] and [O,C,kh,kw], got {x.shape} and {kernels.shape}")
    cout, cin, kh, kw = kernels.shape
    if cin != x.shape[0]:
        raise ShapeError(f"conv2d channel mismatch: input has {x.shape[0]}, kernels expect {cin}")
    _check_odd((kh, kw))
    _, H, W = x.shape
    ph, pw = kh // 2, kw // 2
    xp = np.pad(x, ((0, 0), (ph, ph), (pw, pw)))
    out = np.zeros((cout, H, W), dtype=np.result_type(x, kernels))
    for i in range(kh):
        for j in range(kw):
            out += np.tensordot(kernels[:, :, i, j], xp[:, i:i + H, j:j + W], axes=(1, 0))
    if bias is not None:
        out += np.asarray(bias).reshape(-1, 1, 1)
    return out


def conv3d(x, kernels, bias=None):
    """Same-size 3D cross-correlation.

    x: [Cin, D1, D2, D3], kernels: [Cout, Cin, k1, k2, k3] -> [Cout, D1, D2, D3]
    """
    x = np.asarray(x)
    kernels = np.asarray(kernels)
    if x.ndim != 4 or kernels.ndim != 5:
        raise ShapeError(f"conv3d expects [C,D1,D2,D3] and [O,C,k1,k2,k3], got {x.shape} and {kernels.shape}")
    cout, cin, k1, k2, k3 = kernels.shape
    if cin != x.shape[0]:
        raise ShapeError(f"conv3d channel mismatch: input has {x.shape[0]}, kernels expect {cin}")
    _check_odd((k1, k2, k3))
    _, D1, D2, D3 = x.shape
    p1, p2, p3 = k1 // 2, k2 // 2, k3 // 2
    xp = np.pad(x, ((0, 0), (p1, p1), (p2, p2), (p3, p3)))
    out = np.zeros((cout, D1, D2, D3), dtype=np.result_type(x, kernels))
    for a in range(k1):
        for b in range(k2):
            for c in range(k3):
                window = xp[:, a:a + D1, b:b + D2, c:c + D3]
                out += np.tensordot(kernels[:, :, a, b, c], window, axes=(1, 0))
    if bias is not None:
        out += np.asarray(bias).reshape(-1, 1, 1, 1)
    return out


def leaky_relu(x, slope=LEAKY_SLOPE):
    return np.where(x >= 0, x, slope * x)


def sigmoid(x):
    # split by sign so exp never overflows
    x = np.asarray(x)
    out = np.empty_like(x, dtype=np.result_type(x, np.float32))
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def gaussian_kernel3(sigma=1.0, dtype=np.float64):
    """Normalized 3x3 Gaussian kernel."""
    t = np.arange(-1, 2, dtype=np.float64)
    g = np.exp(-(t[:, None] ** 2 + t[None, :] ** 2) / (2.0 * sigma * sigma))
    return (g / g.sum()).astype(dtype)


def gaussian_lowpass(x, sigma=1.0):
    """Per-channel 3x3 Gaussian blur of a [C, H, W] array.

    Borders wrap around, matching the periodic DFT that consumes the result;
    with a unit-sum kernel constants pass through unchanged.
    """
    x = np.asarray(x)
    if x.ndim != 3:
        raise ShapeError(f"gaussian_lowpass expects [C,H,W], got {x.shape}")
    g = gaussian_kernel3(sigma, dtype=x.dtype if np.issubdtype(x.dtype, np.floating) else np.float64)
    _, H, W = x.shape
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1)), mode="wrap")
    out = np.zeros(x.shape, dtype=np.result_type(x, g))
    for i in range(3):
        for j in range(3):
            out += g[i, j] * xp[:, i:i + H, j:j + W]
    return out


def dft2d(x):
    """Unnormalized forward 2D DFT over the last two axes."""
    return np.fft.fft2(np.asarray(x), axes=(-2, -1))


def idft2d(X, return_imag=False):
    """Inverse 2D DFT (divides by H*W).  Returns the real part, and the
    imaginary part as well when ``return_imag`` is set."""
    y = np.fft.ifft2(np.asarray(X), axes=(-2, -1))
    if return_imag:
        return y.real, y.imag
    return y.real


def softmax(x, axis=0):
    x = np.asarray(x)
    z = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=axis, keepdims=True)


def bilinear_sample(img, coords):
    """Sample ``img`` [C, H, W] at real-valued ``coords`` [2, H', W'] holding (x, y).

    Returns (values [C, H', W'], valid [H', W']).  A sample is valid when it
    lies inside [0, W-1] x [0, H-1]; invalid samples are 0.
    """
    img = np.asarray(img)
    coords = np.asarray(coords)
    if img.ndim != 3 or coords.ndim != 3 or coords.shape[0] != 2:
        raise ShapeError(f"bilinear_sample expects [C,H,W] and [2,H',W'], got {img.shape} and {coords.shape}")
    _, H, W = img.shape
    x, y = coords[0], coords[1]
    valid = (x >= 0) & (x <= W - 1) & (y >= 0) & (y <= H - 1) & np.isfinite(x) & np.isfinite(y)
    xs = np.where(valid, x, 0.0)
    ys = np.where(valid, y, 0.0)
    x0 = np.clip(np.floor(xs).astype(np.int64), 0, W - 1)
    y0 = np.clip(np.floor(ys).astype(np.int64), 0, H - 1)
    x1 = np.minimum(x0 + 1, W - 1)
    y1 = np.minimum(y0 + 1, H - 1)
    ax = xs - x0
    ay = ys - y0
    out = (img[:, y0, x0] * ((1 - ax) * (1 - ay))
           + img[:, y0, x1] * (ax * (1 - ay))
           + img[:, y1, x0] * ((1 - ax) * ay)
           + img[:, y1, x1] * (ax * ay))
    out = np.where(valid, out, 0.0).astype(np.result_type(img, coords))
    return out, valid


def avg_pool(x, k):
    """Non-overlapping k x k mean pooling of [C, H, W]."""
    x = np.asarray(x)
    C, H, W = x.shape
    if H % k or W % k:
        raise ShapeError(f"avg_pool: {H}x{W} not divisible by {k}")
    return x.reshape(C, H // k, k, W // k, k).mean(axis=(2, 4))


def _interp_matrix(n_in, factor, dtype):
    # align_corners=False source coordinates, clamped at the borders
    n_out = n_in * factor
    src = (np.arange(n_out) + 0.5) / factor - 0.5
    src = np.clip(src, 0, n_in - 1)
    i0 = np.floor(src).astype(np.int64)
    i1 = np.minimum(i0 + 1, n_in - 1)
    a = src - i0
    M = np.zeros((n_out, n_in), dtype=dtype)
    M[np.arange(n_out), i0] += 1 - a
    M[np.arange(n_out), i1] += a
    return M


def upsample_bilinear(x, factor):
    """Bilinear upsampling of [C, H, W] by an integer factor (half-pixel centers)."""
    x = np.asarray(x)
    C, H, W = x.shape
    dtype = np.result_type(x, np.float32)
    Mh = _interp_matrix(H, factor, dtype)
    Mw = _interp_matrix(W, factor, dtype)
    return np.einsum("ph,chw,qw->cpq", Mh, x, Mw)
