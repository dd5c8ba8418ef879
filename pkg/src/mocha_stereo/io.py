"""PFM, PGM (P5) and PPM (P6) readers and writers.

Multi-channel data is channel-first in memory ([3, H, W]) and interleaved
on disk.  PFM rows are stored bottom-to-top.
"""

import numpy as np


class FormatError(ValueError):
    def __init__(self, path, offset, msg):
        super().__init__(f"{path}: byte {offset}: {msg}")
        self.offset = offset


def _read_token(buf, pos, path):
    """Next whitespace-delimited header token, skipping '#' comments."""
    n = len(buf)
    while pos < n:
        ch = buf[pos:pos + 1]
        if ch.isspace():
            pos += 1
        elif ch == b"#":
            while pos < n and buf[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
        else:
            break
    start = pos
    while pos < n and not buf[pos:pos + 1].isspace():
        pos += 1
    if start == pos:
        raise FormatError(path, start, "unexpected end of header")
    return buf[start:pos], start, pos


def _read_int(buf, pos, path, what):
    tok, start, pos = _read_token(buf, pos, path)
    try:
        val = int(tok)
    except ValueError:
        raise FormatError(path, start, f"{what} is not an integer: {tok!r}") from None
    if val < 1:
        raise FormatError(path, start, f"{what} must be positive, got {val}")
    return val, pos


def read_pfm(path):
    """Returns (data, scale).  data is [H, W] for 'Pf' and [3, H, W] for 'PF'."""
    with open(path, "rb") as fh:
        buf = fh.read()
    tok, start, pos = _read_token(buf, 0, path)
    if tok == b"PF":
        channels = 3
    elif tok == b"Pf":
        channels = 1
    else:
        raise FormatError(path, start, f"bad PFM magic {tok!r}")
    width, pos = _read_int(buf, pos, path, "width")
    height, pos = _read_int(buf, pos, path, "height")
    tok, start, pos = _read_token(buf, pos, path)
    try:
        scale = float(tok)
    except ValueError:
        raise FormatError(path, start, f"scale is not a number: {tok!r}") from None
    if scale == 0.0:
        raise FormatError(path, start, "scale must be nonzero")
    pos += 1  # single whitespace byte ends the header
    endian = "<" if scale < 0 else ">"
    count = width * height * channels
    need = 4 * count
    if len(buf) - pos < need:
        raise FormatError(path, len(buf), f"truncated payload: expected {need} bytes after offset {pos}, "
                                          f"found {len(buf) - pos}")
    data = np.frombuffer(buf, dtype=endian + "f4", count=count, offset=pos).astype(np.float32)
    data = data.reshape(height, width, channels)[::-1]
    if channels == 1:
        return np.ascontiguousarray(data[:, :, 0]), abs(scale)
    return np.ascontiguousarray(data.transpose(2, 0, 1)), abs(scale)


def write_pfm(path, data, scale=1.0, little_endian=True):
    data = np.asarray(data)
    if data.ndim == 2:
        magic, rows = b"Pf", data[:, :, None]
    elif data.ndim == 3 and data.shape[0] == 3:
        magic, rows = b"PF", data.transpose(1, 2, 0)
    else:
        raise ValueError(f"PFM data must be [H, W] or [3, H, W], got {data.shape}")
    H, W = rows.shape[:2]
    s = -abs(scale) if little_endian else abs(scale)
    payload = np.ascontiguousarray(rows[::-1], dtype=("<" if little_endian else ">") + "f4")
    with open(path, "wb") as fh:
        fh.write(magic + b"\n" + f"{W} {H}\n".encode("ascii") + f"{s!r}\n".encode("ascii"))
        fh.write(payload.tobytes())


def _read_pnm(path, magic):
    with open(path, "rb") as fh:
        buf = fh.read()
    tok, start, pos = _read_token(buf, 0, path)
    if tok != magic:
        raise FormatError(path, start, f"expected magic {magic!r}, got {tok!r}")
    width, pos = _read_int(buf, pos, path, "width")
    height, pos = _read_int(buf, pos, path, "height")
    maxval, pos = _read_int(buf, pos, path, "maxval")
    if maxval > 255:
        raise FormatError(path, pos, f"only 8-bit maxval supported, got {maxval}")
    pos += 1
    channels = 3 if magic == b"P6" else 1
    need = width * height * channels
    if len(buf) - pos < need:
        raise FormatError(path, len(buf), f"truncated payload: expected {need} bytes after offset {pos}, "
                                          f"found {len(buf) - pos}")
    data = np.frombuffer(buf, dtype=np.uint8, count=need, offset=pos).reshape(height, width, channels)
    return data


def _to_bytes(data):
    return np.clip(np.rint(np.asarray(data, dtype=np.float64)), 0, 255).astype(np.uint8)


def read_pgm(path):
    """8-bit binary P5 -> uint8 [H, W]."""
    return np.ascontiguousarray(_read_pnm(path, b"P5")[:, :, 0])


def write_pgm(path, data):
    """Write [H, W] values as P5; values are rounded and clamped to [0, 255]."""
    data = _to_bytes(data)
    if data.ndim != 2:
        raise ValueError(f"PGM data must be [H, W], got {data.shape}")
    H, W = data.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{W} {H}\n255\n".encode("ascii"))
        fh.write(data.tobytes())


def read_ppm(path):
    """8-bit binary P6 -> uint8 [3, H, W]."""
    return np.ascontiguousarray(_read_pnm(path, b"P6").transpose(2, 0, 1))


def write_ppm(path, data):
    """Write [3, H, W] values as P6; values are rounded and clamped to [0, 255]."""
    data = _to_bytes(data)
    if data.ndim != 3 or data.shape[0] != 3:
        raise ValueError(f"PPM data must be [3, H, W], got {data.shape}")
    _, H, W = data.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{W} {H}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(data.transpose(1, 2, 0)).tobytes())
