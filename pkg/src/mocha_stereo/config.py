"""Run configuration read from ``key = value`` text."""

from dataclasses import dataclass, fields, replace

import numpy as np

from .motif import NORM_MODES, PARTS
from .volume import SHIFT_SIGNS


@dataclass(frozen=True)
class RunConfig:
    height: int = 64
    width: int = 64
    n_motif: int = 4
    n_groups: int = 8
    max_disp: int = 16
    iters: int = 4
    radius: int = 4
    gamma: float = 0.9
    k_embed: int = 4
    feature_seed: int = 0
    motif_seed: int = 0
    embed_seed: int = 0
    agg_seed: int = 0
    updater_seed: int = 0
    remp_seed: int = 0
    shift_sign: str = "minus"
    two_view: bool = True
    norm_mode: str = "l2"
    motif_part: str = "magnitude"
    agg_gain: float = 1000.0
    tau: float = 3.0
    focal: float = 100.0
    baseline: float = 0.5
    dtype: str = "float32"
    out_dir: str = "."

    def __post_init__(self):
        for name in ("height", "width", "n_motif", "n_groups", "max_disp", "radius", "k_embed"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.iters < 0:
            raise ValueError("iters must be >= 0")
        if self.height % 32 or self.width % 32:
            raise ValueError(f"image size {self.height}x{self.width} must be divisible by 32")
        if self.max_disp > self.width // 4:
            raise ValueError(f"max_disp {self.max_disp} exceeds quarter width {self.width // 4}")
        if self.shift_sign not in SHIFT_SIGNS:
            raise ValueError(f"shift_sign must be one of {SHIFT_SIGNS}")
        if self.norm_mode not in NORM_MODES:
            raise ValueError(f"norm_mode must be one of {NORM_MODES}")
        if self.motif_part not in PARTS:
            raise ValueError(f"motif_part must be one of {PARTS}")
        if self.dtype not in ("float32", "float64"):
            raise ValueError("dtype must be float32 or float64")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError("gamma must lie in (0, 1]")

    @property
    def np_dtype(self):
        return np.dtype(self.dtype)

    def with_(self, **kw):
        return replace(self, **kw)

    def dumps(self):
        return "".join(f"{f.name} = {_fmt(getattr(self, f.name))}\n" for f in fields(self))


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def _coerce(name, typ, raw):
    if typ is bool or typ == "bool":
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{name}: not a boolean: {raw!r}")
    if typ is int or typ == "int":
        return int(raw)
    if typ is float or typ == "float":
        return float(raw)
    return raw


def parse_config(text, base=None):
    """Parse config text; unknown keys and malformed lines raise ValueError."""
    known = {f.name: f.type for f in fields(RunConfig)}
    values = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {n}: expected 'key = value', got {line!r}")
        key, raw = (p.strip() for p in line.split("=", 1))
        if key not in known:
            raise ValueError(f"config line {n}: unknown key {key!r}")
        values[key] = _coerce(key, known[key], raw)
    return replace(base or RunConfig(), **values)


def load_config(path, base=None):
    with open(path) as fh:
        return parse_config(fh.read(), base)
