"""Run configuration: flat ``key = value`` files with dotted keys.

Example::

    alpha = 0.05
    n2 = 1000
    k = 1000
    seed = 7
    bands.band1 = 0, 1.59
    bands.band2 = 1.71, 5.98
    boxes.e.lo = 0, 0, 0, 0
    boxes.e.hi = 2, 2, 2, 2
    model.name = oscillator
    kw.n_max = 8

Blank values mean "use the default" (for boxes and theta, the model's own).
``to_text`` writes every key in sorted order with canonical number
formatting, so parse -> serialize is stable and ``config_hash`` can key a
run.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, replace

from . import constants as C
from .errors import InvalidInputError


def _floats(text: str):
    text = text.strip()
    if not text:
        return None
    try:
        return tuple(float(v) for v in text.split(","))
    except ValueError:
        raise InvalidInputError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str):
    text = text.strip()
    if not text:
        return ()
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError:
        raise InvalidInputError(f"expected comma-separated integers, got {text!r}") from None


def _float(text: str):
    try:
        return float(text)
    except ValueError:
        raise InvalidInputError(f"expected a number, got {text!r}") from None


def _opt_float(text: str):
    return None if not text.strip() else _float(text)


def _int(text: str):
    try:
        return int(text)
    except ValueError:
        raise InvalidInputError(f"expected an integer, got {text!r}") from None


def _bool(text: str):
    low = text.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise InvalidInputError(f"expected true/false, got {text!r}")


def _str(text: str):
    return text.strip()


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_fmt(v) for v in value)
    return str(value)


# dotted key -> (attribute, parser)
KEYS = {
    "alpha": ("alpha", _float),
    "n2": ("n2", _int),
    "k": ("k", _int),
    "seed": ("seed", _int),
    "threshold": ("threshold", _opt_float),
    "lp.backend": ("backend", _str),
    "bands.band1": ("band1", _floats),
    "bands.band2": ("band2", _floats),
    "boxes.a.lo": ("a_lo", _floats),
    "boxes.a.hi": ("a_hi", _floats),
    "boxes.e.lo": ("e_lo", _floats),
    "boxes.e.hi": ("e_hi", _floats),
    "model.name": ("model", _str),
    "model.command": ("model_command", _str),
    "model.timeout": ("model_timeout", _float),
    "model.dim_theta": ("model_dim_theta", _int),
    "design.theta": ("theta", _floats),
    "kw.c0": ("kw_c0", _float),
    "kw.a0": ("kw_a0", _float),
    "kw.n_max": ("kw_n_max", _int),
    "kw.exponent": ("kw_exponent", _float),
    "kw.return_best": ("kw_return_best", _bool),
    "kw.fresh_samples": ("kw_fresh_samples", _bool),
    "study.sizes": ("study_sizes", _ints),
    "study.seeds": ("study_seeds", _ints),
}


@dataclass(frozen=True)
class RunConfig:
    alpha: float = C.ALPHA
    n2: int = C.N2
    k: int = C.K
    seed: int = 0
    threshold: float | None = None
    backend: str = "highs"
    band1: tuple = C.BAND1
    band2: tuple = C.BAND2
    a_lo: tuple | None = None
    a_hi: tuple | None = None
    e_lo: tuple | None = None
    e_hi: tuple | None = None
    model: str = "oscillator"
    model_command: str = ""
    model_timeout: float = 30.0
    model_dim_theta: int = 0
    theta: tuple | None = None
    kw_c0: float = C.KW_C0
    kw_a0: float = C.KW_A0
    kw_n_max: int = C.KW_N_MAX
    kw_exponent: float = 0.25
    kw_return_best: bool = False
    kw_fresh_samples: bool = True
    study_sizes: tuple = ()
    study_seeds: tuple = tuple(range(10))

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise InvalidInputError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.n2 < 1 or self.k < 1:
            raise InvalidInputError("n2 and k must be at least 1")
        if self.seed < 0 or self.seed >= 2**64:
            raise InvalidInputError("seed must be an unsigned 64-bit integer")
        if self.threshold is not None and not self.threshold > 0:
            raise InvalidInputError("threshold must be positive")
        if self.backend not in ("highs", "bland"):
            raise InvalidInputError(f"unknown LP backend {self.backend!r}")
        for name in ("band1", "band2"):
            band = getattr(self, name)
            if band is None or len(band) != 2:
                raise InvalidInputError(f"bands.{name} needs exactly two numbers")
        if self.model not in ("oscillator", "external"):
            raise InvalidInputError(f"model.name must be 'oscillator' or 'external', got {self.model!r}")
        if self.kw_n_max < 1 or not (self.kw_c0 > 0 and self.kw_a0 > 0):
            raise InvalidInputError("kw.c0 and kw.a0 must be positive and kw.n_max at least 1")

    def with_overrides(self, pairs: dict[str, str]) -> "RunConfig":
        changes = {}
        for key, text in pairs.items():
            if key not in KEYS:
                raise InvalidInputError(f"unknown config key {key!r}")
            attr, parse = KEYS[key]
            changes[attr] = parse(text)
        return replace(self, **changes)

    def to_text(self) -> str:
        lines = [f"{key} = {_fmt(getattr(self, attr))}" for key, (attr, _) in sorted(KEYS.items())]
        return "\n".join(lines) + "\n"

    def hash(self) -> str:
        return hashlib.sha256(self.to_text().encode()).hexdigest()


def parse_pairs(text: str, source: str = "<config>") -> dict[str, str]:
    """Split config text into raw ``key -> value`` strings; '#' starts a comment."""
    pairs = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInputError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = line.split("=", 1)
        pairs[key.strip()] = value.strip()
    return pairs


def parse_set_flag(item: str) -> tuple[str, str]:
    if "=" not in item:
        raise InvalidInputError(f"--set expects key=value, got {item!r}")
    key, value = item.split("=", 1)
    return key.strip(), value.strip()


def load_config(text: str = "", overrides=(), source: str = "<config>") -> RunConfig:
    pairs = parse_pairs(text, source)
    pairs.update(dict(overrides))
    return RunConfig().with_overrides(pairs)
