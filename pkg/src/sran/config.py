"""Simulation configuration: schema, validation, and the ``key = value`` file format.

All physical quantities use linear units (mW, Hz, bits, meters); dB values are
labelled as such in the field name or comment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

from .errors import ConfigError, RangeError

_SEED_MAX = 2**64


@dataclass(frozen=True)
class SimConfig:
    area_side: float = 2000.0          # square deployment area side, meters
    n_bs: int = 16
    n_td: int = 200
    scenario3_fraction: float = 0.5    # fraction of traffic pairs that are terminal-server
    bw_per_bs: float = 10e6            # bandwidth budget per base station, Hz
    tx_power_td: float = 200.0         # terminal transmit power, mW
    tx_power_bs: float = 1000.0        # base-station transmit power, mW
    noise_psd: float = 3.9811e-18      # noise power spectral density, mW/Hz (-174 dBm/Hz)
    msg_len_source: float = 8000.0     # uncompressed message length, bits
    compress_max: float = 0.8          # max semantic compression ratio, in [0, 1)
    acc_slope: float = 0.3             # accuracy logistic slope, 1/dB
    acc_midpoint_sem: float = 5.0      # accuracy logistic midpoint, semantic mode, dB
    acc_midpoint_bit: float = 8.0      # accuracy logistic midpoint, bit mode, dB
    tau_mean: float = 0.7              # mean knowledge match of drawn profiles
    tau_min_semcom: float = 0.3        # minimum pair match required for semantic mode
    coding_ability_range: tuple[float, float] = (0.6, 1.0)
    interference_enabled: bool = False
    p_comp_coeff: float = 100.0        # computing power per unit coding ability, mW
    n_drops: int = 100
    seed: int = 42


FIELD_NAMES = tuple(f.name for f in fields(SimConfig))

_INT_FIELDS = {"n_bs", "n_td", "n_drops", "seed"}
_BOOL_FIELDS = {"interference_enabled"}
_RANGE_FIELDS = {"coding_ability_range"}


def default_config() -> SimConfig:
    return SimConfig()


def _as_int(name: str, value, violations: list[RangeError]) -> int | None:
    if isinstance(value, bool):
        violations.append(RangeError(name, value, "integer"))
        return None
    if isinstance(value, int):
        return value
    if isinstance(value, float) and float(value).is_integer():
        return int(value)
    violations.append(RangeError(name, value, "integer"))
    return None


def _as_float(name: str, value, violations: list[RangeError]) -> float | None:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        violations.append(RangeError(name, value, "finite number"))
        return None
    value = float(value)
    if not math.isfinite(value):
        violations.append(RangeError(name, value, "finite number"))
        return None
    return value


def validate_config(raw: SimConfig) -> SimConfig:
    """Validate and normalize a config, reporting every violation at once.

    Returns a config with integer fields coerced to int and the coding-ability
    range stored as a tuple.  Raises :class:`ConfigError` carrying one
    :class:`RangeError` per violated field.  Idempotent on valid configs.
    """
    bad: list[RangeError] = []
    out = {}

    for name in ("n_bs", "n_td", "n_drops"):
        v = _as_int(name, getattr(raw, name), bad)
        if v is not None:
            if v < 1:
                bad.append(RangeError(name, v, ">= 1"))
            else:
                out[name] = v

    seed = _as_int("seed", raw.seed, bad)
    if seed is not None:
        if 0 <= seed < _SEED_MAX:
            out["seed"] = seed
        else:
            bad.append(RangeError("seed", seed, "0 <= seed < 2**64"))

    for name in ("area_side", "bw_per_bs", "tx_power_td", "tx_power_bs",
                 "noise_psd", "msg_len_source"):
        v = _as_float(name, getattr(raw, name), bad)
        if v is not None:
            if v <= 0:
                bad.append(RangeError(name, v, "> 0"))
            else:
                out[name] = v

    for name, lo, hi, hi_open in (
        ("scenario3_fraction", 0.0, 1.0, False),
        ("compress_max", 0.0, 1.0, True),
        ("tau_mean", 0.0, 1.0, False),
        ("tau_min_semcom", 0.0, 1.0, False),
    ):
        v = _as_float(name, getattr(raw, name), bad)
        if v is not None:
            ok = lo <= v < hi if hi_open else lo <= v <= hi
            if ok:
                out[name] = v
            else:
                bad.append(RangeError(name, v, f"[{lo}, {hi}{')' if hi_open else ']'}"))

    v = _as_float("acc_slope", raw.acc_slope, bad)
    if v is not None:
        if v > 0:
            out["acc_slope"] = v
        else:
            bad.append(RangeError("acc_slope", v, "> 0"))

    for name in ("acc_midpoint_sem", "acc_midpoint_bit"):
        v = _as_float(name, getattr(raw, name), bad)
        if v is not None:
            out[name] = v

    v = _as_float("p_comp_coeff", raw.p_comp_coeff, bad)
    if v is not None:
        if v >= 0:
            out["p_comp_coeff"] = v
        else:
            bad.append(RangeError("p_comp_coeff", v, ">= 0"))

    rng = raw.coding_ability_range
    if (isinstance(rng, (tuple, list)) and len(rng) == 2
            and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in rng)):
        lo, hi = float(rng[0]), float(rng[1])
        if 0.0 < lo <= hi <= 1.0:
            out["coding_ability_range"] = (lo, hi)
        else:
            bad.append(RangeError("coding_ability_range", rng, "0 < lo <= hi <= 1"))
    else:
        bad.append(RangeError("coding_ability_range", rng, "pair of numbers"))

    if isinstance(raw.interference_enabled, bool):
        out["interference_enabled"] = raw.interference_enabled
    else:
        bad.append(RangeError("interference_enabled", raw.interference_enabled, "true/false"))

    if bad:
        raise ConfigError(bad)
    return replace(raw, **out)


def _parse_value(key: str, text: str):
    if key in _BOOL_FIELDS:
        low = text.lower()
        if low in ("true", "false"):
            return low == "true"
        return text  # validation will flag it
    if key in _RANGE_FIELDS:
        inner = text.strip()
        if inner.startswith("[") and inner.endswith("]"):
            inner = inner[1:-1]
        parts = [p.strip() for p in inner.split(",") if p.strip()]
        try:
            return tuple(float(p) for p in parts)
        except ValueError:
            return text
    try:
        if key in _INT_FIELDS:
            return int(text, 0)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def parse_config_text(text: str, base: SimConfig | None = None) -> SimConfig:
    """Parse line-oriented ``key = value`` config text on top of the defaults."""
    cfg = base or default_config()
    bad: list[RangeError] = []
    values = {}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            bad.append(RangeError(f"line {lineno}", raw_line.strip(), "key = value"))
            continue
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in FIELD_NAMES:
            bad.append(RangeError(key, value.strip(), "known configuration key"))
            continue
        values[key] = _parse_value(key, value.strip())
    if bad:
        raise ConfigError(bad)
    return validate_config(replace(cfg, **values))


def load_config(path) -> SimConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())


def _format_value(name: str, value) -> str:
    if name in _BOOL_FIELDS:
        return "true" if value else "false"
    if name in _RANGE_FIELDS:
        return "[" + ", ".join(repr(float(x)) for x in value) + "]"
    if name in _INT_FIELDS:
        return str(int(value))
    return repr(float(value))


def config_lines(cfg: SimConfig) -> list[str]:
    """Canonical ``key = value`` lines, one per field, in schema order."""
    return [f"{name} = {_format_value(name, getattr(cfg, name))}" for name in FIELD_NAMES]
