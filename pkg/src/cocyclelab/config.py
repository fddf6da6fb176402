"""Flat key=value configuration files.

Grammar: `[section]` headers, one `key = value` per line, `#` starts a
comment (full-line or trailing).  No nesting, no quoting, no typed syntax;
every value is a plain token parsed by the consumer.  Example:

    [potential]
    kind = poisson-peak     # or peaky-bump / zero
    K = 10.0
    lambda = 1e4

    [frequency]
    value = 0.6180339887498949

    [scan]
    e_min = -3.0
    e_max = 10.0
    e_count = 512
    n_steps = 200000
    phases = 2
"""

from __future__ import annotations

import configparser
import math
from pathlib import Path

from .arithmetic import Frequency
from .potentials import (Potential, make_peaky_bump, make_poisson_peak,
                         make_zero)


class ConfigError(ValueError):
    """Malformed configuration; message carries section/key context."""


def parse_config(path: str) -> dict[str, dict[str, str]]:
    """Read a config file into {section: {key: value}}."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    cp = configparser.ConfigParser(delimiters=("=",),
                                   comment_prefixes=("#",),
                                   inline_comment_prefixes=("#",),
                                   interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(p.read_text(), source=path)
    except configparser.Error as exc:
        raise ConfigError(f"parse error in {path}: {exc}")
    return {s: dict(cp.items(s)) for s in cp.sections()}


def section(cfg: dict, name: str) -> dict[str, str]:
    if name not in cfg:
        raise ConfigError(f"missing [{name}] section")
    return cfg[name]


def get_str(sec: dict, secname: str, key: str,
            default: str | None = None) -> str:
    if key not in sec:
        if default is not None:
            return default
        raise ConfigError(f"missing key {key!r} in [{secname}]")
    return sec[key].strip()


def get_float(sec: dict, secname: str, key: str,
              default: float | None = None) -> float:
    raw = get_str(sec, secname, key,
                  None if default is None else repr(default))
    try:
        v = float(raw)
    except ValueError:
        raise ConfigError(f"[{secname}] {key} = {raw!r} is not a number")
    if not math.isfinite(v):
        raise ConfigError(f"[{secname}] {key} must be finite, got {raw}")
    return v


def get_int(sec: dict, secname: str, key: str,
            default: int | None = None) -> int:
    raw = get_str(sec, secname, key,
                  None if default is None else str(default))
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"[{secname}] {key} = {raw!r} is not an integer")


def build_potential(cfg: dict) -> Potential:
    sec = section(cfg, "potential")
    kind = get_str(sec, "potential", "kind")
    try:
        if kind == "poisson-peak":
            return make_poisson_peak(K=get_float(sec, "potential", "K"),
                                     lam=get_float(sec, "potential", "lambda"))
        if kind == "peaky-bump":
            raw = get_str(sec, "potential", "support")
            parts = raw.split(",")
            if len(parts) != 2:
                raise ConfigError(
                    f"[potential] support must be 'a,b', got {raw!r}")
            return make_peaky_bump(
                support=(float(parts[0]), float(parts[1])),
                K=get_float(sec, "potential", "K"),
                sharpness=get_float(sec, "potential", "sharpness", 1.0))
        if kind == "zero":
            return make_zero()
    except ValueError as exc:
        raise ConfigError(f"[potential]: {exc}")
    raise ConfigError(f"[potential] unknown kind {kind!r}")


def build_frequency(cfg: dict) -> Frequency:
    """Frequency from [frequency]: either `value = <float>` (irrational
    kind) or `p = <int>` / `q = <int>` (rational kind)."""
    sec = section(cfg, "frequency")
    if "value" in sec:
        v = get_float(sec, "frequency", "value")
        if not (0.0 < v < 1.0):
            raise ConfigError(f"[frequency] value must be in (0,1), got {v}")
        return Frequency.irrational(v)
    if "p" in sec or "q" in sec:
        try:
            return Frequency.rational(get_int(sec, "frequency", "p"),
                                      get_int(sec, "frequency", "q"))
        except ValueError as exc:
            raise ConfigError(f"[frequency]: {exc}")
    raise ConfigError("[frequency] needs either value= or p=/q=")
