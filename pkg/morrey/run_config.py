"""
Run configuration: the INI file that fixes grid, ladder, exponents, seed and
outputs of one run. Command-line flags override file values through
`RunConfig.merged`, and the resolved configuration is embedded in every
JSON report.
"""

import configparser
import logging
import math
from typing import Any, Dict, Mapping, Optional

from .ball_modular import MorreyParams, RadiusLadder
from .errors import ConfigError
from .grid_core import GridSpec, make_grid

logger = logging.getLogger(__name__)

SCHEMA: Dict[str, Dict[str, type]] = {
    "grid": {"dim": int, "half_width": float, "cells": int},
    "ladder": {"r_min": float, "ratio": float, "count": int},
    "params": {"p": float, "lambda": float, "q": float, "mu": float, "alpha": float,
               "beta": float, "epsilon": float, "kernel": str},
    "run": {"seed": int, "threads": int, "oracle": bool, "n_max": int,
            "ball_radius": float, "output": str, "csv": str, "ods": str},
    "thresholds": {"vanishing_ratio": float, "nonvanishing_ratio": float, "min_slope": float,
                   "extrapolation_factor": float, "v0_min_cells": int, "slope_span": int,
                   "vinf_domain_ratio": float,
                   "dominance_delta": float, "dominance_tolerance": float},
}

_TRUE = ("1", "true", "yes", "on")
_FALSE = ("0", "false", "no", "off")


def _parse(section: str, key: str, text: str) -> Any:
    kind = SCHEMA[section][key]
    text = text.strip()
    if text == "":
        return None
    try:
        if kind is bool:
            lowered = text.lower()
            if lowered in _TRUE:
                return True
            if lowered in _FALSE:
                return False
            raise ValueError(text)
        if kind is int:
            return int(text)
        if kind is float:
            return float(text)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot read {text!r} as {kind.__name__}")
    return text


def _format(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _coerce(section: str, key: str, value: Any) -> Any:
    if value is None:
        return None
    if isinstance(value, str):
        return _parse(section, key, value)
    kind = SCHEMA[section][key]
    if kind is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if kind is int and isinstance(value, int) and not isinstance(value, bool):
        return value
    if kind is bool and isinstance(value, bool):
        return value
    raise ConfigError(f"[{section}] {key}: expected {kind.__name__}, got {value!r}")


class RunConfig:
    """Section -> key -> value, every key of SCHEMA present (None when unset)."""

    def __init__(self, values: Optional[Mapping[str, Mapping[str, Any]]] = None):
        self._values = {section: {key: None for key in keys} for section, keys in SCHEMA.items()}
        for section, entries in (values or {}).items():
            if section not in SCHEMA:
                raise ConfigError(f"unknown run config section [{section}]")
            for key, value in entries.items():
                if key not in SCHEMA[section]:
                    raise ConfigError(f"unknown key {key!r} in [{section}]")
                self._values[section][key] = _coerce(section, key, value)

    def get(self, section: str, key: str, default: Any = None) -> Any:
        value = self._values[section][key]
        return default if value is None else value

    def merged(self, overrides: Mapping[str, Mapping[str, Any]]) -> "RunConfig":
        """New config with every non-None override applied."""
        values = self.to_dict()
        for section, entries in overrides.items():
            if section not in SCHEMA:
                raise ConfigError(f"unknown run config section [{section}]")
            for key, value in entries.items():
                if key not in SCHEMA[section]:
                    raise ConfigError(f"unknown key {key!r} in [{section}]")
                if value is not None:
                    values[section][key] = value
        return RunConfig(values)

    def to_dict(self) -> Dict[str, Dict[str, Any]]:
        return {section: dict(entries) for section, entries in self._values.items()}

    def __eq__(self, other) -> bool:
        return isinstance(other, RunConfig) and self.to_dict() == other.to_dict()

    def __repr__(self) -> str:
        return f"RunConfig({self.to_dict()!r})"

    # typed views

    def grid_spec(self) -> GridSpec:
        dim, half_width, cells = (self.get("grid", k) for k in ("dim", "half_width", "cells"))
        if None in (dim, half_width, cells):
            raise ConfigError("grid needs dim, half_width and cells (--grid dim,L,cells)")
        return make_grid(dim, half_width, cells)

    def ladder(self, spec: GridSpec, default_ratio: Optional[float] = None) -> RadiusLadder:
        """Explicit ladder when r_min and count are set, else the covering ladder."""
        r_min, ratio, count = (self.get("ladder", k) for k in ("r_min", "ratio", "count"))
        ratio = ratio if ratio is not None else default_ratio
        if r_min is not None and count is not None:
            if ratio is None:
                return RadiusLadder(r_min, count=count)
            return RadiusLadder(r_min, ratio, count)
        return RadiusLadder.covering(spec, ratio=ratio, r_min=r_min)

    def morrey_params(self) -> MorreyParams:
        p, lam, q, mu = (self.get("params", k) for k in ("p", "lambda", "q", "mu"))
        if p is None or lam is None:
            raise ConfigError("exponents need p and lambda (--p, --lambda)")
        return MorreyParams(p, lam, q, mu)

    def thresholds(self) -> Dict[str, float]:
        return {k: v for k, v in self._values["thresholds"].items()
                if v is not None and not k.startswith("dominance_")}


def parse_run_config(text: str, source: str = "<string>") -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as e:
        raise ConfigError(f"cannot parse run config {source}: {e}")
    if parser.defaults():
        raise ConfigError(f"{source}: [DEFAULT] section is not supported")
    values: Dict[str, Dict[str, Any]] = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{source}: unknown section [{section}]")
        values[section] = {}
        for key, text_value in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"{source}: unknown key {key!r} in [{section}]")
            values[section][key] = _parse(section, key, text_value)
    return RunConfig(values)


def read_run_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"cannot read run config {path}: {e}")
    cfg = parse_run_config(text, str(path))
    logger.debug("loaded run config %s", path)
    return cfg


def format_run_config(cfg: RunConfig) -> str:
    lines = []
    for section, entries in cfg.to_dict().items():
        lines.append(f"[{section}]")
        for key, value in entries.items():
            lines.append(f"{key} = {_format(value)}".rstrip())
        lines.append("")
    return "\n".join(lines)


def write_run_config(cfg: RunConfig, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(format_run_config(cfg))


def check_floats(cfg: RunConfig) -> None:
    """Reject non-finite numeric entries."""
    for section, entries in cfg.to_dict().items():
        for key, value in entries.items():
            if isinstance(value, float) and not math.isfinite(value):
                raise ConfigError(f"[{section}] {key} must be finite, got {value!r}")


