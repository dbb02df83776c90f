"""Simulation configuration and its flat ``key = value`` file format.

Example file::

    # hybrid growth on the default road grid
    p = 0.5
    m = 2
    mode = grid
    steps = 300

Blank lines and ``#`` comments are ignored. Keys are exactly the
:class:`SimConfig` field names. Values given on the command line override the
file, which overrides the defaults.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, fields
from typing import Any, Mapping, Optional

from .attachment import DEFAULT_EPS
from .mobility import OBU_RANGE_M, RSU_RANGE_M

MODES = ("well_mixed", "grid", "trace")
MODELS = ("hybrid", "baseline")


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class SimConfig:
    p: float = 0.5
    m: int = 2
    m0: int = 5
    s: int = 0
    n_per_step: int = 1
    steps: int = 200
    obu_range_m: float = OBU_RANGE_M
    rsu_range_m: float = RSU_RANGE_M
    eps: float = DEFAULT_EPS
    seed: int = 0
    mode: str = "well_mixed"
    trace_path: Optional[str] = None
    model: str = "hybrid"
    local_world_m: Optional[int] = None
    # road grid used by mode = grid; 6 x 5 intersections at 285 m spans ~1425 x 1140 m
    grid_rows: int = 5
    grid_cols: int = 6
    block_m: float = 285.0
    speed_mps: float = 10.0

    def validate(self) -> "SimConfig":
        def need(cond: bool, name: str, msg: str) -> None:
            if not cond:
                raise ConfigError(name, f"{msg}, got {getattr(self, name)!r}")

        need(isinstance(self.p, (int, float)) and 0.0 <= self.p <= 1.0, "p", "must lie in [0, 1]")
        need(self.m >= 1, "m", "must be a positive integer")
        need(self.m0 >= 1, "m0", "must be a positive integer")
        need(0 <= self.s <= self.m0, "s", "must lie in [0, m0]")
        need(self.m <= self.m0, "m", "must not exceed m0")
        need(self.n_per_step >= 1, "n_per_step", "must be a positive integer")
        need(self.steps >= 0, "steps", "must be non-negative")
        need(self.obu_range_m > 0 and math.isfinite(self.obu_range_m), "obu_range_m", "must be positive")
        need(self.rsu_range_m > 0 and math.isfinite(self.rsu_range_m), "rsu_range_m", "must be positive")
        need(0.0 < self.eps < 1e-3, "eps", "must lie in (0, 1e-3)")
        need(self.mode in MODES, "mode", f"must be one of {', '.join(MODES)}")
        if self.mode == "trace":
            need(bool(self.trace_path), "trace_path", "is required when mode = trace")
        need(self.model in MODELS, "model", f"must be one of {', '.join(MODELS)}")
        if self.model == "baseline":
            need(self.local_world_m is not None and self.local_world_m >= self.m,
                 "local_world_m", "baseline model needs local_world_m >= m")
        if self.mode == "grid":
            need(self.grid_rows >= 2, "grid_rows", "must be at least 2")
            need(self.grid_cols >= 2, "grid_cols", "must be at least 2")
            need(self.block_m > 0, "block_m", "must be positive")
            need(self.speed_mps > 0, "speed_mps", "must be positive")
        return self

    def replace(self, **changes: Any) -> "SimConfig":
        return dataclasses.replace(self, **changes)

    def as_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


_FIELD_TYPES = {f.name: f.type for f in fields(SimConfig)}


def coerce_value(key: str, raw: Any) -> Any:
    """Convert a textual value to the type of SimConfig field ``key``."""
    if key not in _FIELD_TYPES:
        raise ConfigError(key, "unknown configuration key")
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    kind = _FIELD_TYPES[key]
    if "Optional" in kind and text.lower() in ("", "none", "null"):
        return None
    try:
        if "int" in kind:
            return int(text)
        if "float" in kind:
            return float(text)
    except ValueError:
        raise ConfigError(key, f"cannot parse {text!r} as {kind}") from None
    return text


def parse_config_text(text: str) -> dict[str, Any]:
    values: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {line.strip()!r}")
        key, value = (part.strip() for part in body.split("=", 1))
        values[key] = coerce_value(key, value)
    return values


def load_config(path=None, overrides: Optional[Mapping[str, Any]] = None) -> SimConfig:
    values: dict[str, Any] = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            values.update(parse_config_text(fh.read()))
    for key, raw in (overrides or {}).items():
        values[key] = coerce_value(key, raw)
    return SimConfig(**values).validate()


def dump_config(cfg: SimConfig) -> str:
    lines = []
    for key, value in cfg.as_dict().items():
        lines.append(f"{key} = {'none' if value is None else value}")
    return "\n".join(lines) + "\n"
