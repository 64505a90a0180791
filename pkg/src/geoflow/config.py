"""Flat ``key = value`` scenario configuration.

Keys carry their unit or role in the name (``t_end_time``, ``epsilon_tube``,
``samples_count``).  Lines starting with ``#`` and blank lines are ignored;
unknown or repeated keys are rejected.  Lists are comma separated.
"""
from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Union

from .errors import ConfigurationError

__all__ = ["ScenarioConfig", "parse_config", "serialize_config", "load_config", "SCENARIOS"]

SCENARIOS = (
    "symmetric-cones",
    "eberlein-flat",
    "central-bundle",
    "parallel-cones",
    "crossing-time",
    "net-invariance",
    "strong-rates",
    "product-gap",
    "bump-bounds",
)


def _range(lo=None, hi=None, lo_open=False, hi_open=False):
    return {"lo": lo, "hi": hi, "lo_open": lo_open, "hi_open": hi_open}


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str = "all"
    # model
    dimension_count: int = field(default=4, metadata=_range(2, 16))
    a_block_count: int = field(default=1, metadata=_range(1, 15))
    period_time: float = field(default=2 * math.pi, metadata=_range(0, None, lo_open=True))
    epsilon_chart: float = field(default=0.5, metadata=_range(0, 1, lo_open=True))
    # deformation
    epsilon_tube: float = field(default=0.02, metadata=_range(0, 0.5, lo_open=True, hi_open=True))
    epsilon_large: float = field(default=0.2, metadata=_range(0, 0.5, lo_open=True, hi_open=True))
    tau_ramp: float = field(default=0.01, metadata=_range(0, 0.25))
    delta_slack: float = field(default=0.1, metadata=_range(0, 1))
    amplitude_value: float = field(default=0.25, metadata=_range(0, 1))
    smoothing_relative: float = field(default=-1.0, metadata=_range(-1, 0.5, hi_open=True))
    grid_count: int = field(default=10000, metadata=_range(1000, 10**7))
    # cones
    cone_opening: float = field(default=1.5, metadata=_range(1, 2, True, True))
    cone_openings: tuple = field(default=(1.1, 1.3, 1.5, 1.7, 1.9), metadata=_range(1, 2, True, True))
    theta_transverse: float = field(default=0.5, metadata=_range(0, 1, True, True))
    theta_parallel: float = field(default=0.05, metadata=_range(0, 1, True, True))
    # integration
    tol_relative: float = field(default=1e-9, metadata=_range(1e-14, 1e-4))
    jacobi_tol_relative: float = field(default=1e-9, metadata=_range(1e-14, 1e-4))
    t_end_time: float = field(default=10.0, metadata=_range(0, None, lo_open=True))
    window_time: float = field(default=2.0, metadata=_range(0, None, lo_open=True))
    monotone_time: float = field(default=5.0, metadata=_range(0, None, lo_open=True))
    outside_arc_time: float = field(default=2.0, metadata=_range(0, None, lo_open=True))
    loglog_start_time: float = field(default=10.0, metadata=_range(0, None, lo_open=True))
    loglog_end_time: float = field(default=100.0, metadata=_range(0, None, lo_open=True))
    spectrum_time: float = field(default=100.0, metadata=_range(0, None, lo_open=True))
    product_spectrum_time: float = field(default=200.0, metadata=_range(0, None, lo_open=True))
    reortho_time: float = field(default=0.5, metadata=_range(0, None, lo_open=True))
    derivative_step_time: float = field(default=1e-4, metadata=_range(0, 0.1, lo_open=True))
    # sample counts
    samples_count: int = field(default=200, metadata=_range(1, 10**6))
    oracle_samples_count: int = field(default=1000, metadata=_range(1, 10**6))
    axis_samples_count: int = field(default=64, metadata=_range(1, 10**5))
    orbits_count: int = field(default=50, metadata=_range(1, 10**4))
    orbits_large_count: int = field(default=10, metadata=_range(1, 10**4))
    orbit_states_count: int = field(default=20, metadata=_range(1, 10**5))
    rate_states_count: int = field(default=100, metadata=_range(1, 10**5))
    crossing_orbits_count: int = field(default=20, metadata=_range(2, 10**4))
    parallel_orbits_count: int = field(default=20, metadata=_range(1, 10**4))
    rate_times_count: int = field(default=41, metadata=_range(2, 10**5))
    # sweeps
    epsilon_crossing_list: tuple = field(default=(0.04, 0.02, 0.01), metadata=_range(0, 0.5, True, True))
    epsilon_estimates_list: tuple = field(default=(0.2, 0.1, 0.05), metadata=_range(0, 0.5, True, True))
    epsilon_bound_list: tuple = field(default=(0.1, 0.05, 0.02), metadata=_range(0, 0.5, True, True))
    tau_list: tuple = field(default=(0.0, 0.01, 0.05), metadata=_range(0, 0.25))
    product_alpha: float = field(default=0.6, metadata=_range(0, 1))
    # detector
    gap_tol: float = field(default=0.05, metadata=_range(0, None))
    central_tol: float = field(default=0.1, metadata=_range(0, None))
    bound_value: float = field(default=1.0, metadata=_range(0, None))
    # run
    seed: int = field(default=0, metadata=_range(0, 2**64 - 1))
    jobs_count: int = field(default=1, metadata=_range(1, 1024))
    out_dir: str = "."
    format: str = "json"

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.type == "tuple" and not isinstance(v, tuple):
                object.__setattr__(self, f.name, tuple(v))
        self.validate()

    def validate(self):
        if self.scenario not in SCENARIOS + ("all",):
            raise ConfigurationError(f"unknown scenario {self.scenario!r}")
        if self.format not in ("json", "csv"):
            raise ConfigurationError(f"format must be json or csv, got {self.format!r}")
        for f in fields(self):
            if not f.metadata:
                continue
            v = getattr(self, f.name)
            values = v if isinstance(v, tuple) else (v,)
            if isinstance(v, tuple) and not v:
                raise ConfigurationError(f"{f.name} must not be empty")
            for x in values:
                if isinstance(x, float) and not math.isfinite(x):
                    raise ConfigurationError(f"{f.name} must be finite")
                _check_range(f.name, x, f.metadata)
        if self.a_block_count > self.dimension_count - 1:
            raise ConfigurationError("a_block_count must not exceed dimension_count - 1")
        for name in ("epsilon_tube", "epsilon_large"):
            if getattr(self, name) >= self.epsilon_chart:
                raise ConfigurationError(f"{name} must be below epsilon_chart")
        for e in self.epsilon_crossing_list + self.epsilon_estimates_list + self.epsilon_bound_list:
            if e >= self.epsilon_chart:
                raise ConfigurationError("sweep tube scales must be below epsilon_chart")
        if not self.loglog_start_time < self.loglog_end_time:
            raise ConfigurationError("loglog_start_time must be below loglog_end_time")

    def replace(self, **kw) -> "ScenarioConfig":
        return dataclasses.replace(self, **kw)

    @property
    def smoothing(self):
        """Relative mollifier radius, or None for the default rule."""
        return None if self.smoothing_relative < 0 else self.smoothing_relative


def _check_range(name, x, meta):
    lo, hi = meta["lo"], meta["hi"]
    if lo is not None and (x < lo or (meta["lo_open"] and x == lo)):
        raise ConfigurationError(f"{name} = {x} is below its allowed range")
    if hi is not None and (x > hi or (meta["hi_open"] and x == hi)):
        raise ConfigurationError(f"{name} = {x} is above its allowed range")


def _convert(f, text: str):
    text = text.strip()
    try:
        if f.type == "int":
            return int(text)
        if f.type == "float":
            return float(text)
        if f.type == "tuple":
            items = [s.strip() for s in text.split(",") if s.strip()]
            return tuple(float(s) for s in items)
    except ValueError as exc:
        raise ConfigurationError(f"bad value for {f.name}: {text!r}") from exc
    return text


def parse_config(text: str, **overrides) -> ScenarioConfig:
    """Parse configuration text; keyword overrides win over file values."""
    known = {f.name: f for f in fields(ScenarioConfig)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise ConfigurationError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigurationError(f"line {lineno}: repeated key {key!r}")
        values[key] = _convert(known[key], val)
    for key, val in overrides.items():
        if val is None:
            continue
        if key not in known:
            raise ConfigurationError(f"unknown key {key!r}")
        values[key] = val
    return ScenarioConfig(**values)


def _format(v) -> str:
    if isinstance(v, tuple):
        return ", ".join(repr(float(x)) for x in v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def serialize_config(config: ScenarioConfig) -> str:
    """Text form that :func:`parse_config` maps back to an equal config."""
    return "".join(f"{f.name} = {_format(getattr(config, f.name))}\n" for f in fields(config))


def load_config(path: Union[str, Path, None], **overrides) -> ScenarioConfig:
    if path is None:
        return parse_config("", **overrides)
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read configuration {path}: {exc}") from exc
    return parse_config(text, **overrides)
