"""Run configuration: ``key = value`` lines grouped in ``[section]`` blocks.

Keys before the first section header belong to ``[run]``, where
``metric = NAME`` is shorthand for ``[metric] name = NAME``.  Values are Python
literals where they parse as one (numbers, lists, quoted strings) and bare
strings otherwise.  ``checks`` also accepts a comma-separated list.

Example::

    [run]
    n = 3
    resolution = 32
    radii = [10, 20, 40, 80, 160]
    checks = mass, ricci

    [metric]
    name = ads_schwarzschild
    mbar = 1.0
"""

from __future__ import annotations

import ast
import configparser
import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from .mass import DEFAULT_RADII

CHECKS = ("mass", "ricci", "invariance", "exactness", "expansion", "spin")
METRICS = ("reference", "ads_schwarzschild", "trace_perturbation", "transported_reference", "conformal")
PROFILES = ("power", "smooth", "bump")
FORMATS = ("json", "table", "both")
MIN_RADIUS = 10.0


class ConfigError(ValueError):
    """Parse or validation failure; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        self.line = line
        self.field = field
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


@dataclass(frozen=True)
class Tolerances:
    fit: float = 1e-3  # max fit residual relative to |m_inf|
    zero: float = 1e-8  # |P_a| bound when the metric has no mass
    exactness: float = 1e-5
    expansion_slope: float = 0.1
    invariance: float = 1e-2
    dn_spread: float = 2e-2
    killing: float = 1e-6
    clifford: float = 1e-12
    pointwise: float = 1e-9
    round_trip: float = 1e-8


@dataclass(frozen=True)
class MetricSpec:
    name: str = "reference"
    mbar: float = 1.0
    profile: str = "power"
    amplitude: float = 1.0
    power: float = 3.0
    r0: float = 2.0
    r1: float = 4.0
    tau: float = 3.0
    rotation: float = 0.3
    dilation: float = 0.2
    data: Optional[str] = None


@dataclass(frozen=True)
class InvarianceSpec:
    rapidity: float = 0.3
    axis: int = 1
    rotation: float = 0.3
    dilation: float = 0.2
    tau: float = 3.0


@dataclass(frozen=True)
class RunConfig:
    n: int = 3
    resolution: int = 32
    radii: tuple = DEFAULT_RADII
    checks: tuple = ("mass",)
    out: str = "."
    report_name: str = "report"
    format: str = "json"
    workers: int = 1
    seed: int = 0
    samples: int = 100
    metric: MetricSpec = field(default_factory=MetricSpec)
    invariance: InvarianceSpec = field(default_factory=InvarianceSpec)
    tolerances: Tolerances = field(default_factory=Tolerances)
    base_dir: str = "."

    def validate(self) -> "RunConfig":
        if self.n < 3:
            raise ConfigError("n must be at least 3", field="n")
        if self.resolution < 8:
            raise ConfigError("resolution N must be at least 8", field="resolution")
        radii = list(self.radii)
        if len(radii) < 3:
            raise ConfigError("radii needs at least three entries", field="radii")
        if any(b <= a for a, b in zip(radii, radii[1:])):
            raise ConfigError("radii not increasing", field="radii")
        if radii[0] < MIN_RADIUS:
            raise ConfigError(f"radii must be >= {MIN_RADIUS:g}", field="radii")
        bad = [c for c in self.checks if c not in CHECKS]
        if bad:
            raise ConfigError(f"unknown checks {bad}; choose from {list(CHECKS)}", field="checks")
        if not self.checks:
            raise ConfigError("no checks selected", field="checks")
        if self.format not in FORMATS:
            raise ConfigError(f"format {self.format!r} must be one of {list(FORMATS)}", field="format")
        if self.workers < 1:
            raise ConfigError("workers must be positive", field="workers")
        if self.samples < 1:
            raise ConfigError("samples must be positive", field="samples")
        if self.metric.name not in METRICS:
            raise ConfigError(f"unknown metric {self.metric.name!r}; choose from {list(METRICS)}", field="metric.name")
        if self.metric.name == "conformal" and not self.metric.data:
            raise ConfigError("metric 'conformal' needs a data file", field="metric.data")
        if self.metric.profile not in PROFILES:
            raise ConfigError(f"unknown profile {self.metric.profile!r}; choose from {list(PROFILES)}",
                              field="metric.profile")
        if self.metric.mbar < 0:
            raise ConfigError("mbar must be non-negative", field="metric.mbar")
        return self

    def to_dict(self) -> dict:
        def conv(obj):
            if hasattr(obj, "__dataclass_fields__"):
                return {f.name: conv(getattr(obj, f.name)) for f in fields(obj) if f.name != "base_dir"}
            if isinstance(obj, tuple):
                return list(obj)
            return obj

        return conv(self)

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw).validate()


_SECTIONS = {
    "run": (RunConfig, {"n", "resolution", "radii", "checks", "out", "report_name", "format", "workers", "seed",
                        "samples", "metric"}),
    "metric": (MetricSpec, None),
    "invariance": (InvarianceSpec, None),
    "tolerances": (Tolerances, None),
}


def _literal(raw: str):
    try:
        return ast.literal_eval(raw)
    except (ValueError, SyntaxError):
        return raw


def _coerce(cls, key: str, value, line: int, section: str):
    default = {f.name: f for f in fields(cls)}[key].default
    where = f"{section}.{key}"
    if key == "checks":
        items = value if isinstance(value, (list, tuple)) else [s for s in re.split(r"[,\s]+", str(value)) if s]
        return tuple(str(s).strip() for s in items)
    if key == "radii":
        if not isinstance(value, (list, tuple)) or not all(isinstance(v, (int, float)) for v in value):
            raise ConfigError(f"{where} must be a list of numbers", line, where)
        return tuple(float(v) for v in value)
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{where} must be true/false", line, where)
        return value
    if isinstance(default, int):
        if not isinstance(value, int) or isinstance(value, bool):
            raise ConfigError(f"{where} must be an integer", line, where)
        return value
    if isinstance(default, float):
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ConfigError(f"{where} must be a number", line, where)
        return float(value)
    return str(value)


def _line_numbers(lines: list) -> dict:
    """(section, key) -> 1-based line of its definition."""
    out, section = {}, "run"
    for i, raw in enumerate(lines, start=1):
        s = raw.strip()
        if not s or s[0] in "#;":
            continue
        m = re.match(r"\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip()
            out.setdefault((section, ""), i)
            continue
        key = re.split(r"[=:]", s, maxsplit=1)[0].strip().lower()
        out.setdefault((section, key), i)
    return out


def parse_config(text: str, base_dir: str = ".") -> RunConfig:
    """Parse and validate a run configuration."""
    lines = text.splitlines()
    first = next((s.strip() for s in lines if s.strip() and s.strip()[0] not in "#;"), "")
    shift = 0
    if not first.startswith("["):
        text = "[run]\n" + text
        shift = 1
    parser = configparser.ConfigParser(strict=True, interpolation=None, inline_comment_prefixes=("#",),
                                       default_section="__none__")
    try:
        parser.read_string(text)
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r} in [{exc.section}]", exc.lineno - shift, exc.option)
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", exc.lineno - shift, exc.section)
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] - shift if exc.errors else None
        raise ConfigError("malformed line (expected key = value)", lineno)
    except configparser.Error as exc:
        raise ConfigError(str(exc).splitlines()[0])
    where = _line_numbers(lines)
    parts = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}]", where.get((section, "")), section)
        cls, allowed = _SECTIONS[section]
        names = allowed if allowed is not None else {f.name for f in fields(cls)}
        values = {}
        for key, raw in parser.items(section):
            line = where.get((section, key))
            if key not in names:
                raise ConfigError(f"unknown key {key!r} in [{section}]", line, f"{section}.{key}")
            if section == "run" and key == "metric":
                if parser.has_option("metric", "name"):
                    raise ConfigError("metric named twice ([run] metric and [metric] name)", line, "metric")
                parts.setdefault("metric", {})["name"] = str(_literal(raw))
                continue
            values[key] = _coerce(cls, key, _literal(raw), line, section)
        parts.setdefault(section, {}).update(values)
    run = parts.get("run", {})
    cfg = RunConfig(
        **run,
        metric=MetricSpec(**parts.get("metric", {})),
        invariance=InvarianceSpec(**parts.get("invariance", {})),
        tolerances=Tolerances(**parts.get("tolerances", {})),
        base_dir=str(base_dir),
    )
    try:
        return cfg.validate()
    except ConfigError as exc:
        section, _, key = (exc.field or "").rpartition(".")
        line = where.get((section or "run", key))
        if line is None and exc.field == "metric.name":
            line = where.get(("run", "metric"))
        if line is None:
            raise
        raise ConfigError(str(exc), line, exc.field) from None


def load_config(path) -> RunConfig:
    path = Path(path)
    return parse_config(path.read_text(), base_dir=str(path.parent))
