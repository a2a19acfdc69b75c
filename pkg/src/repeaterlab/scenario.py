"""Scenario files: a small INI-like format with fixed units per key.

::

    # comment
    [scenario]
    name = thousand-km

    [link]
    L_att = 22        # km
    eta_d = 1
    p = 1

    [chain]
    L = 1000          # km
    n = 4

    [sweep]
    target = chain
    axis1 = chain.n 2 4 3 linear

Unknown sections or keys, malformed lines and out-of-range values raise
:class:`~repeaterlab.errors.ScenarioError` carrying the line number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .errors import ScenarioError

COMMANDS = ("convert", "link", "chain", "compare-dlcz", "phase")
PHYSICS_SECTIONS = ("block", "rates", "link", "chain", "phase")
MAX_SWEEP_AXES = 2


@dataclass(frozen=True)
class Key:
    type: type
    unit: str = ""
    check: Callable[[Any], bool] | None = None
    rule: str = ""
    choices: tuple[str, ...] = ()


def _positive(v):
    return v > 0


def _nonneg(v):
    return v >= 0


def _unit(v):
    return 0 <= v <= 1


def _at_least_one(v):
    return v >= 1


def _num(unit="", check=None, rule=""):
    return Key(float, unit, check, rule)


POS = dict(check=_positive, rule="> 0")
NONNEG = dict(check=_nonneg, rule=">= 0")
PROB = dict(check=_unit, rule="in [0, 1]")

SCHEMA: dict[str, dict[str, Key]] = {
    "scenario": {"name": Key(str)},
    "block": {
        "preset": Key(str, choices=("rb87-paper",)),
        "N": _num("", _at_least_one, ">= 1"),
        "g1": _num("rad/s", **POS),
        "g2": _num("rad/s", **POS),
        "delta": _num("rad/s", **POS),
        "gamma3": _num("rad/s", **POS),
        "k": _num("rad/s", **POS),
        "L": _num("m", **POS),
        "c": _num("m/s", **POS),
    },
    "rates": {
        "G": _num("rad/s", **NONNEG),
        "chi": _num("1/s", **POS),
        "k": _num("1/s", **POS),
        "Gamma": _num("1/s", **NONNEG),
        "N": _num("", **NONNEG),
    },
    "pulse": {
        "kind": Key(str, choices=("gaussian", "square")),
        "t0": _num("s"),
        "sigma_t": _num("s", **POS),
        "duration": _num("s", **POS),
    },
    "solver": {
        "method": Key(str, choices=("DOP853", "RK45", "RK23", "Radau", "BDF", "LSODA", "rk4")),
        "rtol": _num("", **POS),
        "atol": _num("", **POS),
        "step": _num("s", **POS),
        "n_grid": Key(int, check=lambda v: v >= 2, rule=">= 2"),
    },
    "link": {
        "L0": _num("km", **NONNEG),
        "L_att": _num("km", **POS),
        "eta_d": _num("", **PROB),
        "p": _num("", **PROB),
        "c_fiber": _num("m/s", **POS),
        "dlcz": Key(bool),
    },
    "chain": {
        "L": _num("km", **POS),
        "n": Key(int, check=_nonneg, rule=">= 0"),
        "eta_m": _num("", **PROB),
        "swap_intrinsic": _num("", **PROB),
        "post_intrinsic": _num("", **PROB),
        "include_comm_delay": Key(bool),
        "tau_mem": _num("s", **POS),
        "cap_slots": Key(int, check=_at_least_one, rule=">= 1"),
    },
    "dlcz": {
        "p": _num("", **PROB),
        "eta_m": _num("", **PROB),
    },
    "phase": {
        "kind": Key(str, choices=("gaussian_phase", "gaussian_timing")),
        "sigma": _num("rad or s", **NONNEG),
        "omega": _num("rad/s", **POS),
        "wavelength": _num("m", **POS),
        "window": _num("s", **NONNEG),
    },
    "sweep": {
        "target": Key(str, choices=COMMANDS),
        "axis1": Key(str),
        "axis2": Key(str),
    },
}

REQUIRED: dict[str, tuple[str, ...]] = {
    "rates": ("G", "chi", "k"),
    "chain": ("L", "n"),
    "phase": ("sigma",),
}
BLOCK_FIELDS = ("N", "g1", "g2", "delta", "gamma3", "k", "L")


@dataclass(frozen=True)
class SweepAxis:
    """One sweep dimension: ``steps`` values of ``section.key`` from start to stop."""

    section: str
    key: str
    start: float
    stop: float
    steps: int
    scale: str = "linear"

    @property
    def name(self) -> str:
        return f"{self.section}.{self.key}"

    def values(self) -> list:
        if self.steps == 0:
            return []
        if self.scale == "log":
            grid = np.geomspace(self.start, self.stop, self.steps)
        else:
            grid = np.linspace(self.start, self.stop, self.steps)
        if SCHEMA[self.section][self.key].type is int:
            return [int(round(v)) for v in grid]
        return [float(v) for v in grid]

    def serialize(self) -> str:
        return f"{self.name} {self.start!r} {self.stop!r} {self.steps} {self.scale}"


@dataclass(frozen=True)
class Scenario:
    """Validated scenario: typed values per section plus sweep axes."""

    name: str
    sections: dict[str, dict[str, Any]]
    sweep: tuple[SweepAxis, ...] = ()
    sweep_target: str | None = None
    lines: dict[tuple[str, str], int] = field(default_factory=dict, compare=False, repr=False)

    def has(self, section: str) -> bool:
        return section in self.sections

    def get(self, section: str, key: str, default=None):
        return self.sections.get(section, {}).get(key, default)

    def line_of(self, section: str, key: str | None = None) -> int | None:
        return self.lines.get((section, key or ""))

    def default_command(self) -> str:
        if self.sweep_target:
            return self.sweep_target
        for section, command in (("chain", "chain"), ("link", "link"), ("rates", "convert"),
                                 ("block", "convert"), ("phase", "phase")):
            if self.has(section):
                return command
        raise ScenarioError("missing required section")

    def with_values(self, updates: dict[tuple[str, str], Any]) -> "Scenario":
        """Copy with individual ``(section, key)`` values replaced."""
        sections = {name: dict(values) for name, values in self.sections.items()}
        for (section, key), value in updates.items():
            sections.setdefault(section, {})[key] = value
        return validate(Scenario(self.name, sections, self.sweep, self.sweep_target, self.lines))


def _coerce(raw: str, keydef: Key, section: str, key: str, line: int | None):
    try:
        if keydef.type is bool:
            low = raw.lower()
            if low in ("true", "yes", "on", "1"):
                value: Any = True
            elif low in ("false", "no", "off", "0"):
                value = False
            else:
                raise ValueError(raw)
        elif keydef.type is int:
            as_float = float(raw)
            if not as_float.is_integer():
                raise ValueError(raw)
            value = int(as_float)
        elif keydef.type is float:
            value = float(raw)
            if math.isnan(value):
                raise ValueError(raw)
        else:
            value = raw
    except ValueError:
        raise ScenarioError(
            f"[{section}] {key}: cannot read {raw!r} as {keydef.type.__name__}", line
        ) from None
    return value


def _check_value(value, keydef: Key, section: str, key: str, line: int | None) -> None:
    if keydef.choices and value not in keydef.choices:
        raise ScenarioError(f"[{section}] {key} must be one of {list(keydef.choices)}, got {value!r}", line)
    if keydef.check is not None and not keydef.check(value):
        unit = f" {keydef.unit}" if keydef.unit else ""
        raise ScenarioError(f"[{section}] {key} = {value!r}{unit} out of range: must be {keydef.rule}", line)


def _parse_axis(text: str, line: int | None) -> SweepAxis:
    parts = text.split()
    if len(parts) not in (4, 5):
        raise ScenarioError(f"sweep axis needs 'section.key start stop steps [linear|log]', got {text!r}", line)
    target, start, stop, steps = parts[:4]
    scale = parts[4] if len(parts) == 5 else "linear"
    if "." not in target:
        raise ScenarioError(f"sweep axis parameter must be section.key, got {target!r}", line)
    section, key = target.split(".", 1)
    keydef = SCHEMA.get(section, {}).get(key)
    if keydef is None or section == "sweep":
        raise ScenarioError(f"unknown sweep parameter {target!r}", line)
    if keydef.type not in (int, float):
        raise ScenarioError(f"sweep parameter {target!r} is not numeric", line)
    if scale not in ("linear", "log"):
        raise ScenarioError(f"sweep scale must be linear or log, got {scale!r}", line)
    try:
        axis = SweepAxis(section, key, float(start), float(stop), int(steps), scale)
    except ValueError:
        raise ScenarioError(f"cannot read sweep axis {text!r}", line) from None
    if axis.steps < 0:
        raise ScenarioError("sweep steps must be >= 0", line)
    if scale == "log" and not (axis.start > 0 and axis.stop > 0):
        raise ScenarioError("log sweep needs positive bounds", line)
    for v in axis.values():
        _check_value(v, keydef, section, key, line)
    return axis


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a scenario document."""
    sections: dict[str, dict[str, Any]] = {}
    lines: dict[tuple[str, str], int] = {}
    current: str | None = None
    for number, raw_line in enumerate(text.splitlines(), start=1):
        content = raw_line.split("#", 1)[0].strip()
        if not content:
            continue
        if content.startswith("["):
            if not content.endswith("]"):
                raise ScenarioError(f"malformed section header {content!r}", number)
            current = content[1:-1].strip()
            if current not in SCHEMA:
                raise ScenarioError(f"unknown section [{current}]", number)
            if current in sections:
                raise ScenarioError(f"duplicate section [{current}]", number)
            sections[current] = {}
            lines[(current, "")] = number
            continue
        if "=" not in content:
            raise ScenarioError(f"expected 'key = value', got {content!r}", number)
        if current is None:
            raise ScenarioError("key outside of any section", number)
        key, value = (part.strip() for part in content.split("=", 1))
        keydef = SCHEMA[current].get(key)
        if keydef is None:
            raise ScenarioError(f"unknown key {key!r} in [{current}]", number)
        if key in sections[current]:
            raise ScenarioError(f"duplicate key {key!r} in [{current}]", number)
        if not value:
            raise ScenarioError(f"empty value for {key!r}", number)
        sections[current][key] = _coerce(value, keydef, current, key, number)
        lines[(current, key)] = number
    return _from_sections(sections, lines)


def _from_sections(sections: dict[str, dict[str, Any]], lines: dict[tuple[str, str], int]) -> Scenario:
    sections = {name: dict(values) for name, values in sections.items()}
    name = sections.pop("scenario", {}).get("name", "scenario")
    sweep_values = sections.pop("sweep", None)
    axes: list[SweepAxis] = []
    target = None
    if sweep_values is not None:
        for axis_key in ("axis1", "axis2"):
            if axis_key in sweep_values:
                axes.append(_parse_axis(sweep_values[axis_key], lines.get(("sweep", axis_key))))
        if not axes:
            raise ScenarioError("[sweep] needs at least axis1", lines.get(("sweep", "")))
        target = sweep_values.get("target")
    scenario = Scenario(name, sections, tuple(axes), target, lines)
    return validate(scenario)


def scenario_from_sections(sections: dict[str, dict[str, Any]]) -> Scenario:
    """Build a scenario from already-typed values (used by CLI flags)."""
    for section, values in sections.items():
        if section not in SCHEMA:
            raise ScenarioError(f"unknown section [{section}]")
        for key, value in values.items():
            keydef = SCHEMA[section].get(key)
            if keydef is None:
                raise ScenarioError(f"unknown key {key!r} in [{section}]")
            if isinstance(value, str) and keydef.type is not str:
                values[key] = _coerce(value, keydef, section, key, None)
    return _from_sections(sections, {})


def validate(s: Scenario) -> Scenario:
    """Check ranges, required keys and cross-section rules; returns ``s``."""
    if not any(s.has(sec) for sec in PHYSICS_SECTIONS):
        raise ScenarioError("missing required section: need one of "
                            + ", ".join(f"[{sec}]" for sec in PHYSICS_SECTIONS))
    for section, values in s.sections.items():
        for key, value in values.items():
            _check_value(value, SCHEMA[section][key], section, key, s.line_of(section, key))
        for key in REQUIRED.get(section, ()):
            if key not in values:
                raise ScenarioError(f"[{section}] is missing required key {key!r}", s.line_of(section))
    if s.has("block") and "preset" not in s.sections["block"]:
        missing = [k for k in BLOCK_FIELDS if k not in s.sections["block"]]
        if missing:
            raise ScenarioError(f"[block] without a preset needs {missing}", s.line_of("block"))
    if s.has("block") and s.has("rates"):
        raise ScenarioError("give either [block] or [rates], not both", s.line_of("rates"))
    if s.has("pulse"):
        kind = s.get("pulse", "kind", "gaussian")
        needed = "sigma_t" if kind == "gaussian" else "duration"
        if needed not in s.sections["pulse"]:
            raise ScenarioError(f"[pulse] of kind {kind} needs {needed!r}", s.line_of("pulse"))
    if s.has("phase") and "omega" in s.sections["phase"] and "wavelength" in s.sections["phase"]:
        raise ScenarioError("[phase] takes omega or wavelength, not both", s.line_of("phase", "wavelength"))
    if len(s.sweep) > MAX_SWEEP_AXES:
        raise ScenarioError(f"at most {MAX_SWEEP_AXES} sweep axes")
    for axis in s.sweep:
        if not s.has(axis.section):
            raise ScenarioError(f"sweep parameter {axis.name} refers to missing section [{axis.section}]")
    return s


def _format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def serialize_scenario(s: Scenario) -> str:
    """Text form that :func:`parse_scenario` reads back to an equal scenario."""
    out = ["[scenario]", f"name = {s.name}"]
    for section in SCHEMA:
        if section in s.sections:
            out += ["", f"[{section}]"]
            for key in SCHEMA[section]:
                if key in s.sections[section]:
                    out.append(f"{key} = {_format_value(s.sections[section][key])}")
    if s.sweep:
        out += ["", "[sweep]"]
        if s.sweep_target:
            out.append(f"target = {s.sweep_target}")
        for i, axis in enumerate(s.sweep, start=1):
            out.append(f"axis{i} = {axis.serialize()}")
    return "\n".join(out) + "\n"
