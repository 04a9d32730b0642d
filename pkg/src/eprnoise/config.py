"""Experiment configuration files.

Format: one ``section.key = value`` assignment per line; ``#`` starts a
comment; blank lines are ignored. Values are

* numbers or arithmetic over numbers and ``pi`` (``pi/2``, ``2*pi``, ``-1e6``),
* ``true`` / ``false``,
* bare words (``log``, ``fixed``, ``phi_c``) or double-quoted strings.

Units: Hz, mW, radians; detunings in units of the test-cavity HWHM.
"""

import ast
import difflib
import math
import operator
import typing
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .analysis import ClfParams
from .elements import CavityParams, LossChannel, OpoParams
from .errors import ConfigError, EprNoiseError
from .spectral import FrequencyGrid, make_grid


@dataclass(frozen=True)
class OpoSection:
    x: Optional[float] = None
    pump_power_mw: Optional[float] = None
    threshold_mw: Optional[float] = None
    hwhm_hz: float = 12.1e6
    escape_efficiency: float = 1.0
    pump_phase_rad: float = math.pi

    def pump_parameter(self) -> float:
        if self.x is not None:
            return self.x
        return math.sqrt(self.pump_power_mw / self.threshold_mw)

    def to_params(self) -> OpoParams:
        return OpoParams.from_hwhm(
            self.pump_parameter(), 2 * math.pi * self.hwhm_hz,
            self.escape_efficiency, self.pump_phase_rad,
        )


@dataclass(frozen=True)
class CavitySection:
    enabled: bool = False
    hwhm_hz: float = 1.25e6
    eta_in: float = 1.0
    detuning_signal_hwhm: float = 0.0
    detuning_idler_hwhm: float = 0.0

    def to_params(self) -> CavityParams:
        return CavityParams(
            2 * math.pi * self.hwhm_hz, self.eta_in,
            self.detuning_signal_hwhm, self.detuning_idler_hwhm,
        )


@dataclass(frozen=True)
class LossSection:
    signal_efficiency: float = 1.0
    idler_efficiency: float = 1.0

    def to_params(self) -> LossChannel:
        return LossChannel(self.signal_efficiency, self.idler_efficiency)


@dataclass(frozen=True)
class ReadoutSection:
    signal_lo_phase_rad: float = 0.0
    angle_start_rad: float = 0.0
    angle_stop_rad: float = 2 * math.pi
    angle_count: int = 73
    signal_gain: float = 1.0
    idler_gain: float = 1.0
    combiner: str = "fixed"
    combiner_sign: int = -1

    def angles(self) -> np.ndarray:
        return np.linspace(self.angle_start_rad, self.angle_stop_rad, self.angle_count)


@dataclass(frozen=True)
class GridSection:
    f_min_hz: float = 1e4
    f_max_hz: float = 1e8
    points: int = 200
    scale: str = "log"

    def to_grid(self) -> FrequencyGrid:
        return make_grid(self.f_min_hz, self.f_max_hz, self.points, self.scale)


@dataclass(frozen=True)
class ClfSection:
    clf_phase_rad: float = 0.0
    lo_phase_rad: float = 0.0
    injection_hwhm_hz: float = 0.121e6
    amplitude_gain: float = 1.0
    locked: bool = False
    sweep: str = "phi_c"
    sweep_start_rad: float = 0.0
    sweep_stop_rad: float = 2 * math.pi
    sweep_count: int = 73


@dataclass(frozen=True)
class MetaSection:
    """Free-form descriptive values, never used in computations."""

    description: str = ""
    signal_idler_separation_hz: float = 851e6
    clf_beat_hz: float = 12.07e6


@dataclass(frozen=True)
class ExperimentConfig:
    opo: OpoSection = field(default_factory=lambda: OpoSection(x=0.0))
    cavity: CavitySection = field(default_factory=CavitySection)
    losses: LossSection = field(default_factory=LossSection)
    readout: ReadoutSection = field(default_factory=ReadoutSection)
    grid: GridSection = field(default_factory=GridSection)
    clf: ClfSection = field(default_factory=ClfSection)
    meta: MetaSection = field(default_factory=MetaSection)

    def clf_params(self, **overrides) -> ClfParams:
        o = self.opo
        g_tot = 2 * math.pi * o.hwhm_hz
        kw = dict(
            theta_b=o.pump_phase_rad,
            phi_c=self.clf.clf_phase_rad,
            phi_lo=self.clf.lo_phase_rad,
            x=o.pump_parameter(),
            gamma_clf=2 * math.pi * self.clf.injection_hwhm_hz,
            gamma_in=o.escape_efficiency * g_tot,
            gamma_tot=g_tot,
            amplitude_gain=self.clf.amplitude_gain,
        )
        kw.update(overrides)
        return ClfParams(**kw)


SECTIONS = {f.name: f.default_factory().__class__ for f in fields(ExperimentConfig)}


def _field_types(cls) -> dict:
    return typing.get_type_hints(cls)


def valid_keys() -> list[str]:
    return [f"{s}.{f.name}" for s, cls in SECTIONS.items() for f in fields(cls)]


# --- value parsing ----------------------------------------------------------

_BINOPS = {
    ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
    ast.Div: operator.truediv, ast.Pow: operator.pow,
}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}


def _eval_number(node):
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
            and not isinstance(node.value, bool):
        return node.value
    if isinstance(node, ast.Name) and node.id == "pi":
        return math.pi
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval_number(node.left), _eval_number(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
        return _UNARY[type(node.op)](_eval_number(node.operand))
    raise ValueError("not a numeric expression")


def parse_number(text: str) -> float:
    """Evaluate a numeric literal or arithmetic expression over ``pi``."""
    try:
        value = _eval_number(ast.parse(text.strip(), mode="eval").body)
    except (SyntaxError, ValueError, ZeroDivisionError, OverflowError) as exc:
        raise ValueError(f"cannot read {text!r} as a number") from exc
    if not math.isfinite(value):
        raise ValueError(f"{text!r} is not finite")
    return value


def _convert(raw: str, typ):
    if typ is bool:
        low = raw.lower()
        if low in ("true", "false"):
            return low == "true"
        raise ValueError(f"expected true or false, got {raw!r}")
    if typ is str:
        if len(raw) >= 2 and raw[0] == raw[-1] == '"':
            return raw[1:-1]
        if raw and all(ch.isalnum() or ch in "_-." for ch in raw):
            return raw
        raise ValueError(f"strings with spaces or symbols must be double-quoted: {raw!r}")
    if typ is int:
        v = parse_number(raw)
        if float(v) != int(v):
            raise ValueError(f"expected an integer, got {raw!r}")
        return int(v)
    if typ in (float, Optional[float]):
        return float(parse_number(raw))
    raise TypeError(typ)


def _strip_comment(line: str) -> str:
    in_str = False
    for i, ch in enumerate(line):
        if ch == '"':
            in_str = not in_str
        elif ch == "#" and not in_str:
            return line[:i]
    return line


def parse_config_text(text: str, path=None) -> ExperimentConfig:
    values: dict = {s: {} for s in SECTIONS}
    seen: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = _strip_comment(line).strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError("expected 'section.key = value'", path, line=lineno)
        key, raw = (s.strip() for s in body.split("=", 1))
        if key not in valid_keys():
            near = difflib.get_close_matches(key, valid_keys(), n=1, cutoff=0.0)
            hint = f"; did you mean '{near[0]}'?" if near else ""
            raise ConfigError(f"unknown key{hint}", path, key=key, line=lineno)
        if key in seen:
            raise ConfigError(f"duplicate key (first set on line {seen[key]})", path, key, lineno)
        seen[key] = lineno
        section, name = key.split(".", 1)
        typ = _field_types(SECTIONS[section])[name]
        try:
            values[section][name] = _convert(raw, typ)
        except ValueError as exc:
            raise ConfigError(str(exc), path, key=key, line=lineno) from None
    sections = {s: SECTIONS[s](**kv) for s, kv in values.items()}
    if not any(k in values["opo"] for k in ("x", "pump_power_mw", "threshold_mw")):
        sections["opo"] = replace(sections["opo"], x=0.0)
    cfg = ExperimentConfig(**sections)
    validate_config(cfg, path)
    return cfg


def parse_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc.strerror or exc}", path) from None
    return parse_config_text(text, path)


def validate_config(cfg: ExperimentConfig, path=None) -> ExperimentConfig:
    """Re-check every physical invariant; raises ``ConfigError`` naming the key."""
    o = cfg.opo
    has_power = o.pump_power_mw is not None or o.threshold_mw is not None
    if o.x is not None and has_power:
        raise ConfigError(
            "opo.x and opo.pump_power_mw/opo.threshold_mw are mutually exclusive", path, "opo.x"
        )
    if o.x is None:
        if o.pump_power_mw is None or o.threshold_mw is None:
            raise ConfigError("set opo.x, or both opo.pump_power_mw and opo.threshold_mw",
                              path, "opo.pump_power_mw")
        if not o.threshold_mw > 0 or not o.pump_power_mw >= 0:
            raise ConfigError("need threshold_mw > 0 and pump_power_mw >= 0", path, "opo.threshold_mw")

    def check(key, fn):
        try:
            fn()
        except EprNoiseError as exc:
            raise ConfigError(str(exc), path, key=key) from None

    check("opo.x" if o.x is not None else "opo.pump_power_mw", o.to_params)
    if not o.hwhm_hz > 0:
        raise ConfigError("must be > 0", path, "opo.hwhm_hz")
    if cfg.cavity.enabled:
        check("cavity", cfg.cavity.to_params)
    check("losses", cfg.losses.to_params)
    check("grid", cfg.grid.to_grid)
    r = cfg.readout
    if r.combiner not in ("fixed", "wiener"):
        raise ConfigError("must be 'fixed' or 'wiener'", path, "readout.combiner")
    if r.combiner_sign not in (1, -1):
        raise ConfigError("must be 1 or -1", path, "readout.combiner_sign")
    if r.signal_gain == 0 and r.idler_gain == 0:
        raise ConfigError("at least one combiner gain must be nonzero", path, "readout.idler_gain")
    if r.angle_count < 1:
        raise ConfigError("must be >= 1", path, "readout.angle_count")
    c = cfg.clf
    if c.sweep not in ("phi_c", "phi_lo", "theta_b"):
        raise ConfigError("must be one of phi_c, phi_lo, theta_b", path, "clf.sweep")
    if c.sweep_count < 1:
        raise ConfigError("must be >= 1", path, "clf.sweep_count")
    if not c.injection_hwhm_hz > 0:
        raise ConfigError("must be > 0", path, "clf.injection_hwhm_hz")
    return cfg


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, str):
        bare = v and all(ch.isalnum() or ch in "_-." for ch in v)
        return v if bare else '"' + v.replace('"', "'") + '"'
    raise TypeError(type(v))


def dump_config(cfg: ExperimentConfig) -> str:
    """Canonical text form; ``parse_config_text(dump_config(c)) == c``."""
    lines = []
    for sname in SECTIONS:
        sec = getattr(cfg, sname)
        for f in fields(sec):
            v = getattr(sec, f.name)
            if v is None:
                continue
            lines.append(f"{sname}.{f.name} = {_format_value(v)}")
    return "\n".join(lines) + "\n"


def bundled_configs() -> dict:
    """Name -> path of the example configs shipped with the package."""
    here = Path(__file__).parent / "configs"
    return {p.stem: p for p in sorted(here.glob("*.cfg"))}
