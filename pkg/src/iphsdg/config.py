"""Scenario configuration files.

A configuration is an INI document (``configparser`` syntax, ``;`` or ``#``
comments) with the sections below. Every key is optional; omitted keys take
the defaults shown, which reproduce the reference gas-piston scenario.

    [model]
    name = gas_piston          ; registered model
    ; any GasPistonParams field: m, A, g_grav, mu, lambda_e, c, N0, R,
    ; U_ref, V_ref, S_ref
    heat_port = true
    force_port = true

    [method]
    kind = midpoint_gonzalez   ; or mean_value, coordinate_increment
    quadrature_order = 5
    coincidence_threshold = 1e-10

    [solver]
    method = newton_fd         ; or fixed_point
    tolerance = 1e-12
    max_iterations = 50
    fd_step = 1e-7

    [run]
    h = 0.01
    steps = 2000               ; or: horizon = 20  (steps = round(horizon / h))
    x0 = 2, 4, 1, 0

    [controls]
    u = 10, -10                ; constant input, or a table of "t u1 u2" rows:
    ; table =
    ;     0    10  -10
    ;     5    10    0

    [output]
    dir = out
    csv = trajectory.csv
    svg = true                 ; write the four plots
    report = report.json

Relative output paths are resolved against ``dir``.
"""
from __future__ import annotations

import configparser
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import gas_piston
from .core import IphsSystem
from .discrete_gradient import DiscreteGradientMethod
from .integrator import ControlSchedule
from .solver import SolverConfig


class ConfigError(ValueError):
    """Malformed or invalid configuration."""


@dataclass(frozen=True)
class ModelEntry:
    build: Callable[[dict], IphsSystem]
    parameters: dict
    x0: tuple
    u: tuple


def _build_gas_piston(overrides: dict) -> IphsSystem:
    overrides = dict(overrides)
    heat = bool(overrides.pop("heat_port", True))
    force = bool(overrides.pop("force_port", True))
    params = gas_piston.GasPistonParams().with_overrides(**overrides)
    return gas_piston.build_gas_piston(params, heat_port=heat, force_port=force)


MODELS = {
    gas_piston.MODEL_NAME: ModelEntry(
        build=_build_gas_piston,
        parameters={**asdict(gas_piston.GasPistonParams()), "heat_port": True, "force_port": True},
        x0=gas_piston.REFERENCE_X0,
        u=gas_piston.REFERENCE_U,
    ),
}

SECTIONS = ("model", "method", "solver", "run", "controls", "output")
PLOT_NAMES = ("height_volume", "entropy_production", "energy_residual", "temperature")


@dataclass(frozen=True)
class OutputConfig:
    dir: Path = Path("out")
    csv: Optional[str] = "trajectory.csv"
    svg: bool = True
    report: Optional[str] = "report.json"

    def path(self, name: str) -> Path:
        p = Path(name)
        return p if p.is_absolute() else self.dir / p

    @property
    def csv_path(self) -> Optional[Path]:
        return self.path(self.csv) if self.csv else None

    @property
    def report_path(self) -> Optional[Path]:
        return self.path(self.report) if self.report else None

    @property
    def svg_paths(self) -> dict:
        if not self.svg:
            return {}
        return {name: self.path(f"plot_{name}.svg") for name in PLOT_NAMES}


@dataclass(frozen=True)
class SimConfig:
    model: str = gas_piston.MODEL_NAME
    model_params: dict = field(default_factory=dict)
    method: DiscreteGradientMethod = DiscreteGradientMethod()
    solver: SolverConfig = SolverConfig()
    h: float = 0.01
    steps: int = 2000
    x0: tuple = gas_piston.REFERENCE_X0
    controls: ControlSchedule = field(default_factory=lambda: ControlSchedule(constant=gas_piston.REFERENCE_U))
    output: OutputConfig = OutputConfig()

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"model.name: unknown model {self.model!r}; known: {sorted(MODELS)}")
        if not self.h > 0:
            raise ConfigError(f"run.h: step size must be positive, got {self.h}")
        if int(self.steps) < 1:
            raise ConfigError(f"run.steps: must be >= 1, got {self.steps}")

    def build_system(self) -> IphsSystem:
        try:
            system = MODELS[self.model].build(self.model_params)
        except ValueError as exc:
            raise ConfigError(f"model: {exc}") from exc
        if len(self.x0) != system.n:
            raise ConfigError(f"run.x0: expected {system.n} entries, got {len(self.x0)}")
        if self.controls.dimension != system.m:
            raise ConfigError(f"controls: expected {system.m} inputs, got {self.controls.dimension}")
        if not system.domain_guard(np.asarray(self.x0, dtype=float)):
            raise ConfigError(f"run.x0: {self.x0} is outside the domain of {self.model}")
        return system

    def with_override(self, key: str, value: str) -> "SimConfig":
        """Return a copy with one ``section.key`` replaced, value given as text."""
        section, _, name = key.partition(".")
        if section not in SECTIONS or not name:
            raise ConfigError(f"{key}: expected section.key with section in {SECTIONS}")
        text = _to_document(self)
        parser = _parser()
        parser.read_string(text)
        if name == "steps" or name == "horizon":
            parser.remove_option("run", "steps")
        if section == "controls":
            parser.remove_section("controls")
            parser.add_section("controls")
        parser.set(section, name, value)
        return _from_parser(parser)


def _parser() -> configparser.ConfigParser:
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=(";", "#"), comment_prefixes=(";", "#")
    )
    parser.optionxform = str  # parameter names are case-sensitive
    return parser


def _floats(key: str, text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.replace(",", " ").split())
    except ValueError as exc:
        raise ConfigError(f"{key}: expected a list of numbers, got {text!r}") from exc


def _get(section, key: str, conv, default):
    if key not in section:
        return default
    raw = section[key]
    full = f"{section.name}.{key}"
    try:
        if conv is bool:
            return section.getboolean(key)
        return conv(raw)
    except ValueError as exc:
        raise ConfigError(f"{full}: cannot interpret {raw!r} ({exc})") from exc


def _reject_unknown(section, allowed) -> None:
    extra = set(section) - set(allowed)
    if extra:
        raise ConfigError(f"{section.name}: unknown keys {sorted(extra)}; allowed {sorted(allowed)}")


def _from_parser(parser: configparser.ConfigParser) -> SimConfig:
    for name in parser.sections():
        if name not in SECTIONS:
            raise ConfigError(f"unknown section [{name}]; allowed {list(SECTIONS)}")
    for name in SECTIONS:
        if not parser.has_section(name):
            parser.add_section(name)

    sec = parser["model"]
    model = sec.get("name", gas_piston.MODEL_NAME)
    if model not in MODELS:
        raise ConfigError(f"model.name: unknown model {model!r}; known: {sorted(MODELS)}")
    entry = MODELS[model]
    _reject_unknown(sec, ["name", *entry.parameters])
    params = {}
    for key in sec:
        if key == "name":
            continue
        conv = bool if isinstance(entry.parameters[key], bool) else float
        params[key] = _get(sec, key, conv, None)

    sec = parser["method"]
    _reject_unknown(sec, [f.name for f in fields(DiscreteGradientMethod)])
    try:
        method = DiscreteGradientMethod(
            kind=sec.get("kind", DiscreteGradientMethod.kind),
            quadrature_order=_get(sec, "quadrature_order", int, DiscreteGradientMethod.quadrature_order),
            coincidence_threshold=_get(sec, "coincidence_threshold", float,
                                       DiscreteGradientMethod.coincidence_threshold),
        )
    except ValueError as exc:
        raise ConfigError(f"method: {exc}") from exc

    sec = parser["solver"]
    _reject_unknown(sec, [f.name for f in fields(SolverConfig)])
    try:
        solver = SolverConfig(
            method=sec.get("method", SolverConfig.method),
            tolerance=_get(sec, "tolerance", float, SolverConfig.tolerance),
            max_iterations=_get(sec, "max_iterations", int, SolverConfig.max_iterations),
            fd_step=_get(sec, "fd_step", float, SolverConfig.fd_step),
        )
    except ValueError as exc:
        raise ConfigError(f"solver: {exc}") from exc

    sec = parser["run"]
    _reject_unknown(sec, ["h", "steps", "horizon", "x0"])
    h = _get(sec, "h", float, SimConfig.h)
    if not h > 0:
        raise ConfigError(f"run.h: step size must be positive, got {h}")
    if "steps" in sec and "horizon" in sec:
        raise ConfigError("run.steps: give either steps or horizon, not both")
    if "horizon" in sec:
        horizon = _get(sec, "horizon", float, None)
        if not horizon > 0:
            raise ConfigError(f"run.horizon: must be positive, got {horizon}")
        steps = int(round(horizon / h))
    else:
        steps = _get(sec, "steps", int, SimConfig.steps)
    if steps < 1:
        raise ConfigError(f"run.steps: must be >= 1, got {steps}")
    x0 = _floats("run.x0", sec["x0"]) if "x0" in sec else tuple(entry.x0)

    sec = parser["controls"]
    _reject_unknown(sec, ["u", "table"])
    if "u" in sec and "table" in sec:
        raise ConfigError("controls.u: give either u or table, not both")
    if "table" in sec:
        rows = []
        for line in sec["table"].strip().splitlines():
            values = _floats("controls.table", line)
            if len(values) < 2:
                raise ConfigError(f"controls.table: row {line!r} needs a time and inputs")
            rows.append((values[0], values[1:]))
        if not rows:
            raise ConfigError("controls.table: empty table")
        if len({len(v) for _, v in rows}) != 1:
            raise ConfigError("controls.table: rows have different input counts")
        try:
            controls = ControlSchedule(table=rows)
        except ValueError as exc:
            raise ConfigError(f"controls.table: {exc}") from exc
    else:
        u = _floats("controls.u", sec["u"]) if "u" in sec else tuple(entry.u)
        controls = ControlSchedule(constant=u)

    sec = parser["output"]
    _reject_unknown(sec, ["dir", "csv", "svg", "report"])
    output = OutputConfig(
        dir=Path(sec.get("dir", "out")),
        csv=sec.get("csv", "trajectory.csv") or None,
        svg=_get(sec, "svg", bool, True),
        report=sec.get("report", "report.json") or None,
    )

    cfg = SimConfig(model, params, method, solver, h, steps, x0, controls, output)
    cfg.build_system()
    return cfg


def parse_config(document: str) -> SimConfig:
    """Parse and validate a configuration document (text, not a path)."""
    parser = _parser()
    try:
        parser.read_string(document)
    except configparser.Error as exc:
        raise ConfigError(f"parse error: {exc}") from exc
    return _from_parser(parser)


def load_config(path) -> SimConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def _fmt(values) -> str:
    return ", ".join(repr(float(v)) for v in values)


def _to_document(cfg: SimConfig) -> str:
    lines = ["[model]", f"name = {cfg.model}"]
    lines += [f"{k} = {v}" for k, v in cfg.model_params.items()]
    lines += ["[method]", f"kind = {cfg.method.kind}",
              f"quadrature_order = {cfg.method.quadrature_order}",
              f"coincidence_threshold = {cfg.method.coincidence_threshold!r}"]
    lines += ["[solver]", f"method = {cfg.solver.method}", f"tolerance = {cfg.solver.tolerance!r}",
              f"max_iterations = {cfg.solver.max_iterations}", f"fd_step = {cfg.solver.fd_step!r}"]
    lines += ["[run]", f"h = {cfg.h!r}", f"steps = {cfg.steps}", f"x0 = {_fmt(cfg.x0)}"]
    lines.append("[controls]")
    if cfg.controls.table is None:
        lines.append(f"u = {_fmt(cfg.controls.constant)}")
    else:
        lines.append("table =")
        lines += ["    " + " ".join(repr(float(v)) for v in (t, *u)) for t, u in cfg.controls.table]
    lines += ["[output]", f"dir = {cfg.output.dir}", f"csv = {cfg.output.csv or ''}",
              f"svg = {str(cfg.output.svg).lower()}", f"report = {cfg.output.report or ''}"]
    return "\n".join(lines) + "\n"


def to_document(cfg: SimConfig) -> str:
    """Serialize back to the INI format (round-trips through :func:`parse_config`)."""
    return _to_document(cfg)


def with_cli_overrides(cfg: SimConfig, method=None, h=None, steps=None, out=None) -> SimConfig:
    if method is not None:
        try:
            cfg = replace(cfg, method=replace(cfg.method, kind=method))
        except ValueError as exc:
            raise ConfigError(f"--method: {exc}") from exc
    if h is not None:
        cfg = replace(cfg, h=h)
    if steps is not None:
        cfg = replace(cfg, steps=steps)
    if out is not None:
        cfg = replace(cfg, output=replace(cfg.output, dir=Path(out)))
    return cfg
