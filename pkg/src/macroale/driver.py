"""Scenario configuration and the implicit Euler time loop."""
import configparser
import csv
import logging
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .ale import advance_ale, transfer_previous_solution
from .assembly import assemble_system
from .cutting import LevelSet, LevelSetKind, compute_cut, reconstruct_surface, subdivide
from .errors import ConfigError, MacroAleError
from .io import write_surface_vtk, write_vtk
from .mesh import NodeTag, boundary_classify, build_macro_mesh, dof_layout
from .solvers import solve

__all__ = [
    "ScenarioConfig",
    "SimulationResult",
    "PRESETS",
    "parse_config",
    "run_simulation",
    "CSV_COLUMNS",
    "WORKERS_ENV",
]

log = logging.getLogger(__name__)

CSV_COLUMNS = ("step", "time", "method", "iterations", "rel_residual", "seconds")
WORKERS_ENV = "MACROALE_WORKERS"
SOLVERS = ("cg", "gmres", "segregated")


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: LevelSetKind
    n: int
    dt: float
    num_steps: int
    a1: float
    a2: float
    center0: tuple
    radius0: float
    velocity: object
    bottom: tuple = (0.0, 0.0, 0.0)
    top: tuple = (1.0, 0.0, 0.0)
    solver: str = "cg"
    tol: float = 1e-9
    maxit: int = 1000
    restart: int = 30
    out_dir: str = "out"
    vtk: bool = True
    surface: bool = True
    eps_cut: float = 0.05
    double_crossing: str = "midpoint"

    @property
    def end_time(self) -> float:
        return self.num_steps * self.dt

    def level_set(self) -> LevelSet:
        return LevelSet(self.scenario, self.center0, self.radius0, self.velocity)

    def validate(self) -> "ScenarioConfig":
        if self.n < 1:
            raise ConfigError("mesh.n must be >= 1")
        if not self.dt > 0:
            raise ConfigError("time.dt must be positive")
        if self.num_steps < 1:
            raise ConfigError("time.steps must be >= 1")
        if not (self.a1 > 0 and self.a2 > 0):
            raise ConfigError("material.a1 and material.a2 must be positive")
        if not self.radius0 > 0:
            raise ConfigError("sphere.radius must be positive")
        if self.solver not in SOLVERS:
            raise ConfigError(f"solver.method must be one of {', '.join(SOLVERS)}")
        if not 0 < self.tol < 1:
            raise ConfigError("solver.tol must lie in (0, 1)")
        if self.maxit < 1 or self.restart < 1:
            raise ConfigError("solver.maxit and solver.restart must be >= 1")
        if not 0 < self.eps_cut < 0.5:
            raise ConfigError("cut.eps_cut must lie in (0, 0.5)")
        if self.double_crossing not in ("raise", "midpoint"):
            raise ConfigError("cut.double_crossing must be 'raise' or 'midpoint'")
        if self.scenario is LevelSetKind.MOVING_SPHERE and np.ndim(self.velocity) != 1:
            raise ConfigError("sphere.velocity must be a 3-vector for a moving sphere")
        if self.scenario is LevelSetKind.GROWING_SPHERE and np.ndim(self.velocity) != 0:
            raise ConfigError("sphere.velocity must be a scalar speed for a growing sphere")
        return self


_PAPER_COMMON = dict(
    n=32, num_steps=9, a1=1.0e6, a2=1.0, bottom=(0.0, 0.0, 0.0), top=(1.0, 0.0, 0.0), tol=1e-9
)

PRESETS = {
    "paper1": dict(
        scenario=LevelSetKind.MOVING_SPHERE,
        dt=0.0625,
        center0=(0.125, 0.125, 0.125),
        radius0=0.12,
        velocity=(1.0, 1.0, 1.0),
        **_PAPER_COMMON,
    ),
    "paper2": dict(
        scenario=LevelSetKind.GROWING_SPHERE,
        dt=0.05,
        center0=(0.5, 0.5, 0.5),
        radius0=0.08,
        velocity=1.0,
        **_PAPER_COMMON,
    ),
}


def _vec3(text):
    parts = [p for p in str(text).replace(",", " ").split() if p]
    if len(parts) != 3:
        raise ValueError("expected three numbers")
    return tuple(float(p) for p in parts)


def _velocity(text):
    parts = [p for p in str(text).replace(",", " ").split() if p]
    if len(parts) == 1:
        return float(parts[0])
    if len(parts) == 3:
        return tuple(float(p) for p in parts)
    raise ValueError("expected one or three numbers")


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


# section -> key -> (field name, parser)
_SCHEMA = {
    "scenario": {"kind": ("scenario", LevelSetKind), "preset": (None, str)},
    "mesh": {"n": ("n", int)},
    "time": {"dt": ("dt", float), "steps": ("num_steps", int)},
    "material": {"a1": ("a1", float), "a2": ("a2", float)},
    "sphere": {
        "center": ("center0", _vec3),
        "radius": ("radius0", float),
        "velocity": ("velocity", _velocity),
    },
    "boundary": {"bottom": ("bottom", _vec3), "top": ("top", _vec3)},
    "solver": {
        "method": ("solver", str.lower),
        "tol": ("tol", float),
        "maxit": ("maxit", int),
        "restart": ("restart", int),
    },
    "output": {"dir": ("out_dir", str), "vtk": ("vtk", _bool), "surface": ("surface", _bool)},
    "cut": {"eps_cut": ("eps_cut", float), "double_crossing": ("double_crossing", str.lower)},
}

_REQUIRED = ("scenario", "n", "dt", "num_steps", "a1", "a2", "center0", "radius0", "velocity")
_FIELD_KEY = {f: f"{sec}.{key}" for sec, keys in _SCHEMA.items() for key, (f, _) in keys.items() if f}


def _read_file(path):
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    values, preset = {}, None
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown config key {section}.{key}")
            name, conv = _SCHEMA[section][key]
            try:
                value = conv(raw)
            except ValueError as exc:
                raise ConfigError(f"invalid value for {section}.{key}: {raw!r} ({exc})") from None
            if name is None:
                preset = value
            else:
                values[name] = value
    return values, preset


def parse_config(path=None, preset=None, **overrides) -> ScenarioConfig:
    """Build a validated configuration.

    Values are layered: preset, then the config file, then ``overrides``
    (CLI flags; ``None`` entries are ignored).
    """
    values = {}
    file_values, file_preset = _read_file(path) if path is not None else ({}, None)
    preset = preset or file_preset
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {', '.join(PRESETS)}")
        values.update(PRESETS[preset])
    values.update(file_values)
    values.update({k: v for k, v in overrides.items() if v is not None})
    missing = [f for f in _REQUIRED if f not in values]
    if missing:
        raise ConfigError("missing required config field(s): " + ", ".join(_FIELD_KEY[f] for f in missing))
    unknown = set(values) - set(ScenarioConfig.__dataclass_fields__)
    if unknown:
        raise ConfigError(f"unknown config field(s): {', '.join(sorted(unknown))}")
    values["scenario"] = LevelSetKind(values["scenario"])
    return ScenarioConfig(**values).validate()


def worker_count() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}")
    return n


@dataclass
class SimulationResult:
    config: ScenarioConfig
    reports: list = field(default_factory=list)
    solutions: list = field(default_factory=list)
    max_speed: list = field(default_factory=list)
    files: list = field(default_factory=list)

    @property
    def u(self):
        return self.solutions[-1]


def run_simulation(cfg: ScenarioConfig, write_files: bool = True, keep_solutions: bool = False) -> SimulationResult:
    """Run the cut, subdivide, ALE, assemble, solve loop for all time steps.

    Writes ``solution_####.vtk``, ``surface_####.vtk`` and
    ``solver_stats.csv`` into ``cfg.out_dir`` when ``write_files`` is set.
    """
    cfg.validate()
    workers = worker_count()
    mesh = build_macro_mesh(cfg.n)
    layout = dof_layout(mesh)
    bc = boundary_classify(mesh)
    ls = cfg.level_set()
    g_D = {NodeTag.DIRICHLET_BOTTOM: cfg.bottom, NodeTag.DIRICHLET_TOP: cfg.top}
    result = SimulationResult(cfg)

    out = Path(cfg.out_dir)
    csv_fh = writer = None
    if write_files:
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / "solver_stats.csv"
        csv_fh = open(csv_path, "w", newline="")
        writer = csv.writer(csv_fh)
        writer.writerow(CSV_COLUMNS)
        result.files.append(csv_path)

    def cut_at(t):
        return compute_cut(mesh, ls, t, cfg.eps_cut, cfg.double_crossing)

    try:
        step = 0
        try:
            prev = cut_at(0.0)
            u = np.zeros(layout.n_dofs)
            for step in range(1, cfg.num_steps + 1):
                t = step * cfg.dt
                cut = cut_at(t)
                if cut.n_double_crossed:
                    log.warning("step %d: %d edge(s) crossed twice left uncut", step, cut.n_double_crossed)
                hm = subdivide(mesh, cut, cfg.a1, cfg.a2)
                ale = advance_ale(prev, cut, mesh, cfg.dt)
                u_prev = transfer_previous_solution(u, layout.n_dofs)
                system = assemble_system(hm, ale, u_prev, cfg.dt, bc, g_D, layout, workers=workers)
                u, rep = solve(system, cfg.solver, cfg.tol, cfg.maxit, cfg.restart)
                if not rep.converged and rep.method == "CG":
                    log.warning("step %d: CG failed (%s); retrying with GMRES", step, rep.message)
                    u, rep = solve(system, "gmres", cfg.tol, cfg.maxit, cfg.restart)
                if not rep.converged:
                    raise MacroAleError(f"linear solve failed: {rep.message}")
                result.reports.append(rep)
                result.max_speed.append(ale.max_speed())
                if keep_solutions or step == cfg.num_steps:
                    result.solutions.append(u.copy())
                log.info("step %d t=%g %s it=%d res=%.3e", step, t, rep.method, rep.iterations, rep.rel_residual)
                if write_files:
                    writer.writerow(
                        [step, repr(t), rep.method, rep.iterations, "%.17g" % rep.rel_residual, "%.6f" % rep.seconds]
                    )
                    if cfg.vtk:
                        path = out / f"solution_{step:04d}.vtk"
                        write_vtk(hm, u, path)
                        result.files.append(path)
                    if cfg.surface:
                        path = out / f"surface_{step:04d}.vtk"
                        write_surface_vtk(reconstruct_surface(mesh, cut), path)
                        result.files.append(path)
                prev = cut
        except MacroAleError as exc:
            raise type(exc)(f"step {step}: {exc}") from exc
    finally:
        if csv_fh is not None:
            csv_fh.close()
    return result


def with_overrides(cfg: ScenarioConfig, **kw) -> ScenarioConfig:
    return replace(cfg, **kw).validate()
