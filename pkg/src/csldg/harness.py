"""Run configuration, time loop, convergence studies and backend timing."""

from __future__ import annotations

import json
import math
import platform
import time
from dataclasses import asdict, dataclass, field as dc_field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .field import ModalField2D, error_norms, project_2d
from .mesh import Mesh2D
from .problems import ProblemSpec, get_problem, max_speed
from .solver import BACKENDS, SolverConfig, SweepWorkspace, TimingStats, advance
from .splitting import get_scheme, validate
from .velocity import TracerConfig

METRICS_HEADER = "mesh,l2,l2_order,l1,l1_order,linf,linf_order,mass_drift,stability_ratio,wall_s"
BENCH_HEADER = "mesh,t_svs,t_ibs,ratio"


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    problem: str = "constant"
    nx: int = 16
    ny: Optional[int] = None
    degree: object = 2  # int, "Q2"-style string, or [kx, ky]
    cfl: float = 10.5
    splitting: str = "strang2"
    backend: str = "svs"
    quad_points: Optional[int] = None
    tracer_order: int = 4
    tracer_substeps: int = 1
    t_end: Optional[float] = None
    samples: Optional[int] = None  # sample points per cell per axis for error norms
    meshes: Optional[list] = None
    bench_repeats: int = 1
    threads: int = 1
    outputs: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    @property
    def degrees(self) -> tuple[int, int]:
        d = self.degree
        if isinstance(d, str):
            d = d.strip().upper()
            if not d.startswith("Q") or not d[1:].isdigit():
                raise ConfigError(f"degree shorthand must look like 'Q2', got {self.degree!r}")
            k = int(d[1:])
            return k, k
        if isinstance(d, (list, tuple)):
            if len(d) != 2:
                raise ConfigError("degree list must be [kx, ky]")
            return int(d[0]), int(d[1])
        return int(d), int(d)

    @property
    def shape(self) -> tuple[int, int]:
        return self.nx, self.ny if self.ny is not None else self.nx

    def with_mesh(self, n: int) -> "RunConfig":
        data = asdict(self)
        data.update(nx=int(n), ny=int(n))
        return RunConfig(**data)

    def validate(self) -> None:
        try:
            kx, ky = self.degrees
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad degree {self.degree!r}") from exc
        if min(kx, ky) < 0 or max(kx, ky) > 8:
            raise ConfigError("degrees must lie in [0, 8]")
        for name in ("nx", "ny"):
            v = getattr(self, name)
            if v is not None and (int(v) != v or v < 1):
                raise ConfigError(f"{name} must be a positive integer")
        if not (isinstance(self.cfl, (int, float)) and self.cfl > 0 and math.isfinite(self.cfl)):
            raise ConfigError("cfl must be a positive number")
        if self.backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {BACKENDS}")
        try:
            problems = validate(get_scheme(self.splitting))
        except (ValueError, OSError) as exc:
            raise ConfigError(str(exc)) from exc
        if problems:
            raise ConfigError(f"invalid splitting: {problems}")
        try:
            get_problem(self.problem)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.quad_points is not None and not 1 <= self.quad_points <= 32:
            raise ConfigError("quad_points must lie in [1, 32]")
        if self.samples is not None and not 1 <= self.samples <= 32:
            raise ConfigError("samples must lie in [1, 32]")
        try:
            TracerConfig(self.tracer_order, self.tracer_substeps)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.t_end is not None and not self.t_end > 0:
            raise ConfigError("t_end must be positive")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.meshes is not None:
            ms = [int(m) for m in self.meshes]
            if any(b != 2 * a for a, b in zip(ms, ms[1:])) or not ms:
                raise ConfigError("meshes must be a non-empty list with each entry doubling the last")
        if not isinstance(self.outputs, dict):
            raise ConfigError("outputs must be an object")

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        allowed = set(cls.__dataclass_fields__)
        unknown = set(data) - allowed
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(self.quad_points, TracerConfig(self.tracer_order, self.tracer_substeps), self.threads)


@dataclass
class RunResult:
    config: RunConfig
    field: ModalField2D
    initial: ModalField2D
    norms: tuple
    dt: float
    steps: int
    speed: float
    masses: list
    l2_history: list
    timing: TimingStats
    wall_s: float

    @property
    def mass_drift(self) -> float:
        """Largest per-step change of total mass, relative to ``1 + |mass|``."""
        m = np.asarray(self.masses)
        if len(m) < 2:
            return 0.0
        return float(np.max(np.abs(np.diff(m)) / (1.0 + np.abs(m[:-1]))))

    @property
    def stability_ratio(self) -> float:
        h = np.asarray(self.l2_history)
        if h[0] == 0.0:
            return 1.0
        return float(h.max() / h[0])

    def metadata(self) -> dict:
        return {
            "config": asdict(self.config),
            "dt": self.dt,
            "steps": self.steps,
            "max_speed": self.speed,
            "dt_rule": "dt = cfl * min(hx, hy) / max(|a| + |b|) over a 64x64x16 space-time sample; "
                       "last step shortened to land on t_end",
            "phi_condition": SweepWorkspace.build(self.field.mesh, self.field.kx, self.field.ky).conditions,
        }


def time_steps(t_end: float, dt: float) -> list[float]:
    """Step sizes covering ``[0, t_end]``; the final step is shortened."""
    n = max(1, math.ceil(t_end / dt - 1e-12))
    steps = [dt] * (n - 1)
    steps.append(t_end - dt * (n - 1))
    return steps


def setup(config: RunConfig, problem: Optional[ProblemSpec] = None):
    problem = problem or get_problem(config.problem)
    nx, ny = config.shape
    kx, ky = config.degrees
    mesh = Mesh2D.uniform(problem.xlim, problem.ylim, nx, ny)
    t_end = config.t_end if config.t_end is not None else problem.t_end
    speed = max_speed(problem, t_end)
    dt = config.cfl * min(mesh.mx.h, mesh.my.h) / speed if speed > 0 else t_end
    field0 = project_2d(problem.initial, mesh, kx, ky)
    return problem, mesh, field0, t_end, speed, dt


def run(config: RunConfig, problem: Optional[ProblemSpec] = None,
        on_step: Optional[Callable[[int, float, ModalField2D], Optional[ModalField2D]]] = None) -> RunResult:
    """Integrate a problem to its horizon and measure the error.

    ``on_step(n, t, field)`` is called after each step; returning a field
    replaces the current one (used for fault-injection tests).
    """
    problem, mesh, field, t_end, speed, dt = setup(config, problem)
    initial = field.copy()
    scheme = get_scheme(config.splitting)
    cfg = config.solver_config()
    ws = SweepWorkspace.build(mesh, field.kx, field.ky)
    timing = TimingStats()
    masses = [field.mass()]
    l2 = [field.l2_norm()]
    t = 0.0
    start = time.perf_counter()
    steps = time_steps(t_end, dt)
    for n, step in enumerate(steps):
        field, stats = advance(field, problem.velocity, scheme, config.backend, t, step, cfg, ws)
        timing.add(stats)
        t = t_end if n == len(steps) - 1 else t + step
        if on_step is not None:
            replaced = on_step(n, t, field)
            if replaced is not None:
                field = replaced
        masses.append(field.mass())
        l2.append(field.l2_norm())
    wall = time.perf_counter() - start
    norms = error_norms(field, problem.exact_at(t_end), config.samples)
    return RunResult(config, field, initial, norms, dt, len(steps), speed, masses, l2, timing, wall)


def convergence_orders(errors: list[float], meshes: list[int]) -> list[Optional[float]]:
    """Observed orders between consecutive meshes; ``inf`` when an error vanishes."""
    out: list[Optional[float]] = [None]
    for (ec, nc), (ef, nf) in zip(zip(errors, meshes), zip(errors[1:], meshes[1:])):
        if ec == 0.0 or ef == 0.0:
            out.append(math.inf)
        else:
            out.append(math.log(ec / ef) / math.log(nf / nc))
    return out


def _fmt(v, timing=True) -> str:
    if v is None:
        return ""
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    return f"{v:.6e}"


def metrics_rows(results: list[RunResult], with_timing: bool = True) -> list[str]:
    meshes = [r.config.shape[0] for r in results]
    cols = {}
    for name in ("l2", "l1", "linf"):
        errs = [getattr(r.norms, name) for r in results]
        cols[name] = convergence_orders(errs, meshes)
    rows = []
    for i, r in enumerate(results):
        nx, ny = r.config.shape
        wall = _fmt(r.wall_s) if with_timing else "NA"
        rows.append(",".join([
            f"{nx}x{ny}",
            _fmt(r.norms.l2), _fmt(cols["l2"][i]),
            _fmt(r.norms.l1), _fmt(cols["l1"][i]),
            _fmt(r.norms.linf), _fmt(cols["linf"][i]),
            _fmt(r.mass_drift), _fmt(r.stability_ratio), wall,
        ]))
    return rows


def write_metrics(path, results: list[RunResult], with_timing: bool = True) -> None:
    Path(path).write_text("\n".join([METRICS_HEADER] + metrics_rows(results, with_timing)) + "\n")


def convergence(config: RunConfig, meshes: Optional[list[int]] = None) -> list[RunResult]:
    meshes = meshes or config.meshes
    if not meshes:
        raise ConfigError("convergence needs a mesh list")
    if any(b != 2 * a for a, b in zip(meshes, meshes[1:])):
        raise ConfigError("meshes must double at each refinement")
    return [run(config.with_mesh(n)) for n in meshes]


@dataclass
class BenchRow:
    mesh: int
    t_svs: float
    t_ibs: float

    @property
    def ratio(self) -> float:
        return self.t_ibs / self.t_svs


def _timed_run(config: RunConfig) -> float:
    problem, mesh, field, t_end, _, dt = setup(config)
    scheme = get_scheme(config.splitting)
    cfg = config.solver_config()
    ws = SweepWorkspace.build(mesh, field.kx, field.ky)
    # warm-up step, not timed
    advance(field, problem.velocity, scheme, config.backend, 0.0, min(dt, t_end), cfg, ws)
    total = 0.0
    t = 0.0
    for step in time_steps(t_end, dt):
        field, stats = advance(field, problem.velocity, scheme, config.backend, t, step, cfg, ws)
        total += stats.total
        t += step
    return total


def bench(config: RunConfig, meshes: Optional[list[int]] = None, repeats: Optional[int] = None) -> list[BenchRow]:
    """Wall time of both backends on identical settings; best of ``repeats``."""
    meshes = meshes or config.meshes or [config.nx]
    repeats = repeats or config.bench_repeats
    rows = []
    for n in meshes:
        base = config.with_mesh(n)
        times = {}
        for backend in BACKENDS:
            cfg = RunConfig(**{**asdict(base), "backend": backend})
            times[backend] = min(_timed_run(cfg) for _ in range(repeats))
        rows.append(BenchRow(n, times["svs"], times["ibs"]))
    return rows


def machine_metadata(threads: int) -> dict:
    return {
        "platform": platform.platform(),
        "processor": platform.processor() or platform.machine(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "threads": threads,
    }


def write_bench(path, rows: list[BenchRow], threads: int = 1) -> None:
    lines = [BENCH_HEADER] + [f"{r.mesh}x{r.mesh},{r.t_svs:.6f},{r.t_ibs:.6f},{r.ratio:.4f}" for r in rows]
    Path(path).write_text("\n".join(lines) + "\n")
    Path(str(path) + ".meta.json").write_text(json.dumps(machine_metadata(threads), indent=2) + "\n")


def write_plot(path, results: list[RunResult]) -> None:
    """Log-log error plot as a standalone SVG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    meshes = [r.config.shape[0] for r in results]
    fig, ax = plt.subplots(figsize=(5, 4))
    for name, label in (("l2", "$L^2$"), ("l1", "$L^1$"), ("linf", r"$L^\infty$")):
        ax.loglog(meshes, [getattr(r.norms, name) for r in results], "o-", label=label)
    ax.set_xlabel("cells per direction")
    ax.set_ylabel("error")
    ax.set_title(results[0].config.problem)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
