"""Runtime checks standing in for the stability analysis.

Each check returns a :class:`CheckResult`; :func:`run_checks` gathers the full
set for one run configuration and :func:`write_checks` emits them as CSV.
The existence/uniqueness results have no finite-dimensional observable of
their own and are covered by the stability and determinism monitors.
"""

from __future__ import annotations

import dataclasses
import io
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .field import ModalField2D, project_2d
from .harness import RunConfig, run, setup, metrics_rows
from .problems import ProblemSpec, get_problem
from .quadrature import gauss_legendre
from .solver import SweepWorkspace, advance
from .splitting import get_scheme
from .velocity import TracerConfig, VelocityField, liouville_factor, trace_2d

CHECKS_HEADER = "check,value,threshold,passed,detail"

NORM_CONTROL_TOL = 1e-8
MASS_TOL = 1e-9
STABILITY_CEILING = 1.05
FLOW_TOL = 1e-9
ANALYTIC_FLOW_TOL = 1e-8
LIOUVILLE_TOL = 1e-8
LIOUVILLE_FD_TOL = 1e-6
SUPPORT_PAD = 1e-10
PRESERVE_TOL = 1e-9
BACKEND_TOL = 1e-9

# fine tracer used by the flow oracles
_FINE = TracerConfig(order=4, substeps=1024)


class CheckResult(NamedTuple):
    name: str
    value: float
    threshold: float
    passed: bool
    detail: str = ""

    def csv(self) -> str:
        return f"{self.name},{self.value:.6e},{self.threshold:.3e},{int(self.passed)},{self.detail}"


@dataclass(frozen=True)
class VelocityBounds:
    M_A: float  # sup |div A| over the sample grid
    L_A: float  # sup of the Jacobian spectral norm
    grid: tuple[int, int, int]


@dataclass(frozen=True)
class StabilityTrace:
    norms: np.ndarray
    ratios: np.ndarray
    max_ratio: float
    ceiling: float

    @property
    def passed(self) -> bool:
        return self.max_ratio <= self.ceiling


@dataclass(frozen=True)
class MassReport:
    masses: np.ndarray
    drifts: np.ndarray  # per-step |dm| / (1 + |m|)
    max_drift: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_drift <= self.tol


def spectral_norm_2x2(jac: np.ndarray) -> np.ndarray:
    """Largest singular value of stacked 2x2 matrices, in closed form."""
    a, b, c, d = jac[..., 0, 0], jac[..., 0, 1], jac[..., 1, 0], jac[..., 1, 1]
    # sigma_max = (|z1| + |z2|) / 2 with z1 = (a+d, c-b), z2 = (a-d, b+c); no cancellation
    return 0.5 * (np.hypot(a + d, c - b) + np.hypot(a - d, b + c))


def estimate_bounds(field: VelocityField, xlim, ylim, t_range=(0.0, 1.0), grid=(32, 32, 32)) -> VelocityBounds:
    nx, ny, nt = grid
    if min(grid) < 32:
        raise ValueError("bound estimation needs at least 32 samples per axis and in time")
    X, Y = np.meshgrid(np.linspace(*xlim, nx), np.linspace(*ylim, ny), indexing="ij")
    m_a = l_a = 0.0
    for t in np.linspace(t_range[0], t_range[1], nt):
        m_a = max(m_a, float(np.max(np.abs(field.div(X, Y, t)))))
        l_a = max(l_a, float(np.max(spectral_norm_2x2(field.grad(X, Y, t)))))
    return VelocityBounds(m_a, l_a, tuple(grid))


def _cell_rule(cell, q):
    """Tensor Gauss points and physical weights on ``cell = (xc, yc, hx, hy)``."""
    xc, yc, hx, hy = cell
    rule = gauss_legendre(q)
    X, Y = np.meshgrid(xc + 0.5 * hx * rule.nodes, yc + 0.5 * hy * rule.nodes, indexing="ij")
    W = np.outer(0.5 * hx * rule.weights, 0.5 * hy * rule.weights)
    return X, Y, W


def check_norm_control(psi: Callable, cell, velocity: VelocityField, t_next: float, dt: float,
                       q: int = 8, cfg: TracerConfig = TracerConfig(substeps=16),
                       m_a: Optional[float] = None) -> tuple[float, tuple[float, float], bool]:
    """Compare the L2 norm of the test function at ``t_next - dt`` with its final-time norm.

    ``psi`` is the test function at ``t_next`` on one cell.  Its value at the
    earlier time lives on the traced cell; by change of variables its squared
    norm there is the cell integral of ``psi**2`` times the Jacobian of the
    backward flow.  Returns ``(ratio, (low, high), passed)`` where the band is
    ``exp(-+ M_A dt / 2)``.  Without ``m_a`` the declared bound is used, or a
    sampled bound over the traced region.
    """
    X, Y, W = _cell_rule(cell, q)
    values = np.asarray(psi(X, Y), dtype=float)
    base = float(np.sqrt(np.sum(W * values ** 2)))
    jac = liouville_factor(velocity, (X, Y), t_next, t_next - dt, cfg)
    lhs = float(np.sqrt(np.sum(W * values ** 2 * jac)))
    if m_a is None:
        m_a = velocity.div_bound
    if m_a is None:
        bx, by = trace_2d(velocity, (X, Y), t_next, t_next - dt, cfg)
        xs = np.concatenate([X.ravel(), np.ravel(bx)])
        ys = np.concatenate([Y.ravel(), np.ravel(by)])
        lo_t, hi_t = sorted((t_next - dt, t_next))
        m_a = estimate_bounds(velocity, (xs.min(), xs.max()), (ys.min(), ys.max()), (lo_t, hi_t)).M_A
    band = (math.exp(-0.5 * m_a * abs(dt)), math.exp(0.5 * m_a * abs(dt)))
    if base == 0.0:
        return 1.0, band, True
    ratio = lhs / base
    ok = band[0] - NORM_CONTROL_TOL <= ratio <= band[1] + NORM_CONTROL_TOL
    return ratio, band, ok


def random_polynomial(rng: np.random.Generator, cell, degree: int = 3) -> Callable:
    xc, yc, hx, hy = cell
    c = rng.standard_normal((degree + 1, degree + 1))

    def psi(x, y):
        return np.polynomial.polynomial.polyval2d(2 * (x - xc) / hx, 2 * (y - yc) / hy, c)
    return psi


def norm_control_sweep(problem: ProblemSpec, trials: int = 100, seed: int = 0, dt: Optional[float] = None,
                       cfg: TracerConfig = TracerConfig(substeps=16)) -> tuple[int, float]:
    """Random polynomial test functions on random cells; returns (failures, worst excess)."""
    rng = np.random.default_rng(seed)
    (x0, x1), (y0, y1) = problem.xlim, problem.ylim
    failures, worst = 0, 0.0
    for _ in range(trials):
        hx, hy = (x1 - x0) / 16, (y1 - y0) / 16
        cell = (rng.uniform(x0 + hx, x1 - hx), rng.uniform(y0 + hy, y1 - hy), hx, hy)
        t_next = rng.uniform(0.1, 1.0) * problem.t_end
        step = dt if dt is not None else rng.uniform(0.01, 0.1) * problem.t_end
        ratio, (lo, hi), ok = check_norm_control(random_polynomial(rng, cell), cell, problem.velocity,
                                                 t_next, step, cfg=cfg)
        failures += not ok
        worst = max(worst, lo - ratio, ratio - hi)
    return failures, worst


def check_support_transport(velocity: VelocityField, cell, t_next: float, dt: float,
                            n: int = 32, cfg: TracerConfig = TracerConfig(substeps=16)) -> float:
    """Trace a cell's interior and boundary back by ``dt``.

    Returns how far (if at all) any traced interior point lands outside the
    bounding box of the traced boundary; <= 0 means the support stayed inside.
    """
    xc, yc, hx, hy = cell
    s = np.linspace(-0.5, 0.5, n)
    edge_x = np.concatenate([xc + s * hx, np.full(n, xc + 0.5 * hx), xc - s * hx, np.full(n, xc - 0.5 * hx)])
    edge_y = np.concatenate([np.full(n, yc - 0.5 * hy), yc + s * hy, np.full(n, yc + 0.5 * hy), yc - s * hy])
    bx, by = trace_2d(velocity, (edge_x, edge_y), t_next, t_next - dt, cfg)
    X, Y, _ = _cell_rule(cell, 8)
    ix, iy = trace_2d(velocity, (X, Y), t_next, t_next - dt, cfg)
    return float(max(bx.min() - ix.min(), ix.max() - bx.max(), by.min() - iy.min(), iy.max() - by.max()))


def monitor_stability(norms: Sequence[float], ceiling: float = STABILITY_CEILING) -> StabilityTrace:
    """Ratios of per-step L2 norms to the initial norm."""
    h = np.asarray(norms, dtype=float)
    ratios = np.ones_like(h) if h[0] == 0.0 else h / h[0]
    return StabilityTrace(h, ratios, float(ratios.max()), ceiling)


def stability_of(config: RunConfig, problem: Optional[ProblemSpec] = None,
                 ceiling: float = STABILITY_CEILING) -> StabilityTrace:
    return monitor_stability(run(config, problem).l2_history, ceiling)


def check_mass_balance(masses: Sequence[float], tol: float = MASS_TOL) -> MassReport:
    m = np.asarray(masses, dtype=float)
    drifts = np.abs(np.diff(m)) / (1.0 + np.abs(m[:-1])) if len(m) > 1 else np.zeros(0)
    return MassReport(m, drifts, float(drifts.max()) if len(drifts) else 0.0, tol)


def _sample_points(problem: ProblemSpec, n: int, seed: int):
    rng = np.random.default_rng(seed)
    (x0, x1), (y0, y1) = problem.xlim, problem.ylim
    # keep away from the box edge so short traces stay in the smooth region
    return (rng.uniform(x0, x1, n) * 0.5 + 0.25 * (x0 + x1),
            rng.uniform(y0, y1, n) * 0.5 + 0.25 * (y0 + y1))


def flow_errors(problem: ProblemSpec, n: int = 64, seed: int = 1) -> dict[str, float]:
    """Composition, roundtrip and (when available) analytic-flow discrepancies."""
    v = problem.velocity
    x, y = _sample_points(problem, n, seed)
    T = problem.t_end
    t1, t2 = 0.2 * T, 0.6 * T
    direct = trace_2d(v, (x, y), T, t1, _FINE)
    mid = trace_2d(v, (x, y), T, t2, _FINE)
    composed = trace_2d(v, mid, t2, t1, _FINE)
    back = trace_2d(v, trace_2d(v, (x, y), T, t1, _FINE), t1, T, _FINE)
    out = {
        "composition": float(np.max(np.hypot(direct[0] - composed[0], direct[1] - composed[1]))),
        "roundtrip": float(np.max(np.hypot(back[0] - x, back[1] - y))),
    }
    if v.flow is not None:
        exact = v.flow(x, y, T, t1)
        out["analytic"] = float(np.max(np.hypot(direct[0] - exact[0], direct[1] - exact[1])))
    return out


def liouville_errors(problem: ProblemSpec, dt: Optional[float] = None, n: int = 32, seed: int = 2,
                     eps: float = 1e-5) -> dict[str, float]:
    """Deviation of the Liouville factor from 1 and from a finite-difference determinant."""
    v = problem.velocity
    x, y = _sample_points(problem, n, seed)
    T = problem.t_end
    dt = 0.1 * T if dt is None else dt
    cfg = TracerConfig(order=4, substeps=64)
    lv = liouville_factor(v, (x, y), T, T - dt, cfg)
    cols = []
    for dx, dy in ((eps, 0.0), (0.0, eps)):
        p = trace_2d(v, (x + dx, y + dy), T, T - dt, cfg)
        m = trace_2d(v, (x - dx, y - dy), T, T - dt, cfg)
        cols.append(((p[0] - m[0]) / (2 * eps), (p[1] - m[1]) / (2 * eps)))
    det = cols[0][0] * cols[1][1] - cols[1][0] * cols[0][1]
    return {"unit": float(np.max(np.abs(lv - 1.0))), "fd_det": float(np.max(np.abs(lv - det)))}


def constant_preservation(config: RunConfig, problem: ProblemSpec, value: float = 1.7) -> float:
    """Largest coefficient change after one full step applied to constant data."""
    _, mesh, field, _, _, dt = setup(config, problem)
    field = project_2d(lambda x, y: np.full(np.broadcast(x, y).shape, value), mesh, field.kx, field.ky)
    new, _ = advance(field, problem.velocity, get_scheme(config.splitting), config.backend, 0.0, dt,
                     config.solver_config())
    return float(np.max(np.abs(new.beta - field.beta)))


def backend_gap(config: RunConfig, problem: ProblemSpec) -> float:
    """Largest coefficient difference between backends after one step."""
    _, mesh, field, _, _, dt = setup(config, problem)
    ws = SweepWorkspace.build(mesh, field.kx, field.ky)
    scheme = get_scheme(config.splitting)
    cfg = config.solver_config()
    a, _ = advance(field, problem.velocity, scheme, "svs", 0.0, dt, cfg, ws)
    b, _ = advance(field, problem.velocity, scheme, "ibs", 0.0, dt, cfg, ws)
    return float(np.max(np.abs(a.beta - b.beta)))


def _artifact_bytes(result) -> bytes:
    buf = io.StringIO()
    buf.write("\n".join(metrics_rows([result], with_timing=False)))
    return buf.getvalue().encode() + result.field.beta.tobytes()


def check_determinism(config: RunConfig, problem: Optional[ProblemSpec] = None) -> bool:
    cfg = dataclasses.replace(config, threads=1)
    return _artifact_bytes(run(cfg, problem)) == _artifact_bytes(run(cfg, problem))


def corrupt_mass(step: int = 0, amount: float = 1e-3):
    """``on_step`` hook that perturbs the mean mode of one cell at ``step``."""
    def hook(n, t, field: ModalField2D):
        if n != step:
            return None
        bad = field.copy()
        bad.beta[0, 0, 0, 0] += amount
        return bad
    return hook


def run_checks(config: RunConfig, on_step=None) -> list[CheckResult]:
    """Every verification check for the configured problem."""
    problem = get_problem(config.problem)
    v = problem.velocity
    out = []

    bounds = estimate_bounds(v, problem.xlim, problem.ylim, (0.0, problem.t_end))
    declared = v.div_bound if v.div_bound is not None else math.inf
    out.append(CheckResult("divergence_bound", bounds.M_A, declared + 1e-8, bounds.M_A <= declared + 1e-8,
                           f"L_A={bounds.L_A:.6g}"))

    flows = flow_errors(problem)
    out.append(CheckResult("flow_composition", flows["composition"], FLOW_TOL, flows["composition"] <= FLOW_TOL))
    out.append(CheckResult("flow_roundtrip", flows["roundtrip"], FLOW_TOL, flows["roundtrip"] <= FLOW_TOL))
    if "analytic" in flows:
        out.append(CheckResult("flow_analytic", flows["analytic"], ANALYTIC_FLOW_TOL,
                               flows["analytic"] <= ANALYTIC_FLOW_TOL))

    liou = liouville_errors(problem)
    if v.div_bound == 0.0:
        out.append(CheckResult("liouville_unit", liou["unit"], LIOUVILLE_TOL, liou["unit"] <= LIOUVILLE_TOL))
    out.append(CheckResult("liouville_fd", liou["fd_det"], LIOUVILLE_FD_TOL, liou["fd_det"] <= LIOUVILLE_FD_TOL))

    failures, worst = norm_control_sweep(problem)
    out.append(CheckResult("norm_control", float(failures), 0.0, failures == 0, f"worst_excess={worst:.3e}"))

    (x0, x1), (y0, y1) = problem.xlim, problem.ylim
    xc, yc = x0 + 0.3 * (x1 - x0), y0 + 0.6 * (y1 - y0)
    hx = (problem.xlim[1] - problem.xlim[0]) / 16
    hy = (problem.ylim[1] - problem.ylim[0]) / 16
    excess = check_support_transport(v, (xc, yc, hx, hy), problem.t_end, 0.1 * problem.t_end)
    out.append(CheckResult("support_transport", excess, SUPPORT_PAD, excess <= SUPPORT_PAD))

    result = run(config, problem, on_step=on_step)
    mass = check_mass_balance(result.masses)
    out.append(CheckResult("mass_balance", mass.max_drift, MASS_TOL, mass.passed))
    stab = monitor_stability(result.l2_history)
    out.append(CheckResult("stability", stab.max_ratio, stab.ceiling, stab.passed))

    if problem.sweeps_divergence_free:
        gap = constant_preservation(config, problem)
        out.append(CheckResult("constant_preservation", gap, PRESERVE_TOL, gap <= PRESERVE_TOL))
    gap = backend_gap(config, problem)
    out.append(CheckResult("backend_agreement", gap, BACKEND_TOL, gap <= BACKEND_TOL))

    same = check_determinism(config, problem)
    out.append(CheckResult("determinism", 0.0 if same else 1.0, 0.0, same))
    return out


def write_checks(path, checks: list[CheckResult]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(CHECKS_HEADER + "\n")
        for c in checks:
            fh.write(c.csv() + "\n")
