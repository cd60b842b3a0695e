"""Two-dimensional CSLDG by dimensional splitting.

Every x stage runs the 1D update on lines ``y = y_{s,g}`` through the Gauss
ordinates of each cell row (and symmetrically for y).  The line results
``J[k, g]`` are the x-modal coefficients of the new solution at those
ordinates.  Two backends turn them back into the tensor coefficients:

``svs``
    ``beta = J @ inv(Phi)`` where ``Phi[j, g] = varphi_j(y_g)``.  With Gauss
    ordinates and an orthonormal basis ``inv(Phi) = W Phi^T`` exactly, so the
    reconstruction is a fixed matrix product built once per mesh.

``ibs``
    The classical route: assemble point values at the tensor Gauss points,
    solve each cell's interpolation system with a fresh LU factorization,
    then L2-project the interpolant back onto the modal basis.  The extra work
    is intentional; it is the cost profile the SVS route avoids.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from .csldg1d import advect_lines
from .field import ModalField2D
from .mesh import Mesh1D, Mesh2D
from .quadrature import QuadratureRule, gauss_legendre, legendre_orthonormal
from .splitting import SplittingScheme, stage_times, validate
from .velocity import TracerConfig, VelocityField

BACKENDS = ("svs", "ibs")


@dataclass(frozen=True)
class _AxisOperators:
    nodes: np.ndarray  # reference Gauss nodes, degree + 1 of them
    weights: np.ndarray  # physical weights
    phi: np.ndarray  # phi[i, g] = cell basis i at ordinate g
    phi_inv: np.ndarray  # inverse of phi via discrete orthogonality
    cond: float

    @classmethod
    def build(cls, mesh: Mesh1D, degree: int) -> "_AxisOperators":
        rule = gauss_legendre(degree + 1)
        phi = np.sqrt(2.0 / mesh.h) * legendre_orthonormal(degree, rule.nodes).T
        w = 0.5 * mesh.h * rule.weights
        phi_inv = w[:, None] * phi.T
        resid = np.abs(phi @ phi_inv - np.eye(degree + 1)).max()
        if resid > 1e-10:
            raise AssertionError(f"basis matrix inverse failed (residual {resid:.2e})")
        return cls(rule.nodes, w, phi, phi_inv, float(np.linalg.cond(phi)))

    def ordinates(self, mesh: Mesh1D) -> np.ndarray:
        return mesh.centers[:, None] + 0.5 * mesh.h * self.nodes[None, :]


@dataclass(frozen=True)
class SweepWorkspace:
    """Per-mesh matrices shared by all sweeps."""

    x: _AxisOperators
    y: _AxisOperators

    @classmethod
    def build(cls, mesh: Mesh2D, kx: int, ky: int) -> "SweepWorkspace":
        return cls(_AxisOperators.build(mesh.mx, kx), _AxisOperators.build(mesh.my, ky))

    @property
    def conditions(self) -> dict:
        return {"phi_x": self.x.cond, "phi_y": self.y.cond}


@dataclass
class TimingStats:
    x_seconds: float = 0.0
    y_seconds: float = 0.0
    steps: int = 0
    stages: int = 0

    @property
    def total(self) -> float:
        return self.x_seconds + self.y_seconds

    def add(self, other: "TimingStats") -> None:
        self.x_seconds += other.x_seconds
        self.y_seconds += other.y_seconds
        self.steps += other.steps
        self.stages += other.stages


@dataclass
class SolverConfig:
    quad_points: Optional[int] = None  # per upstream piece; None -> degree + 1
    tracer: TracerConfig = dc_field(default_factory=TracerConfig)
    threads: int = 1

    def rule(self, degree: int) -> QuadratureRule:
        return gauss_legendre(self.quad_points or degree + 1)


def _workspace(field: ModalField2D, ws: Optional[SweepWorkspace]) -> SweepWorkspace:
    return ws if ws is not None else SweepWorkspace.build(field.mesh, field.kx, field.ky)


def _line_results_x(field, velocity, t, delta, cfg, ws):
    """J[s, g, r, k]: x-modes of the new solution on the line y = y_{s,g}."""
    mx, my = field.mesh.mx, field.mesh.my
    alpha = np.einsum("rsij,jg->sgri", field.beta, ws.y.phi)
    lines = alpha.reshape(my.n * (field.ky + 1), mx.n, field.kx + 1)
    frozen = ws.y.ordinates(my).ravel()
    out = advect_lines(lines, mx, field.kx, frozen, velocity, "x", t, t + delta,
                       cfg.rule(field.kx), cfg.tracer, cfg.threads)
    return out.reshape(my.n, field.ky + 1, mx.n, field.kx + 1)


def _line_results_y(field, velocity, t, delta, cfg, ws):
    """J[r, q, s, m]: y-modes of the new solution on the line x = x_{r,q}."""
    mx, my = field.mesh.mx, field.mesh.my
    alpha = np.einsum("rsij,iq->rqsj", field.beta, ws.x.phi)
    lines = alpha.reshape(mx.n * (field.kx + 1), my.n, field.ky + 1)
    frozen = ws.x.ordinates(mx).ravel()
    out = advect_lines(lines, my, field.ky, frozen, velocity, "y", t, t + delta,
                       cfg.rule(field.ky), cfg.tracer, cfg.threads)
    return out.reshape(mx.n, field.kx + 1, my.n, field.ky + 1)


def svs_sweep_x(field: ModalField2D, velocity: VelocityField, t: float, delta: float,
                cfg: Optional[SolverConfig] = None, ws: Optional[SweepWorkspace] = None) -> ModalField2D:
    """Advance along x from ``t`` to ``t + delta`` with ``beta = RHS @ inv(Phi_y)``."""
    cfg = cfg or SolverConfig()
    ws = _workspace(field, ws)
    J = _line_results_x(field, velocity, t, delta, cfg, ws)
    beta = np.einsum("sgrk,gj->rskj", J, ws.y.phi_inv)
    return ModalField2D(field.mesh, field.kx, field.ky, beta)


def svs_sweep_y(field: ModalField2D, velocity: VelocityField, t: float, delta: float,
                cfg: Optional[SolverConfig] = None, ws: Optional[SweepWorkspace] = None) -> ModalField2D:
    cfg = cfg or SolverConfig()
    ws = _workspace(field, ws)
    J = _line_results_y(field, velocity, t, delta, cfg, ws)
    beta = np.einsum("rqsm,qi->rsim", J, ws.x.phi_inv)
    return ModalField2D(field.mesh, field.kx, field.ky, beta)


def _interpolation_matrix(ws: SweepWorkspace) -> np.ndarray:
    # rows: tensor Gauss points (q, g); columns: tensor modes (i, j)
    return np.einsum("iq,jg->qgij", ws.x.phi, ws.y.phi).reshape(
        ws.x.phi.shape[1] * ws.y.phi.shape[1], -1)


def _ibs_reconstruct(points: np.ndarray, ws: SweepWorkspace) -> np.ndarray:
    """Point values ``points[r, s, q, g]`` -> modal ``beta[r, s, i, j]``."""
    nx, ny, nq, ng = points.shape
    ncell, npts = nx * ny, nq * ng
    vander = _interpolation_matrix(ws)
    # one dense system per cell, factorized from scratch every time
    systems = np.broadcast_to(vander, (ncell, npts, npts)).copy()
    rhs = points.reshape(ncell, npts, 1)
    coef = np.linalg.solve(systems, rhs)[..., 0]
    # L2 projection of the interpolant at the tensor quadrature points
    values = (coef @ vander.T).reshape(ncell, nq, ng)
    wphi_x = ws.x.weights[:, None] * ws.x.phi.T
    wphi_y = ws.y.weights[:, None] * ws.y.phi.T
    beta = np.einsum("cqg,qi,gj->cij", values, wphi_x, wphi_y)
    return beta.reshape(nx, ny, nq, ng)


def ibs_sweep_x(field: ModalField2D, velocity: VelocityField, t: float, delta: float,
                cfg: Optional[SolverConfig] = None, ws: Optional[SweepWorkspace] = None) -> ModalField2D:
    cfg = cfg or SolverConfig()
    ws = _workspace(field, ws)
    J = _line_results_x(field, velocity, t, delta, cfg, ws)
    points = np.einsum("sgrk,kq->rsqg", J, ws.x.phi)
    return ModalField2D(field.mesh, field.kx, field.ky, _ibs_reconstruct(points, ws))


def ibs_sweep_y(field: ModalField2D, velocity: VelocityField, t: float, delta: float,
                cfg: Optional[SolverConfig] = None, ws: Optional[SweepWorkspace] = None) -> ModalField2D:
    cfg = cfg or SolverConfig()
    ws = _workspace(field, ws)
    J = _line_results_y(field, velocity, t, delta, cfg, ws)
    points = np.einsum("rqsm,mg->rsqg", J, ws.y.phi)
    return ModalField2D(field.mesh, field.kx, field.ky, _ibs_reconstruct(points, ws))


SWEEPS = {
    ("svs", "x"): svs_sweep_x,
    ("svs", "y"): svs_sweep_y,
    ("ibs", "x"): ibs_sweep_x,
    ("ibs", "y"): ibs_sweep_y,
}


def advance(field: ModalField2D, velocity: VelocityField, scheme: SplittingScheme, backend: str,
            t: float, dt: float, cfg: Optional[SolverConfig] = None,
            ws: Optional[SweepWorkspace] = None) -> tuple[ModalField2D, TimingStats]:
    """One full split step from ``t`` to ``t + dt``."""
    problems = validate(scheme)
    if problems:
        raise ValueError(f"invalid splitting scheme {scheme.name}: {problems}")
    if backend not in BACKENDS:
        raise ValueError(f"backend must be one of {BACKENDS}, got {backend!r}")
    cfg = cfg or SolverConfig()
    ws = _workspace(field, ws)
    stats = TimingStats(steps=1)
    for stage in stage_times(scheme, t, dt):
        start = time.perf_counter()
        field = SWEEPS[backend, stage.axis](field, velocity, stage.t_start, stage.t_end - stage.t_start, cfg, ws)
        elapsed = time.perf_counter() - start
        if stage.axis == "x":
            stats.x_seconds += elapsed
        else:
            stats.y_seconds += elapsed
        stats.stages += 1
    return field, stats
