"""One-dimensional characteristic-Galerkin SLDG update (variant A1).

For a target Eulerian cell ``I_j`` at ``t_{n+1}`` the new modal coefficients
are

    alpha_m^{(j)} = int_{upstream(I_j)} u^n(x) phi_m^{(j)}(X(x)) dx

where ``X`` is the forward flow from ``t_n`` to ``t_{n+1}``.  The upstream
cell is split by the Eulerian grid and each piece gets its own Gauss rule.
Coordinates of upstream cells are kept unwrapped; the owner of a piece is
found modulo the cell count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field
from typing import NamedTuple, Optional

import numpy as np

from .errors import CharacteristicCrossingError
from .field import ModalField1D
from .mesh import FACE_TOL, Mesh1D
from .quadrature import QuadratureRule, gauss_legendre, legendre_orthonormal
from .velocity import TracerConfig, VelocityField, trace_1d

# target number of (line, cell, piece, point) entries handled per chunk
_CHUNK_POINTS = 400_000


class Subinterval(NamedTuple):
    k: int  # unwrapped Eulerian index
    cell: int  # owner cell, k mod N
    left: float
    right: float

    @property
    def length(self) -> float:
        return self.right - self.left


@dataclass
class UpstreamCell:
    j: int
    left: float
    right: float
    subintervals: list[Subinterval] = dc_field(default_factory=list)

    @property
    def count(self) -> int:
        return len(self.subintervals)

    @property
    def length(self) -> float:
        return self.right - self.left


@dataclass
class LineView:
    """Modal coefficients along one sweep line at a fixed passive coordinate."""

    mesh: Mesh1D
    degree: int
    coeffs: np.ndarray
    frozen: float = 0.0


def split_by_grid(mesh: Mesh1D, left: float, right: float) -> list[Subinterval]:
    """Intersect ``[left, right]`` with the periodic Eulerian grid."""
    h = mesh.h
    kl = int(np.floor((left - mesh.a) / h + FACE_TOL))
    kr = int(np.floor((right - mesh.a) / h + FACE_TOL))
    pieces = []
    for k in range(kl, kr + 1):
        lo = max(left, mesh.a + k * h)
        hi = min(right, mesh.a + (k + 1) * h)
        if hi - lo > FACE_TOL * h:
            pieces.append(Subinterval(k, k % mesh.n, lo, hi))
    return pieces


def trace_cell(mesh: Mesh1D, j: int, frozen: float, velocity: VelocityField, axis: str,
               t_from: float, t_to: float, cfg: TracerConfig = TracerConfig()) -> UpstreamCell:
    """Trace both faces of cell ``j`` from ``t_from`` back to ``t_to`` and split the image."""
    faces = np.array([mesh.a + j * mesh.h, mesh.a + (j + 1) * mesh.h])
    xl, xr = trace_1d(velocity, axis, faces, frozen, t_from, t_to, cfg)
    if not xr > xl:
        raise CharacteristicCrossingError(
            f"upstream cell {j} has non-positive length {xr - xl:.3e}; characteristics crossed")
    return UpstreamCell(j, float(xl), float(xr), split_by_grid(mesh, xl, xr))


def step_line(line: LineView, upstream: list[UpstreamCell], velocity: VelocityField, axis: str,
              t_n: float, dt: float, quad: Optional[QuadratureRule] = None,
              cfg: TracerConfig = TracerConfig()) -> LineView:
    """Cell-by-cell update of one line from ``t_n`` to ``t_n + dt``.

    ``upstream`` holds the traced image of every target cell.  This is the
    direct transcription of the algorithm; :func:`advect_lines` is the
    vectorized equivalent used by the solvers.
    """
    mesh, K = line.mesh, line.degree
    quad = quad or gauss_legendre(K + 1)
    h = mesh.h
    scale = np.sqrt(2.0 / h)
    new = np.zeros_like(line.coeffs)
    for up in upstream:
        target_center = mesh.a + (up.j + 0.5) * h
        for piece in up.subintervals:
            pts, w = quad.mapped(piece.left, piece.right)
            owner_center = mesh.a + (piece.k + 0.5) * h
            u = scale * legendre_orthonormal(K, 2.0 * (pts - owner_center) / h) @ line.coeffs[piece.cell]
            fwd = trace_1d(velocity, axis, pts, line.frozen, t_n, t_n + dt, cfg)
            psi = scale * legendre_orthonormal(K, 2.0 * (fwd - target_center) / h)
            new[up.j] += (w * u) @ psi
    return LineView(mesh, K, new, line.frozen)


def _advect_chunk(coeffs, mesh, degree, frozen, velocity, axis, t_start, t_end, quad, cfg):
    n_lines, n = coeffs.shape[:2]
    h, a = mesh.h, mesh.a
    frozen = frozen[:, None]

    # Step 1: trace faces back; the last face is the first shifted by a period so
    # that upstream cells tile exactly.
    faces = a + h * np.arange(n)
    traced = trace_1d(velocity, axis, faces[None, :], frozen, t_end, t_start, cfg)
    traced = np.broadcast_to(traced, (n_lines, n))
    xs = np.concatenate([traced, traced[:, :1] + mesh.length], axis=1)
    xl, xr = xs[:, :-1], xs[:, 1:]
    bad = ~(xr > xl)
    if np.any(bad):
        line, cell = np.argwhere(bad)[0]
        raise CharacteristicCrossingError(
            f"upstream cell {cell} on line {line} has length {xr[line, cell] - xl[line, cell]:.3e}; "
            "characteristics crossed")

    # Step 2: split upstream cells by the grid
    kl = np.floor((xl - a) / h + FACE_TOL).astype(np.int64)
    kr = np.floor((xr - a) / h + FACE_TOL).astype(np.int64)
    depth = int((kr - kl).max()) + 1
    k = kl[..., None] + np.arange(depth)
    lo = np.maximum(xl[..., None], a + k * h)
    hi = np.minimum(xr[..., None], a + (k + 1) * h)
    length = hi - lo
    length = np.where(length > FACE_TOL * h, length, 0.0)

    # Step 3: Gauss points per piece
    pts = lo[..., None] + (0.5 * (quad.nodes + 1.0)) * length[..., None]

    # old solution evaluated in the owner cell of each piece
    owner = np.mod(k, n)
    rows = np.arange(n_lines)[:, None, None]
    c_owner = coeffs[rows, owner]  # (L, N, D, K+1)
    xi_owner = 2.0 * (pts - (a + (k + 0.5) * h)[..., None]) / h
    u = np.einsum("lndqm,lndm->lndq", legendre_orthonormal(degree, xi_owner), c_owner)

    # Step 4: forward trace of the Gauss points
    fwd = trace_1d(velocity, axis, pts, frozen[:, :, None, None], t_start, t_end, cfg)

    # Steps 5-6: test functions at the traced points, integrate
    centers = mesh.centers[None, :, None, None]
    psi = legendre_orthonormal(degree, 2.0 * (fwd - centers) / h)
    weights = (0.5 * length)[..., None] * quad.weights * u * (2.0 / h)
    return np.einsum("lndq,lndqm->lnm", weights, psi)


def advect_lines(coeffs: np.ndarray, mesh: Mesh1D, degree: int, frozen, velocity: VelocityField,
                 axis: str, t_start: float, t_end: float, quad: Optional[QuadratureRule] = None,
                 cfg: TracerConfig = TracerConfig(), threads: int = 1) -> np.ndarray:
    """Advance many independent lines from ``t_start`` to ``t_end``.

    ``coeffs`` has shape ``(lines, cells, degree + 1)``; ``frozen`` gives each
    line's passive coordinate.  ``t_end < t_start`` is allowed.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    n_lines = coeffs.shape[0]
    frozen = np.broadcast_to(np.asarray(frozen, dtype=float), (n_lines,))
    quad = quad or gauss_legendre(degree + 1)
    if t_end == t_start:
        return coeffs.copy()
    per_line = mesh.n * quad.n * 4
    chunk = max(1, _CHUNK_POINTS // per_line)
    bounds = [(i, min(i + chunk, n_lines)) for i in range(0, n_lines, chunk)]

    def work(b):
        i, j = b
        return _advect_chunk(coeffs[i:j], mesh, degree, frozen[i:j], velocity, axis,
                             t_start, t_end, quad, cfg)

    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, bounds))
    else:
        parts = [work(b) for b in bounds]
    return np.concatenate(parts, axis=0)


def step_field_1d(field: ModalField1D, velocity: VelocityField, t: float, dt: float,
                  quad: Optional[QuadratureRule] = None, cfg: TracerConfig = TracerConfig(),
                  axis: str = "x", frozen: float = 0.0) -> ModalField1D:
    """One time step of a periodic 1D field from ``t`` to ``t + dt``."""
    new = advect_lines(field.coeffs[None], field.mesh, field.degree, [frozen], velocity, axis,
                       t, t + dt, quad, cfg)
    return ModalField1D(field.mesh, field.degree, new[0])


def upstream_cells(mesh: Mesh1D, velocity: VelocityField, axis: str, frozen: float, t_from: float,
                   t_to: float, cfg: TracerConfig = TracerConfig()) -> list[UpstreamCell]:
    return [trace_cell(mesh, j, frozen, velocity, axis, t_from, t_to, cfg) for j in range(mesh.n)]
