"""Modal DG fields on uniform periodic meshes.

A 1D field stores ``coeffs[j, m]`` (cell ``j``, mode ``m``).  A 2D field stores
``beta[r, s, i, j]`` for cell ``(r, s)`` and tensor mode ``phi_i(x) phi_j(y)``.
Both use the cell-orthonormal Legendre basis, so the L2 norm of a field is
the Euclidean norm of its coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, NamedTuple

import numpy as np

from .mesh import Mesh1D, Mesh2D, locate
from .quadrature import gauss_legendre, legendre_orthonormal


@dataclass
class ModalField1D:
    mesh: Mesh1D
    degree: int
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.mesh.n, self.degree + 1):
            raise ValueError(f"coefficient shape {self.coeffs.shape} does not match mesh/degree")

    def copy(self) -> "ModalField1D":
        return ModalField1D(self.mesh, self.degree, self.coeffs.copy())

    def evaluate(self, x):
        return evaluate_1d(self, x)

    def mass(self) -> float:
        return float(np.sum(self.coeffs[:, 0]) * np.sqrt(self.mesh.h))

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(self.coeffs ** 2)))


@dataclass
class ModalField2D:
    mesh: Mesh2D
    kx: int
    ky: int
    beta: np.ndarray

    def __post_init__(self):
        self.beta = np.asarray(self.beta, dtype=float)
        expected = (self.mesh.mx.n, self.mesh.my.n, self.kx + 1, self.ky + 1)
        if self.beta.shape != expected:
            raise ValueError(f"beta shape {self.beta.shape} != {expected}")

    @classmethod
    def zeros(cls, mesh: Mesh2D, kx: int, ky: int) -> "ModalField2D":
        return cls(mesh, kx, ky, np.zeros((mesh.mx.n, mesh.my.n, kx + 1, ky + 1)))

    def copy(self) -> "ModalField2D":
        return ModalField2D(self.mesh, self.kx, self.ky, self.beta.copy())

    def evaluate(self, x, y):
        return evaluate(self, x, y)

    def mass(self) -> float:
        return total_mass(self)

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(self.beta ** 2)))


class ErrorNorms(NamedTuple):
    l1: float
    l2: float
    linf: float


def _cell_points(mesh: Mesh1D, rule):
    """Quadrature points (n_cells, q) and physical weights (q,)."""
    pts = mesh.centers[:, None] + 0.5 * mesh.h * rule.nodes[None, :]
    return pts, 0.5 * mesh.h * rule.weights


def _scaled_basis(degree: int, h: float, rule) -> np.ndarray:
    return np.sqrt(2.0 / h) * legendre_orthonormal(degree, rule.nodes)


def project_1d(f: Callable, mesh: Mesh1D, degree: int, q: int | None = None) -> ModalField1D:
    q = degree + 3 if q is None else q
    if q < degree + 1:
        raise ValueError("projection quadrature needs at least degree + 1 points")
    rule = gauss_legendre(q)
    pts, w = _cell_points(mesh, rule)
    vals = np.broadcast_to(np.asarray(f(pts), dtype=float), pts.shape)
    coeffs = (vals * w) @ _scaled_basis(degree, mesh.h, rule)
    return ModalField1D(mesh, degree, coeffs)


def evaluate_1d(field: ModalField1D, x):
    j, xw = locate(field.mesh, x)
    xc = field.mesh.a + field.mesh.h * (np.asarray(j) + 0.5)
    phi = np.sqrt(2.0 / field.mesh.h) * legendre_orthonormal(field.degree, 2.0 * (xw - xc) / field.mesh.h)
    out = np.sum(field.coeffs[j] * phi, axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def project_2d(f: Callable, mesh: Mesh2D, kx: int, ky: int, q: int | None = None) -> ModalField2D:
    """L2 projection by tensor Gauss quadrature with ``q`` points per axis."""
    q = max(kx, ky) + 3 if q is None else q
    if q < max(kx, ky) + 1:
        raise ValueError("projection quadrature needs at least max(kx, ky) + 1 points")
    rule = gauss_legendre(q)
    xp, wx = _cell_points(mesh.mx, rule)
    yp, wy = _cell_points(mesh.my, rule)
    X = xp[:, None, :, None]
    Y = yp[None, :, None, :]
    vals = np.broadcast_to(np.asarray(f(X, Y), dtype=float), (mesh.mx.n, mesh.my.n, q, q))
    bx = wx[:, None] * _scaled_basis(kx, mesh.mx.h, rule)
    by = wy[:, None] * _scaled_basis(ky, mesh.my.h, rule)
    beta = np.einsum("rsab,ai,bj->rsij", vals, bx, by, optimize=True)
    return ModalField2D(mesh, kx, ky, beta)


def evaluate(field: ModalField2D, x, y):
    """Point values of the 2D field; coordinates are wrapped periodically."""
    mx, my = field.mesh.mx, field.mesh.my
    r, xw = locate(mx, x)
    s, yw = locate(my, y)
    xc = mx.a + mx.h * (np.asarray(r) + 0.5)
    yc = my.a + my.h * (np.asarray(s) + 0.5)
    px = np.sqrt(2.0 / mx.h) * legendre_orthonormal(field.kx, 2.0 * (xw - xc) / mx.h)
    py = np.sqrt(2.0 / my.h) * legendre_orthonormal(field.ky, 2.0 * (yw - yc) / my.h)
    out = np.einsum("...ij,...i,...j->...", field.beta[r, s], px, py)
    return float(out) if np.ndim(out) == 0 else out


def sample(field: ModalField2D, m: int):
    """Field values at ``m x m`` Gauss points per cell.

    Returns ``(X, Y, U, W)`` with shapes ``(nx, ny, m, m)`` except ``W`` which
    holds the physical tensor weights ``(m, m)``.
    """
    rule = gauss_legendre(m)
    xp, wx = _cell_points(field.mesh.mx, rule)
    yp, wy = _cell_points(field.mesh.my, rule)
    px = _scaled_basis(field.kx, field.mesh.mx.h, rule)
    py = _scaled_basis(field.ky, field.mesh.my.h, rule)
    U = np.einsum("rsij,ai,bj->rsab", field.beta, px, py, optimize=True)
    X = np.broadcast_to(xp[:, None, :, None], U.shape)
    Y = np.broadcast_to(yp[None, :, None, :], U.shape)
    return X, Y, U, np.outer(wx, wy)


def error_norms(field: ModalField2D, exact: Callable, m: int | None = None) -> ErrorNorms:
    """Unnormalized L1, L2 and sampled L-infinity errors over the whole domain.

    ``m`` Gauss points per cell and axis; the default ``max(kx, ky) + 3`` makes
    the L1/L2 sums close to the true integrals.  ``m = degree + 1`` samples at
    the superconvergent Gauss points, the convention behind the reference
    error levels used in the acceptance suite.
    """
    m = max(field.kx, field.ky) + 3 if m is None else m
    if m < 1:
        raise ValueError("need at least one sample point per axis")
    X, Y, U, W = sample(field, m)
    err = U - np.broadcast_to(np.asarray(exact(X, Y), dtype=float), U.shape)
    a = np.abs(err)
    return ErrorNorms(float(np.sum(a * W)), float(np.sqrt(np.sum(err * err * W))), float(a.max()))


def total_mass(field: ModalField2D) -> float:
    return float(np.sum(field.beta[:, :, 0, 0]) * np.sqrt(field.mesh.cell_area))


def dump_field(field: ModalField2D, path) -> None:
    """Write ``r s i j beta`` lines after a commented header with the layout."""
    mx, my = field.mesh.mx, field.mesh.my
    nx, ny, nkx, nky = field.beta.shape
    r, s, i, j = np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nkx), np.arange(nky), indexing="ij")
    lines = [
        "# csldg modal field",
        f"# mesh {mx.a!r} {mx.b!r} {nx} {my.a!r} {my.b!r} {ny}",
        f"# degree {field.kx} {field.ky}",
        "# r s i j beta",
    ]
    lines += [
        f"{a} {b} {c} {d} {v!r}"
        for a, b, c, d, v in zip(r.ravel(), s.ravel(), i.ravel(), j.ravel(), field.beta.ravel().tolist())
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def load_field(path) -> ModalField2D:
    mesh = degree = None
    rows = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("# mesh"):
            t = line.split()[2:]
            mesh = Mesh2D(Mesh1D(float(t[0]), float(t[1]), int(t[2])), Mesh1D(float(t[3]), float(t[4]), int(t[5])))
        elif line.startswith("# degree"):
            degree = tuple(int(v) for v in line.split()[2:])
        elif line and not line.startswith("#"):
            rows.append(line.split())
    if mesh is None or degree is None:
        raise ValueError(f"{path}: missing mesh/degree header")
    field = ModalField2D.zeros(mesh, *degree)
    for r, s, i, j, v in rows:
        field.beta[int(r), int(s), int(i), int(j)] = float(v)
    return field
