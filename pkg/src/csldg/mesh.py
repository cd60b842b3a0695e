"""Uniform periodic meshes.

Cells are half-open, ``I_j = [x_{j-1/2}, x_{j+1/2})``.  Points outside the
domain are brought back by periodic wrapping (the virtual grid).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# relative distance to a face under which a point counts as lying on it
FACE_TOL = 1e-13


@dataclass(frozen=True)
class Mesh1D:
    a: float
    b: float
    n: int

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b)) or not self.b > self.a:
            raise ValueError(f"invalid interval [{self.a}, {self.b})")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"cell count must be a positive integer, got {self.n!r}")

    @property
    def length(self) -> float:
        return self.b - self.a

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.n

    @property
    def widths(self) -> np.ndarray:
        return np.full(self.n, self.h)

    @property
    def faces(self) -> np.ndarray:
        return self.a + self.h * np.arange(self.n + 1)

    @property
    def centers(self) -> np.ndarray:
        return self.a + self.h * (np.arange(self.n) + 0.5)

    def cell(self, j: int) -> tuple[float, float]:
        """(center, width) of cell ``j``."""
        return self.a + self.h * (j + 0.5), self.h

    def wrap(self, x):
        return wrap(self, x)

    def locate(self, x):
        return locate(self, x)


@dataclass(frozen=True)
class Mesh2D:
    mx: Mesh1D
    my: Mesh1D

    @classmethod
    def uniform(cls, xlim, ylim, nx: int, ny: int) -> "Mesh2D":
        return cls(Mesh1D(xlim[0], xlim[1], nx), Mesh1D(ylim[0], ylim[1], ny))

    @property
    def shape(self) -> tuple[int, int]:
        return self.mx.n, self.my.n

    @property
    def area(self) -> float:
        return self.mx.length * self.my.length

    @property
    def cell_area(self) -> float:
        return self.mx.h * self.my.h


def wrap(mesh: Mesh1D, x):
    """Shift ``x`` by a whole number of periods into ``[a, b)``."""
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("cannot wrap a non-finite coordinate")
    out = mesh.a + np.mod(arr - mesh.a, mesh.length)
    # np.mod can round up to exactly one period
    out = np.where(out >= mesh.b, mesh.a, out)
    return float(out) if out.ndim == 0 else out


def locate(mesh: Mesh1D, x):
    """Return ``(cell index, wrapped coordinate)`` for ``x``.

    Points within ``FACE_TOL * h`` below a face go to the cell on the right.
    """
    xw = np.asarray(wrap(mesh, x), dtype=float)
    j = np.floor((xw - mesh.a) / mesh.h + FACE_TOL).astype(int)
    at_end = j >= mesh.n
    j = np.where(at_end, 0, j)
    xw = np.where(at_end, mesh.a, xw)
    if xw.ndim == 0:
        return int(j), float(xw)
    return j, xw
