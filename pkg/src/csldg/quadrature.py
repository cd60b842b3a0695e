"""Gauss-Legendre quadrature and orthonormal Legendre bases.

The reference interval is [-1, 1].  Physical cells are described by their
center and width; the cell basis is the affine image of the reference basis
scaled so that it stays orthonormal under the physical measure.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_POINTS = 32
_NEWTON_TOL = 1e-15
_CLAMP_TOL = 1e-12


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre rule on [-1, 1]."""

    n: int
    nodes: np.ndarray
    weights: np.ndarray

    def integrate(self, f) -> float:
        return float(np.dot(self.weights, f(self.nodes)))

    def mapped(self, left: float, right: float) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights transported to the interval [left, right]."""
        half = 0.5 * (right - left)
        return left + half * (self.nodes + 1.0), half * self.weights


def _legendre_and_derivative(n: int, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p_prev = np.ones_like(x)
    p = x.copy()
    for k in range(1, n):
        p_prev, p = p, ((2 * k + 1) * x * p - k * p_prev) / (k + 1)
    dp = n * (x * p - p_prev) / (x * x - 1.0)
    return p, dp


@lru_cache(maxsize=None)
def _gauss_legendre_cached(n: int) -> QuadratureRule:
    if n == 1:
        nodes = np.array([0.0])
        weights = np.array([2.0])
    else:
        k = np.arange(1, n + 1)
        # Chebyshev-type guesses, ordered from +1 down to -1
        x = np.cos(np.pi * (k - 0.25) / (n + 0.5))
        for _ in range(100):
            p, dp = _legendre_and_derivative(n, x)
            dx = p / dp
            x = x - dx
            if np.max(np.abs(dx)) <= _NEWTON_TOL:
                break
        p, dp = _legendre_and_derivative(n, x)
        weights = 2.0 / ((1.0 - x * x) * dp * dp)
        nodes = x[::-1].copy()
        weights = weights[::-1].copy()
        # enforce exact symmetry
        nodes = 0.5 * (nodes - nodes[::-1])
        weights = 0.5 * (weights + weights[::-1])
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule(n, nodes, weights)


def gauss_legendre(n: int) -> QuadratureRule:
    """Return the ``n``-point Gauss-Legendre rule (1 <= n <= 32).

    Nodes are found by Newton iteration on P_n started from Chebyshev
    guesses; weights follow from P_n'.
    """
    if isinstance(n, bool) or int(n) != n or not 1 <= n <= MAX_POINTS:
        raise ValueError(f"number of Gauss points must be an integer in [1, {MAX_POINTS}], got {n!r}")
    return _gauss_legendre_cached(int(n))


def legendre_orthonormal(degree: int, xi) -> np.ndarray:
    """Orthonormal Legendre values without range checks.

    Returns an array of shape ``xi.shape + (degree + 1,)``.  Used on points
    that may sit marginally outside [-1, 1] (forward-traced quadrature points).
    """
    xi = np.asarray(xi, dtype=float)
    # recurrence on contiguous slabs; a strided last axis is slow on big arrays
    vals = [np.ones_like(xi)]
    if degree >= 1:
        vals.append(xi)
    for k in range(1, degree):
        vals.append(((2 * k + 1) * xi * vals[k] - k * vals[k - 1]) / (k + 1))
    out = np.stack(vals, axis=-1)
    out *= np.sqrt((2 * np.arange(degree + 1) + 1) / 2.0)
    return out


def eval_basis_ref(degree: int, xi) -> np.ndarray:
    """Evaluate phi_0..phi_K on the reference interval.

    ``xi`` may be a scalar or an array; points within 1e-12 of [-1, 1] are
    clamped, anything further out raises ``ValueError``.
    """
    if degree < 0:
        raise ValueError("degree must be non-negative")
    xi = np.asarray(xi, dtype=float)
    if np.any(np.abs(xi) > 1.0 + _CLAMP_TOL) or not np.all(np.isfinite(xi)):
        raise ValueError("reference coordinate outside [-1, 1]")
    return legendre_orthonormal(degree, np.clip(xi, -1.0, 1.0))


def eval_basis_cell(degree: int, cell: tuple[float, float], x) -> np.ndarray:
    """Evaluate the orthonormal basis of the physical cell ``(center, width)``."""
    xc, h = cell
    if not h > 0:
        raise ValueError("cell width must be positive")
    x = np.asarray(x, dtype=float)
    xi = 2.0 * (x - xc) / h
    if np.any(np.abs(xi) > 1.0 + _CLAMP_TOL):
        raise ValueError("point outside cell")
    return np.sqrt(2.0 / h) * legendre_orthonormal(degree, np.clip(xi, -1.0, 1.0))


def basis_matrix(degree: int, rule: QuadratureRule) -> np.ndarray:
    """Reference basis sampled at the rule's nodes, shape (n, degree + 1)."""
    return legendre_orthonormal(degree, rule.nodes)
