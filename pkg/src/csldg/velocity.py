"""Advection fields and characteristic tracing.

All field callables take broadcastable arrays ``(x, y, t)`` and may return
scalars for constant components.  Traces solve ``dx/dt = A(x, t)`` with a
fixed-step explicit Runge-Kutta method, in either time direction.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import TracerDivergenceError

Component = Callable[[np.ndarray, np.ndarray, float], np.ndarray]

_FD_STEP = 1e-5


@dataclass(frozen=True)
class VelocityField:
    """Velocity ``A = (a, b)`` with optional analytic extras.

    ``flow(x, y, t_from, t_to)`` is the exact coupled flow map when known.
    ``split_flow(axis, start, frozen, t_from, t_to)`` is the exact flow of the
    one-dimensional equation with the other coordinate frozen.
    ``div_bound`` is the declared sup-norm of the divergence (M_A).
    """

    a: Component
    b: Component
    divergence: Optional[Component] = None
    jacobian: Optional[Callable] = None
    flow: Optional[Callable] = None
    split_flow: Optional[Callable] = None
    div_bound: Optional[float] = None
    name: str = "custom"

    def component(self, axis: str) -> Component:
        if axis == "x":
            return self.a
        if axis == "y":
            return self.b
        raise ValueError(f"axis must be 'x' or 'y', got {axis!r}")

    def div(self, x, y, t):
        if self.divergence is not None:
            return np.broadcast_to(self.divergence(x, y, t), np.broadcast(x, y).shape)
        return fd_divergence(self, x, y, t)

    def grad(self, x, y, t) -> np.ndarray:
        """Spatial Jacobian, shape ``broadcast(x, y).shape + (2, 2)``."""
        shape = np.broadcast(x, y).shape
        if self.jacobian is not None:
            jac = np.asarray(self.jacobian(x, y, t), dtype=float)
            return np.broadcast_to(jac, shape + (2, 2))
        return fd_jacobian(self, x, y, t)


def _bc(value, shape):
    return np.broadcast_to(np.asarray(value, dtype=float), shape)


def fd_jacobian(field: VelocityField, x, y, t, eps: float = _FD_STEP) -> np.ndarray:
    x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    shape = x.shape
    jac = np.empty(shape + (2, 2))
    for row, comp in enumerate((field.a, field.b)):
        jac[..., row, 0] = (_bc(comp(x + eps, y, t), shape) - _bc(comp(x - eps, y, t), shape)) / (2 * eps)
        jac[..., row, 1] = (_bc(comp(x, y + eps, t), shape) - _bc(comp(x, y - eps, t), shape)) / (2 * eps)
    return jac


def fd_divergence(field: VelocityField, x, y, t, eps: float = _FD_STEP) -> np.ndarray:
    jac = fd_jacobian(field, x, y, t, eps)
    return jac[..., 0, 0] + jac[..., 1, 1]


@dataclass(frozen=True)
class TracerConfig:
    """Fixed-step Runge-Kutta settings; ``substeps`` applies per trace call."""

    order: int = 4
    substeps: int = 1
    use_analytic: bool = False

    def __post_init__(self):
        if self.order not in (2, 4):
            raise ValueError("tracer order must be 2 or 4")
        if int(self.substeps) != self.substeps or self.substeps < 1:
            raise ValueError("tracer substeps must be a positive integer")


def _rk_step(rhs, state, t, dt, order):
    if order == 2:
        k1 = rhs(state, t)
        mid = [s + 0.5 * dt * k for s, k in zip(state, k1)]
        k2 = rhs(mid, t + 0.5 * dt)
        return [s + dt * k for s, k in zip(state, k2)]
    k1 = rhs(state, t)
    k2 = rhs([s + 0.5 * dt * k for s, k in zip(state, k1)], t + 0.5 * dt)
    k3 = rhs([s + 0.5 * dt * k for s, k in zip(state, k2)], t + 0.5 * dt)
    k4 = rhs([s + dt * k for s, k in zip(state, k3)], t + dt)
    return [s + dt / 6.0 * (p + 2.0 * q + 2.0 * r + w) for s, p, q, r, w in zip(state, k1, k2, k3, k4)]


def _integrate(rhs, state, t_from, t_to, cfg: TracerConfig):
    if t_to == t_from:
        return state
    dt = (t_to - t_from) / cfg.substeps
    t = t_from
    # overflow is reported below as a tracer failure, not as a warning
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(cfg.substeps):
            state = _rk_step(rhs, state, t, dt, cfg.order)
            t = t_from + (i + 1) * dt
    for s in state:
        if not np.all(np.isfinite(s)):
            raise TracerDivergenceError("characteristic trace produced a non-finite state")
    return state


def trace_1d(field: VelocityField, axis: str, start, frozen, t_from: float, t_to: float,
             cfg: TracerConfig = TracerConfig()):
    """Trace ``dx/dt = a(x, frozen, t)`` (or the y analogue) from t_from to t_to.

    ``start`` and ``frozen`` broadcast together; the frozen coordinate is held
    fixed through all substeps.
    """
    comp = field.component(axis)
    start = np.asarray(start, dtype=float)
    frozen = np.asarray(frozen, dtype=float)
    if cfg.use_analytic and field.split_flow is not None:
        out = np.asarray(field.split_flow(axis, start, frozen, t_from, t_to), dtype=float)
        out = np.broadcast_to(out, np.broadcast(start, frozen).shape).copy()
    else:
        if axis == "x":
            rhs = lambda s, t: [comp(s[0], frozen, t)]  # noqa: E731
        else:
            rhs = lambda s, t: [comp(frozen, s[0], t)]  # noqa: E731
        shape = np.broadcast(start, frozen).shape
        (out,) = _integrate(rhs, [np.broadcast_to(start, shape).astype(float)], t_from, t_to, cfg)
        out = np.broadcast_to(out, shape)
    if not np.all(np.isfinite(out)):
        raise TracerDivergenceError("characteristic trace produced a non-finite state")
    return float(out) if out.ndim == 0 else np.array(out)


def trace_2d(field: VelocityField, point, t_from: float, t_to: float,
             cfg: TracerConfig = TracerConfig()):
    """Coupled flow map of ``dx/dt = A(x, t)`` applied to ``point = (x, y)``."""
    x, y = (np.asarray(p, dtype=float) for p in point)
    x, y = np.broadcast_arrays(x, y)
    if cfg.use_analytic and field.flow is not None:
        xo, yo = field.flow(x, y, t_from, t_to)
        xo, yo = np.broadcast_arrays(np.asarray(xo, dtype=float), np.asarray(yo, dtype=float))
    else:
        def rhs(s, t):
            return [field.a(s[0], s[1], t), field.b(s[0], s[1], t)]
        xo, yo = _integrate(rhs, [x.astype(float), y.astype(float)], t_from, t_to, cfg)
        xo, yo = np.broadcast_arrays(xo, yo)
    if not (np.all(np.isfinite(xo)) and np.all(np.isfinite(yo))):
        raise TracerDivergenceError("characteristic trace produced a non-finite state")
    if xo.ndim == 0:
        return float(xo), float(yo)
    return np.array(xo), np.array(yo)


def liouville_factor(field: VelocityField, point, t_from: float, t_to: float,
                     cfg: TracerConfig = TracerConfig()):
    """Jacobian determinant of the flow map from t_from to t_to at ``point``.

    Computed as ``exp(int_{t_from}^{t_to} div A(s(tau), tau) dtau)`` along the
    traced path, with the same Runge-Kutta steps as the tracer.  For a
    backward trace this is the volume factor of the upstream image.
    """
    x, y = (np.asarray(p, dtype=float) for p in point)
    x, y = np.broadcast_arrays(x, y)

    def rhs(s, t):
        return [field.a(s[0], s[1], t), field.b(s[0], s[1], t), field.div(s[0], s[1], t)]

    _, _, logj = _integrate(rhs, [x.astype(float), y.astype(float), np.zeros(x.shape)], t_from, t_to, cfg)
    out = np.exp(np.broadcast_to(logj, x.shape))
    return float(out) if out.ndim == 0 else out
