"""Built-in transport problems."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .velocity import VelocityField

SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    velocity: VelocityField
    initial: Callable
    exact: Callable  # exact(x, y, t)
    xlim: tuple[float, float]
    ylim: tuple[float, float]
    t_end: float
    recurrence: bool = False  # exact solution equals the initial data at t_end
    sweeps_divergence_free: bool = False  # a does not depend on x, b not on y

    def exact_at(self, t: float) -> Callable:
        return lambda x, y: self.exact(x, y, t)


def _translation(a0: float, b0: float) -> VelocityField:
    def split_flow(axis, start, frozen, t_from, t_to):
        return start + (a0 if axis == "x" else b0) * (t_to - t_from)

    def flow(x, y, t_from, t_to):
        return x + a0 * (t_to - t_from), y + b0 * (t_to - t_from)

    return VelocityField(
        a=lambda x, y, t: np.full(np.broadcast(x, y).shape, a0),
        b=lambda x, y, t: np.full(np.broadcast(x, y).shape, b0),
        divergence=lambda x, y, t: 0.0,
        jacobian=lambda x, y, t: np.zeros((2, 2)),
        flow=flow,
        split_flow=split_flow,
        div_bound=0.0,
        name=f"translation({a0:g},{b0:g})",
    )


def rigid_body_velocity() -> VelocityField:
    """``(a, b) = (-4 sqrt2 y, 2 sqrt2 x)``: elliptic rotation, angular frequency 4."""
    ka, kb = 4.0 * SQRT2, 2.0 * SQRT2
    omega = np.sqrt(ka * kb)

    def flow(x, y, t_from, t_to):
        # x'' = -omega^2 x with x' = -ka y
        tau = t_to - t_from
        c, s = np.cos(omega * tau), np.sin(omega * tau)
        return c * x - (ka / omega) * s * y, (kb / omega) * s * x + c * y

    def split_flow(axis, start, frozen, t_from, t_to):
        speed = -ka * frozen if axis == "x" else kb * frozen
        return start + speed * (t_to - t_from)

    return VelocityField(
        a=lambda x, y, t: -ka * y + 0.0 * x,
        b=lambda x, y, t: kb * x + 0.0 * y,
        divergence=lambda x, y, t: 0.0,
        jacobian=lambda x, y, t: np.array([[0.0, -ka], [kb, 0.0]]),
        flow=flow,
        split_flow=split_flow,
        div_bound=0.0,
        name="rigid_body",
    )


def swirling_velocity(period: float = 1.5) -> VelocityField:
    """Swirling deformation that reverses at ``period / 2`` and recovers at ``period``."""
    def g(t):
        return 2.0 * np.pi * np.cos(np.pi * t / period)

    def a(x, y, t):
        return -np.cos(0.5 * x) ** 2 * np.sin(y) * g(t)

    def b(x, y, t):
        return np.sin(x) * np.cos(0.5 * y) ** 2 * g(t)

    def jacobian(x, y, t):
        gt = g(t)
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        jac = np.empty(x.shape + (2, 2))
        jac[..., 0, 0] = 0.5 * np.sin(x) * np.sin(y) * gt
        jac[..., 0, 1] = -np.cos(0.5 * x) ** 2 * np.cos(y) * gt
        jac[..., 1, 0] = np.cos(x) * np.cos(0.5 * y) ** 2 * gt
        jac[..., 1, 1] = -0.5 * np.sin(x) * np.sin(y) * gt
        return jac

    return VelocityField(
        a=a, b=b,
        divergence=lambda x, y, t: np.zeros(np.broadcast(x, y).shape),
        jacobian=jacobian,
        div_bound=0.0,
        name="swirling",
    )


def cosine_bell(x, y, x0=0.3 * np.pi, y0=0.0, r0=0.3 * np.pi):
    r = np.sqrt((x - x0) ** 2 + (y - y0) ** 2)
    return np.where(r < r0, r0 * np.cos(r * np.pi / (2.0 * r0)) ** 6, 0.0)


def _periodic(f, xlim, ylim):
    """Evaluate ``f`` on the periodic extension of the box."""
    lx, ly = xlim[1] - xlim[0], ylim[1] - ylim[0]
    return lambda x, y: f(xlim[0] + np.mod(x - xlim[0], lx), ylim[0] + np.mod(y - ylim[0], ly))


def constant_cos() -> ProblemSpec:
    box = (-np.pi, np.pi)
    return ProblemSpec(
        name="constant",
        velocity=_translation(1.0, 1.0),
        initial=lambda x, y: np.cos(x - y),
        exact=lambda x, y, t: np.cos(x - y) + 0.0 * t,
        xlim=box, ylim=box, t_end=np.pi,
        sweeps_divergence_free=True,
    )


def constant_sin() -> ProblemSpec:
    box = (-np.pi, np.pi)
    return ProblemSpec(
        name="constant_sin",
        velocity=_translation(1.0, 1.0),
        initial=lambda x, y: np.sin(x + y),
        exact=lambda x, y, t: np.sin(x + y - 2.0 * t),
        xlim=box, ylim=box, t_end=np.pi,
        sweeps_divergence_free=True,
    )


def rigid_body() -> ProblemSpec:
    xlim, ylim = (-1.5, 1.5), (-0.75, 0.75)
    u0 = _periodic(lambda x, y: np.exp(-x * x - 5.0 * y * y), xlim, ylim)
    return ProblemSpec(
        name="rigid_body",
        velocity=rigid_body_velocity(),
        initial=u0,
        exact=lambda x, y, t: u0(x, y),
        xlim=xlim, ylim=ylim, t_end=np.pi / 2.0,
        recurrence=True,
        sweeps_divergence_free=True,
    )


def swirling() -> ProblemSpec:
    box = (-np.pi, np.pi)
    u0 = _periodic(cosine_bell, box, box)
    return ProblemSpec(
        name="swirling",
        velocity=swirling_velocity(1.5),
        initial=u0,
        exact=lambda x, y, t: u0(x, y),
        xlim=box, ylim=box, t_end=1.5,
        recurrence=True,
    )


def still() -> ProblemSpec:
    """Zero velocity: the scheme must reduce to the initial projection."""
    box = (-np.pi, np.pi)
    return ProblemSpec(
        name="still",
        velocity=_translation(0.0, 0.0),
        initial=lambda x, y: np.cos(x - y),
        exact=lambda x, y, t: np.cos(x - y) + 0.0 * t,
        xlim=box, ylim=box, t_end=1.0,
        sweeps_divergence_free=True,
    )


PROBLEMS = {
    "constant": constant_cos,
    "constant_sin": constant_sin,
    "rigid_body": rigid_body,
    "swirling": swirling,
    "still": still,
}


def get_problem(name: str) -> ProblemSpec:
    try:
        return PROBLEMS[name]()
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; choose from {sorted(PROBLEMS)}") from None


def max_speed(problem: ProblemSpec, t_end: Optional[float] = None, n_space: int = 64, n_time: int = 16) -> float:
    """``max(|a| + |b|)`` over a sampled space-time grid."""
    t_end = problem.t_end if t_end is None else t_end
    x = np.linspace(*problem.xlim, n_space)
    y = np.linspace(*problem.ylim, n_space)
    X, Y = np.meshgrid(x, y, indexing="ij")
    best = 0.0
    for t in np.linspace(0.0, t_end, n_time):
        a = np.broadcast_to(problem.velocity.a(X, Y, t), X.shape)
        b = np.broadcast_to(problem.velocity.b(X, Y, t), X.shape)
        best = max(best, float(np.max(np.abs(a) + np.abs(b))))
    return best
