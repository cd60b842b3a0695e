"""Stage schedules for "x-y-x" dimensional splitting.

A scheme is a list of ``(axis, fraction)`` stages.  The x stages and the y
stages each advance their own clock: the k-th x stage runs from
``t + (c_1 + ... + c_{k-1}) dt`` to ``t + (c_1 + ... + c_k) dt`` and likewise
for y, so both clocks reach ``t + dt`` at the end of the step.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, NamedTuple

_SUM_TOL = 1e-14


@dataclass(frozen=True)
class SplittingScheme:
    name: str
    stages: tuple[tuple[str, float], ...]

    @property
    def x_fractions(self) -> list[float]:
        return [f for ax, f in self.stages if ax == "x"]

    @property
    def y_fractions(self) -> list[float]:
        return [f for ax, f in self.stages if ax == "y"]

    def __len__(self) -> int:
        return len(self.stages)


class Violation(NamedTuple):
    rule: str
    detail: str
    amount: float = 0.0


class Stage(NamedTuple):
    axis: str
    t_start: float
    t_end: float


def strang2() -> SplittingScheme:
    return SplittingScheme("strang2", (("x", 0.5), ("y", 1.0), ("x", 0.5)))


def strang4() -> SplittingScheme:
    """Fourth-order (Forest-Ruth/Yoshida) splitting with seven stages."""
    cbrt2 = 2.0 ** (1.0 / 3.0)
    d1 = 1.0 / (2.0 - cbrt2)
    d2 = -cbrt2 / (2.0 - cbrt2)
    c1 = d1 / 2.0
    c2 = (d1 + d2) / 2.0
    return SplittingScheme("strang4", (
        ("x", c1), ("y", d1), ("x", c2), ("y", d2), ("x", c2), ("y", d1), ("x", c1),
    ))


def validate(scheme: SplittingScheme) -> list[Violation]:
    """Check the scheme invariants; an empty list means the scheme is valid."""
    out = []
    axes = [ax for ax, _ in scheme.stages]
    if any(ax not in ("x", "y") for ax in axes):
        out.append(Violation("axis", f"unknown axis in {axes}"))
        return out
    if not axes or axes[0] != "x" or axes[-1] != "x":
        out.append(Violation("ends", "schedule must start and end with an x stage"))
    if any(a == b for a, b in zip(axes, axes[1:])):
        out.append(Violation("alternation", "axes must alternate"))
    p, q = axes.count("x"), axes.count("y")
    if p != q + 1:
        out.append(Violation("count", f"x stages ({p}) must number y stages ({q}) + 1", float(p - q - 1)))
    sx, sy = sum(scheme.x_fractions), sum(scheme.y_fractions)
    if abs(sx - 1.0) > _SUM_TOL:
        out.append(Violation("sum_x", f"x fractions sum to {sx!r}", sx - 1.0))
    if abs(sy - 1.0) > _SUM_TOL:
        out.append(Violation("sum_y", f"y fractions sum to {sy!r}", sy - 1.0))
    return out


def stage_times(scheme: SplittingScheme, t: float, dt: float) -> Iterator[Stage]:
    clocks = {"x": 0.0, "y": 0.0}
    for axis, frac in scheme.stages:
        start = clocks[axis]
        clocks[axis] = start + frac
        yield Stage(axis, t + start * dt, t + clocks[axis] * dt)


def load_scheme(path) -> SplittingScheme:
    """Read a schedule file with one ``axis fraction`` pair per line.

    Blank lines and ``#`` comments are ignored; commas may separate fields.
    """
    stages = []
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].replace(",", " ").strip()
        if not line:
            continue
        axis, frac = line.split()
        stages.append((axis.lower(), float(frac)))
    return SplittingScheme(Path(path).stem, tuple(stages))


SCHEMES = {"strang2": strang2, "strang4": strang4}


def get_scheme(spec) -> SplittingScheme:
    if isinstance(spec, SplittingScheme):
        return spec
    if spec in SCHEMES:
        return SCHEMES[spec]()
    if Path(spec).is_file():
        return load_scheme(spec)
    raise ValueError(f"unknown splitting {spec!r}; expected strang2, strang4 or a schedule file")
