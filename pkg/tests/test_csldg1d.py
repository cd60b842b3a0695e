import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from csldg.csldg1d import (
    LineView, advect_lines, split_by_grid, step_field_1d, step_line, trace_cell, upstream_cells,
)
from csldg.errors import CharacteristicCrossingError
from csldg.field import ModalField1D, project_1d
from csldg.mesh import Mesh1D
from csldg.quadrature import gauss_legendre
from csldg.velocity import TracerConfig, VelocityField
from oracles import shift_project


def field_1d(a):
    return VelocityField(a=a, b=lambda x, y, t: 0.0 * y)


UNIT = field_1d(lambda x, y, t: 1.0 + 0.0 * x)
STILL = field_1d(lambda x, y, t: 0.0 * x)
WAVY = field_1d(lambda x, y, t: 1.0 + 0.5 * np.sin(x) + 0.0 * y)
MESH = Mesh1D(0.0, 2 * np.pi, 8)


def random_field(mesh, degree, seed):
    return ModalField1D(mesh, degree, np.random.default_rng(seed).standard_normal((mesh.n, degree + 1)))


# -- oracles ---------------------------------------------------------------

def ivp_flow(a, x0, t0, t1):
    sol = solve_ivp(lambda t, x: a(x, 0.0, t), (t0, t1), np.atleast_1d(x0).astype(float),
                    rtol=1e-13, atol=1e-14, method="DOP853")
    return sol.y[:, -1]


def brute_force_step(field, a, t0, dt, q=20):
    """alpha_m = int over the upstream cell of u^n(x) phi_m(X(x)), split at faces."""
    mesh, K = field.mesh, field.degree
    x, w = np.polynomial.legendre.leggauss(q)
    out = np.zeros_like(field.coeffs)
    faces = ivp_flow(a, mesh.faces, t0 + dt, t0)
    for j in range(mesh.n):
        left, right = faces[j], faces[j + 1]
        cuts = mesh.a + mesh.h * np.arange(np.floor((left - mesh.a) / mesh.h) + 1,
                                           np.ceil((right - mesh.a) / mesh.h))
        edges = np.concatenate([[left], cuts, [right]])
        center = mesh.a + (j + 0.5) * mesh.h
        for lo, hi in zip(edges[:-1], edges[1:]):
            pts = 0.5 * (hi - lo) * (x + 1) + lo
            fwd = ivp_flow(a, pts, t0, t0 + dt)
            xi = 2 * (fwd - center) / mesh.h
            phi = np.sqrt(2 / mesh.h) * np.stack(
                [np.sqrt((2 * m + 1) / 2) * np.polynomial.legendre.Legendre.basis(m)(xi) for m in range(K + 1)], 1)
            out[j] += (0.5 * (hi - lo) * w * field.evaluate(pts)) @ phi
    return out


# -- upstream cells ---------------------------------------------------------

def test_upstream_spans_two_cells():
    mesh = Mesh1D(0.0, 1.0, 10)
    up = trace_cell(mesh, 4, 0.0, UNIT, "x", 0.15, 0.0)
    assert up.count == 2
    assert up.length == pytest.approx(mesh.h, abs=1e-15)
    assert [p.cell for p in up.subintervals] == [2, 3]


def test_upstream_of_still_field_is_the_cell():
    mesh = Mesh1D(0.0, 1.0, 10)
    up = trace_cell(mesh, 4, 0.0, STILL, "x", 1.0, 0.0)
    assert up.count == 1 and up.subintervals[0].cell == 4


def test_whole_cell_shift_lands_on_left_neighbour():
    mesh = Mesh1D(0.0, 1.0, 10)
    up = trace_cell(mesh, 4, 0.0, UNIT, "x", 0.1, 0.0)
    assert up.count == 1 and up.subintervals[0].cell == 3


def test_split_by_grid_wraps():
    mesh = Mesh1D(0.0, 1.0, 4)
    pieces = split_by_grid(mesh, -0.1, 0.3)
    assert [(p.k, p.cell) for p in pieces] == [(-1, 3), (0, 0), (1, 1)]
    assert sum(p.length for p in pieces) == pytest.approx(0.4, abs=1e-15)


@given(st.floats(-3, 3), st.floats(1e-3, 2.5))
@settings(max_examples=100, deadline=None)
def test_subinterval_invariants(left, length):
    mesh = Mesh1D(-1.0, 1.0, 7)
    pieces = split_by_grid(mesh, left, left + length)
    assert abs(sum(p.length for p in pieces) - length) <= 1e-12 * mesh.h
    for p, q in zip(pieces, pieces[1:]):
        assert p.right == q.left and q.k == p.k + 1
    for p in pieces:
        lo = mesh.a + p.k * mesh.h
        assert lo - 1e-12 <= p.left < p.right <= lo + mesh.h + 1e-12
        assert p.cell == p.k % mesh.n


def test_upstream_cells_tile_the_period():
    cells = upstream_cells(MESH, WAVY, "x", 0.0, 1.0, 0.0)
    assert sum(c.length for c in cells) == pytest.approx(MESH.length, rel=1e-12)


def test_crossing_detected():
    # one coarse RK2 step on a compressive field folds the traced faces
    v = field_1d(lambda x, y, t: -20 * np.sin(x))
    with pytest.raises(CharacteristicCrossingError):
        advect_lines(np.ones((1, 8, 3)), MESH, 2, [0.0], v, "x", 0.0, 1.0, cfg=TracerConfig(2, 1))


# -- single steps --------------------------------------------------------------

@pytest.mark.parametrize("shift", [0.0, 0.3, 0.7853981633974483, 1.1, 2.9, -0.45, -5.0, 13.0])
def test_constant_speed_matches_shift_projection(shift):
    field = random_field(MESH, 2, 7)
    speed = field_1d(lambda x, y, t: np.sign(shift) + 0.0 * x) if shift else STILL
    dt = abs(shift)
    new = step_field_1d(field, speed, 0.0, dt)
    assert np.abs(new.coeffs - shift_project(field, shift)).max() <= 1e-11


def test_zero_dt_is_identity():
    field = random_field(MESH, 3, 1)
    assert np.array_equal(step_field_1d(field, WAVY, 0.2, 0.0).coeffs, field.coeffs)


def test_zero_field_stays_zero():
    field = ModalField1D(MESH, 2, np.zeros((8, 3)))
    assert not step_field_1d(field, WAVY, 0.0, 0.4).coeffs.any()


def test_step_line_equals_vectorized_kernel():
    field = random_field(MESH, 3, 2)
    cfg = TracerConfig(4, 3)
    up = upstream_cells(MESH, WAVY, "x", 0.0, 0.9, 0.2, cfg)
    ref = step_line(LineView(MESH, 3, field.coeffs), up, WAVY, "x", 0.2, 0.7, gauss_legendre(5), cfg)
    fast = advect_lines(field.coeffs[None], MESH, 3, [0.0], WAVY, "x", 0.2, 0.9, gauss_legendre(5), cfg)
    assert np.abs(ref.coeffs - fast[0]).max() <= 1e-13


def test_variable_speed_matches_brute_force():
    mesh = Mesh1D(0.0, 2 * np.pi, 4)
    field = random_field(mesh, 2, 5)
    a = WAVY.a
    new = step_field_1d(field, WAVY, 0.0, 0.3, gauss_legendre(12), TracerConfig(4, 200))
    assert np.abs(new.coeffs - brute_force_step(field, a, 0.0, 0.3)).max() <= 1e-10


def test_constant_data_under_compressive_speed():
    # u_t + (a u)_x = 0 does not keep constants when a depends on x: the exact
    # update of c is the projection of c * a(xi) / a(x)
    mesh = Mesh1D(0.0, 2 * np.pi, 4)
    field = project_1d(lambda x: 2.0 + 0 * x, mesh, 2)
    new = step_field_1d(field, WAVY, 0.0, 0.3, gauss_legendre(12), TracerConfig(4, 200))
    oracle = brute_force_step(field, WAVY.a, 0.0, 0.3)
    assert np.abs(new.coeffs - oracle).max() <= 1e-10
    assert np.abs(new.coeffs - field.coeffs).max() > 1e-2


def test_constant_data_kept_when_speed_ignores_x():
    field = project_1d(lambda x: 2.0 + 0 * x, MESH, 3)
    v = field_1d(lambda x, y, t: np.cos(3 * t) + 0.2 * y + 0 * x)
    new = advect_lines(np.stack([field.coeffs] * 3), MESH, 3, [0.0, 0.5, -1.0], v, "x", 0.1, 1.4)
    assert np.abs(new - field.coeffs).max() <= 1e-12


@pytest.mark.parametrize("dt", [0.1, 0.77, 2.5, -0.6])
def test_mass_conserved(dt):
    field = random_field(MESH, 2, 9)
    new = step_field_1d(field, WAVY, 0.3, dt)
    assert abs(new.mass() - field.mass()) <= 1e-10 * (1 + abs(field.mass()))


def test_linearity():
    u, v = random_field(MESH, 2, 11), random_field(MESH, 2, 12)
    combo = ModalField1D(MESH, 2, 1.5 * u.coeffs - 0.25 * v.coeffs)
    lhs = step_field_1d(combo, WAVY, 0.0, 0.8).coeffs
    rhs = 1.5 * step_field_1d(u, WAVY, 0.0, 0.8).coeffs - 0.25 * step_field_1d(v, WAVY, 0.0, 0.8).coeffs
    assert np.abs(lhs - rhs).max() <= 1e-12


def test_translation_commutes_with_whole_cell_shifts():
    field = random_field(MESH, 2, 13)
    rolled = ModalField1D(MESH, 2, np.roll(field.coeffs, 3, axis=0))
    a = step_field_1d(field, UNIT, 0.0, 0.37).coeffs
    b = step_field_1d(rolled, UNIT, 0.0, 0.37).coeffs
    assert np.abs(np.roll(a, 3, axis=0) - b).max() <= 1e-13


@given(st.floats(0.01, 5.0), st.integers(0, 100))
@settings(max_examples=30, deadline=None)
def test_translation_is_contractive(dt, seed):
    field = random_field(MESH, 2, seed)
    v = field_1d(lambda x, y, t: 0.8 + 0.3 * np.sin(t) + 0.0 * x)
    assert step_field_1d(field, v, 0.0, dt).l2_norm() <= field.l2_norm() + 1e-10


def test_full_revolution_error():
    mesh = Mesh1D(-np.pi, np.pi, 16)
    field = project_1d(np.sin, mesh, 2)
    cur = field
    for n in range(10):
        cur = step_field_1d(cur, UNIT, n * 0.2 * np.pi, 0.2 * np.pi)
    x, w = np.polynomial.legendre.leggauss(6)
    pts = mesh.centers[:, None] + 0.5 * mesh.h * x
    err = np.sqrt(np.sum(0.5 * mesh.h * w * (cur.evaluate(pts) - np.sin(pts)) ** 2))
    assert err <= 1e-3


def test_variable_speed_converges():
    # exact solution u(x, T) = u0(xi) a(xi) / a(x) with xi the foot of the characteristic
    a = WAVY.a
    u0 = lambda x: np.exp(np.sin(x))  # noqa: E731
    errs = []
    for n in (16, 32, 64):
        mesh = Mesh1D(0.0, 2 * np.pi, n)
        field = project_1d(u0, mesh, 2)
        steps = int(np.ceil(1.0 / (2.0 * mesh.h)))
        dt, t = 1.0 / steps, 0.0
        for _ in range(steps):
            field = step_field_1d(field, WAVY, t, dt, cfg=TracerConfig(4, 4))
            t += dt
        x, w = np.polynomial.legendre.leggauss(6)
        pts = (mesh.centers[:, None] + 0.5 * mesh.h * x).ravel()
        xi = ivp_flow(a, pts, t, 0.0)
        exact = u0(xi) * a(xi, 0, 0) / a(pts, 0, 0)
        err = np.sqrt(np.sum(np.tile(0.5 * mesh.h * w, n) * (field.evaluate(pts) - exact) ** 2))
        errs.append(err)
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 2.5), (errs, rates)
