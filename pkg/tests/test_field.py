import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from csldg.field import (
    ModalField1D, ModalField2D, dump_field, error_norms, evaluate, load_field, project_1d, project_2d,
    sample, total_mass,
)
from csldg.mesh import Mesh1D, Mesh2D
from csldg.quadrature import gauss_legendre

BOX = (-np.pi, np.pi)


def test_zero_projection():
    f = project_2d(lambda x, y: 0.0 * x * y, Mesh2D.uniform(BOX, BOX, 4, 4), 2, 2)
    assert not f.beta.any()


def test_constant_mode_normalization():
    mesh = Mesh2D.uniform((0, 0.5), (0, 0.25), 1, 1)
    f = project_2d(lambda x, y: 3.0 + 0 * x * y, mesh, 2, 3)
    expected = np.zeros((3, 4))
    expected[0, 0] = 3.0 * np.sqrt(0.5 * 0.25)
    assert np.abs(f.beta[0, 0] - expected).max() <= 1e-12


def test_projection_error_matches_fine_oracle():
    mesh = Mesh2D.uniform(BOX, BOX, 16, 16)
    f = lambda x, y: np.cos(x - y)  # noqa: E731
    ours = error_norms(project_2d(f, mesh, 2, 2), f, 16).l2
    oracle = error_norms(project_2d(f, mesh, 2, 2, q=12), f, 16).l2
    assert ours == pytest.approx(oracle, abs=1e-10)


def test_polynomials_reproduced():
    mesh = Mesh2D.uniform((0, 1), (0, 2), 3, 2)
    f = lambda x, y: 1 + 2 * x - x * y + 3 * x * x * y * y  # noqa: E731
    field = project_2d(f, mesh, 2, 2)
    xs, ys = np.random.default_rng(1).uniform(0, 1, 40), np.random.default_rng(2).uniform(0, 2, 40)
    assert np.abs(field.evaluate(xs, ys) - f(xs, ys)).max() <= 1e-12


def test_restriction_is_a_1d_field():
    mesh = Mesh2D.uniform(BOX, BOX, 4, 4)
    field = project_2d(lambda x, y: np.sin(x) * np.exp(np.cos(y)), mesh, 2, 3)
    y0 = 0.37
    s = 2
    yc, hy = mesh.my.cell(s)
    from csldg.quadrature import eval_basis_cell
    phi_y = eval_basis_cell(3, (yc, hy), y0)
    line = ModalField1D(mesh.mx, 2, field.beta[:, s] @ phi_y)
    xs = np.linspace(-3, 3, 13)
    assert np.allclose(line.evaluate(xs), field.evaluate(xs, np.full_like(xs, y0)), atol=1e-13)


def test_evaluate_wraps_periodically():
    field = project_2d(lambda x, y: np.cos(x) + np.sin(y), Mesh2D.uniform(BOX, BOX, 8, 8), 2, 2)
    assert evaluate(field, 0.3 + 2 * np.pi, -0.2 - 4 * np.pi) == pytest.approx(evaluate(field, 0.3, -0.2))


def test_unit_error_norms():
    mesh = Mesh2D.uniform((0, 1), (0, 1), 3, 5)
    norms = error_norms(ModalField2D.zeros(mesh, 1, 2), lambda x, y: 1.0 + 0 * x)
    assert norms == pytest.approx((1.0, 1.0, 1.0), abs=1e-12)


def test_error_norm_sample_count():
    mesh = Mesh2D.uniform(BOX, BOX, 4, 4)
    f = project_2d(lambda x, y: np.cos(x - y), mesh, 2, 2)
    with pytest.raises(ValueError):
        error_norms(f, lambda x, y: 0 * x, 0)
    # sampling at the degree + 1 Gauss points is allowed
    assert error_norms(f, lambda x, y: np.cos(x - y), 3).l2 < error_norms(f, lambda x, y: np.cos(x - y)).l2


def test_mass_and_norm():
    mesh = Mesh2D.uniform((0, 2), (0, 1), 4, 4)
    f = project_2d(lambda x, y: x * y + 1, mesh, 2, 2)
    assert f.mass() == pytest.approx(3.0, abs=1e-13)
    assert total_mass(f) == f.mass()
    X, Y, U, W = sample(f, 6)
    assert f.l2_norm() == pytest.approx(np.sqrt(np.sum(U * U * W)), rel=1e-12)


def test_1d_projection_and_mass():
    mesh = Mesh1D(0.0, 1.0, 5)
    f = project_1d(lambda x: x ** 2, mesh, 2)
    assert f.mass() == pytest.approx(1.0 / 3.0, abs=1e-14)
    assert f.evaluate(0.33) == pytest.approx(0.33 ** 2, abs=1e-13)
    with pytest.raises(ValueError):
        ModalField1D(mesh, 2, np.zeros((5, 2)))


def test_shape_check():
    with pytest.raises(ValueError):
        ModalField2D(Mesh2D.uniform(BOX, BOX, 2, 2), 1, 1, np.zeros((2, 2, 2, 3)))


@given(nx=st.integers(1, 4), ny=st.integers(1, 4), kx=st.integers(0, 3), ky=st.integers(0, 3))
@settings(max_examples=20, deadline=None)
def test_dump_roundtrip(nx, ny, kx, ky, tmp_path_factory):
    mesh = Mesh2D.uniform((-1.0, 0.3), (0.1, 2.0), nx, ny)
    beta = np.random.default_rng(nx * 7 + ky).standard_normal((nx, ny, kx + 1, ky + 1))
    path = tmp_path_factory.mktemp("dump") / "field.txt"
    dump_field(ModalField2D(mesh, kx, ky, beta), path)
    back = load_field(path)
    assert back.mesh == mesh and (back.kx, back.ky) == (kx, ky)
    assert np.array_equal(back.beta, beta)


def test_dump_format(tmp_path):
    mesh = Mesh2D.uniform((0.0, 1.0), (0.0, 1.0), 1, 1)
    f = ModalField2D(mesh, 0, 1, np.array([[[[1.5, -2.0]]]]))
    dump_field(f, tmp_path / "f.txt")
    lines = (tmp_path / "f.txt").read_text().splitlines()
    assert lines[1] == "# mesh 0.0 1.0 1 0.0 1.0 1"
    assert lines[2] == "# degree 0 1"
    assert [ln.split()[:4] for ln in lines if not ln.startswith("#")] == [["0", "0", "0", "0"], ["0", "0", "0", "1"]]
