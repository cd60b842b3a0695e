"""Independent reference computations shared by the tests."""

import numpy as np


def shift_project(field, shift, q=12):
    """Closed form for constant speed: project u(x - shift) cell by cell."""
    mesh, K = field.mesh, field.degree
    x, w = np.polynomial.legendre.leggauss(q)
    out = np.zeros_like(field.coeffs)
    for j in range(mesh.n):
        lo = mesh.a + j * mesh.h
        # pieces of the target cell on which x - shift stays in one cell
        cut = mesh.a + mesh.h * np.ceil((lo - shift - mesh.a) / mesh.h) + shift
        for a, b in ((lo, min(cut, lo + mesh.h)), (max(cut, lo), lo + mesh.h)):
            if b - a <= 0:
                continue
            pts = 0.5 * (b - a) * (x + 1) + a
            vals = field.evaluate(pts - shift)
            xi = 2 * (pts - (lo + 0.5 * mesh.h)) / mesh.h
            phi = np.sqrt(2 / mesh.h) * np.stack(
                [np.sqrt((2 * m + 1) / 2) * np.polynomial.legendre.Legendre.basis(m)(xi) for m in range(K + 1)], 1)
            out[j] += (0.5 * (b - a) * w * vals) @ phi
    return out
