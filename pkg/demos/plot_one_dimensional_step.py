"""
One semi-Lagrangian step in 1D
==============================

The 1D update traces each cell backward, cuts the upstream interval at the
grid faces and integrates the old solution against the transported test
functions.  For a constant speed this is just "shift, then project", which
makes a convenient sanity check.
"""

import numpy as np
import matplotlib.pyplot as plt

from csldg.csldg1d import step_field_1d, upstream_cells
from csldg.field import evaluate_1d, project_1d
from csldg.mesh import Mesh1D
from csldg.velocity import VelocityField

mesh = Mesh1D(0.0, 2 * np.pi, 8)
field = project_1d(lambda x: np.exp(np.sin(x)), mesh, 2)

# speed 1, time step of 1.3 cells: larger than any Eulerian CFL limit
unit = VelocityField(a=lambda x, y, t: 1.0 + 0.0 * x, b=lambda x, y, t: 0.0 * y)
dt = 1.3 * mesh.h
new = step_field_1d(field, unit, 0.0, dt)

# the upstream cells tile the period and straddle at most two Eulerian cells
for cell in upstream_cells(mesh, unit, "x", 0.0, dt, 0.0)[:3]:
    print(cell.j, [(round(float(p.left), 3), round(float(p.right), 3), p.cell) for p in cell.subintervals])

x = np.linspace(0.0, 2 * np.pi, 800, endpoint=False)
plt.plot(x, np.exp(np.sin(x - dt)), "k-", lw=0.8, label="exact")
plt.plot(x, evaluate_1d(new, x), "r--", label="one step, Q2, 8 cells")
plt.legend()
plt.savefig("one_dimensional_step.png", dpi=120)
