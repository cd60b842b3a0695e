"""
Convergence for constant advection
==================================

``cos(x - y)`` is carried along the diagonal at unit speed in both directions
on the periodic square.  At time pi the exact solution coincides with the
initial data.  A CFL number of 10.5 is far beyond what an Eulerian DG scheme
could take.
"""

import numpy as np
import matplotlib.pyplot as plt

from csldg.harness import RunConfig, convergence, convergence_orders

meshes = [16, 32, 64, 128]
# samples=3 measures at the superconvergent Gauss points; the default of
# degree + 3 points gives somewhat larger errors with the same rate
config = RunConfig(problem="constant", degree=2, cfl=10.5, splitting="strang2", samples=3)
results = convergence(config, meshes)

errors = [r.norms.l2 for r in results]
for n, e, p, r in zip(meshes, errors, convergence_orders(errors, meshes), results):
    order = "  --" if p is None else f"{p:5.2f}"
    print(f"{n:4d}^2  steps={r.steps:3d}  L2={e:.3e}  order={order}")

h = 2 * np.pi / np.array(meshes)
plt.loglog(h, errors, "o-", label="L2 error")
plt.loglog(h, errors[0] * (h / h[0]) ** 3, "k:", label="h^3")
plt.xlabel("h")
plt.legend()
plt.savefig("constant_advection.png", dpi=120)
