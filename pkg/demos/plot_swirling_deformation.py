"""
Swirling deformation
====================

A cosine bell is wound up by a time-reversing swirl and unwound again; at the
final time it should be back where it started.  Mass is conserved to round-off
at every step, and the L2 norm of the solution never grows.
"""

import dataclasses

import matplotlib.pyplot as plt

from csldg.field import sample
from csldg.harness import RunConfig, run

config = RunConfig(problem="swirling", nx=32, degree=3, cfl=2.5, splitting="strang4")
half = run(dataclasses.replace(config, t_end=0.75))
full = run(config)

print("L2 error after one period:", f"{full.norms.l2:.3e}")
print("largest per-step mass change:", f"{full.mass_drift:.1e}")
print("max ||u^n|| / ||u^0||:", f"{full.stability_ratio:.6f}")

fig, axes = plt.subplots(1, 2, figsize=(9, 4))
for ax, result, title in zip(axes, (half, full), ("t = 0.75", "t = 1.5")):
    X, Y, U, _ = sample(result.field, 4)
    ax.tricontourf(X.ravel(), Y.ravel(), U.ravel(), 30, cmap="viridis")
    ax.set_title(title)
    ax.set_aspect("equal")
fig.savefig("swirling.png", dpi=120)
