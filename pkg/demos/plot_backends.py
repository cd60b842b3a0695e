"""
Two ways to rebuild the tensor coefficients
===========================================

After each 1D sweep the line results must be turned back into 2D modal
coefficients.  The SVS backend does it with one fixed matrix product.  The
IBS backend solves a small interpolation system in every cell and projects
the interpolant.  Both give the same field; their cost grows differently.
"""

import dataclasses

import numpy as np

from csldg.harness import RunConfig, bench, run

config = RunConfig(problem="constant", degree=2, cfl=10.5)
for n in (16, 32):
    a = run(config.with_mesh(n))
    b = run(dataclasses.replace(config.with_mesh(n), backend="ibs"))
    gap = np.abs(a.field.beta - b.field.beta).max()
    print(f"{n}^2: L2 svs={a.norms.l2:.4e} ibs={b.norms.l2:.4e} max coefficient gap={gap:.1e}")

for row in bench(config, [32, 64], repeats=2):
    print(f"{row.mesh}^2: svs {row.t_svs:.2f}s  ibs {row.t_ibs:.2f}s  ratio {row.ratio:.2f}")
