"""
Verification checks
===================

The verification module probes the properties the scheme relies on:
velocity bounds, flow-map consistency, the Liouville factor, norm control of
transported test functions, mass balance, stability and determinism.  A
deliberate mass error injected after the first step is caught.
"""

from csldg.harness import RunConfig
from csldg.verification import corrupt_mass, run_checks

config = RunConfig(problem="rigid_body", nx=20, degree=2, cfl=20.0)
for check in run_checks(config):
    print(f"{check.name:22s} {check.value: .3e}  <= {check.threshold:.3g}  {'ok' if check.passed else 'FAILED'}")

bad = {c.name: c for c in run_checks(RunConfig(nx=8), on_step=corrupt_mass())}
print("with injected mass error, mass_balance passed =", bad["mass_balance"].passed)
