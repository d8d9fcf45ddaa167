"""
From many small steps to a smooth ramp
======================================

A slowly varying gap ``tau(t) = 0.1 + 0.05 t`` (in units of sigma) is cut
into ``n`` constant pieces.  Keeping paths with at most one resonance jump,
the piecewise sums approach the continuous-time value as ``n`` grows.
"""

import numpy as np

from respath.continuum import ContinuumData, GapSchedule, continuum_evaluate, discretize, no_jump_product
from respath.model import PAULI_X, PAULI_Y, PAULI_Z
from respath.pathsum import expectation_truncated

rho = 0.5 * (np.eye(2) + PAULI_X)
a = 0.7 * PAULI_X - 0.4 * PAULI_Y + 0.2 * PAULI_Z
horizon = 4.0

ramp = GapSchedule.from_tau(lambda t: 0.1 + 0.05 * t, 1.0, tau_prime=lambda t: 0.05)
res = continuum_evaluate(ramp, horizon, rho, a)
print(f"continuum value        {res.value.real:.12f}")
print(f"  constant paths       {res.constant_paths.real:.12f}")
print(f"  one jump 3->4 / 4->3 {res.jump_34.real:+.3e} / {res.jump_43.real:+.3e}")
print(f"  tau'_max * t = {res.truncation_scale:.3f}; remainder {res.remainder}")

# %%
# Discretizations.  The error halves with every doubling of n.
print()
print(f"{'n':>5} {'value':>16} {'error':>10}")
prev = None
for n in (25, 50, 100, 200, 400):
    v = expectation_truncated(discretize(ramp, horizon, n), rho, a, 1).real
    err = abs(v - res.value.real)
    ratio = "" if prev is None else f"  ratio {prev / err:.2f}"
    print(f"{n:5d} {v:16.12f} {err:10.2e}{ratio}")
    prev = err

# %%
# Staying on one resonance: the product of diagonal transition coefficients
# tends to the square-root weight w(0, t).
w = ContinuumData(ramp, horizon).w(0.0, horizon, 3)
print()
print(f"w(0, t, 3) = {w:.10f}")
for n in (50, 200, 800):
    print(f"  n = {n:4d}: product {no_jump_product(ramp, horizon, n):.10f}")
