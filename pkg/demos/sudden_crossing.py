"""
A spin flipped through a sudden level crossing
==============================================

The spin Hamiltonian is ``(Delta1/2) sigma_z`` up to ``t_c`` and
``-(Delta2/2) sigma_z`` afterwards.  The spin starts in its ground state and
we follow the population of whichever level is currently excited.

Two regimes are shown: overlapping resonances (coupling comparable to the
gap), where the population heads to 1/2, and isolated resonances (small
coupling, finite gaps), where it relaxes to the thermal value.
"""

import math

import numpy as np

from respath import SpectralDensity
from respath.scenarios import (
    CrossingSpec,
    crossing_jump,
    crossing_limits,
    crossing_probability,
    isolated_diagnostics,
)
from respath.spectral import coupling_for_sigma

spectral = SpectralDensity.default()

# %%
# Overlapping resonances
# ----------------------
# Pick the coupling so that the damping scale sigma is 0.1.

sigma, t_c = 0.1, 5.0
spec = CrossingSpec(0.05, 0.03, t_c, coupling_for_sigma(sigma, spectral), spectral=spectral)

print("overlapping resonances, sigma = 0.1, t_c = 5")
print(f"{'t':>6} {'p(t)':>12}")
for t in np.linspace(0, 30, 13):
    print(f"{t:6.1f} {crossing_probability(spec, t):12.8f}")

before, after = crossing_limits(spec)
print(f"p(t_c-) = {before:.8f}, p(t_c+) = {after:.8f}")
# the excited level itself switches at t_c, so p jumps by the surviving coherence
print(f"jump = {crossing_jump(spec):.10f}   exp(-2 sigma t_c) = {math.exp(-2 * sigma * t_c):.10f}")

# %%
# Isolated resonances
# -------------------
# Weak coupling and well separated gaps: before the crossing the excited
# population creeps up to its Gibbs value; after it, the now-excited level
# phi_- starts almost full and relaxes to the Gibbs value of the new gap.

spec = CrossingSpec(1.0, 1.5, 20.0, 0.05, beta=1.0, regime="isolated", spectral=spectral)
d = isolated_diagnostics(spec)
print()
print("isolated resonances, lambda = 0.05, beta = 1")
print(f"relaxation rates: before {d.rate:.6f}, after {d.rate_after:.6f}")
print(f"{'t':>6} {'p(t)':>12}")
for t in (0, 5, 10, 19.9, 20.1, 40, 80, 160, 400):
    print(f"{t:6.1f} {crossing_probability(spec, t):12.8f}")
print(f"Gibbs excited population before: {d.gibbs_initial:.8f}, after: {d.gibbs_final:.8f}")
