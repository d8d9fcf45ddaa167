"""
How many resonance jumps matter?
================================

For a protocol that changes slowly, paths with many jumps between
resonances contribute little.  Truncating the path sum after ``K`` jumps
leaves an error of order ``(tau'_max t)^(K+1)``; here we watch it happen
on a 12-step ramp.
"""

import numpy as np

from respath import Protocol, Segment, SpectralDensity
from respath.model import PAULI_X, PAULI_Y, PAULI_Z
from respath.pathsum import count_paths, expectation_full, expectation_truncated, resonance_data
from respath.spectral import coupling_for_sigma

spectral = SpectralDensity.default()
lam = coupling_for_sigma(1.0, spectral)
rho = 0.5 * (np.eye(2) + PAULI_X)
a = 0.7 * PAULI_X - 0.4 * PAULI_Y + 0.2 * PAULI_Z
total, n = 4.0, 12


def ramp(scale):
    dt = total / n
    return Protocol([Segment(0.2 + scale / total * (j + 1) * dt, lam, dt) for j in range(n)], 1.0, spectral)


p = ramp(0.2)
print(f"{count_paths(resonance_data(p))} nonvanishing paths out of 4^{n} = {4**n}")

scales = np.array([0.05, 0.1, 0.2])
errors = np.zeros((3, len(scales)))
for i, s in enumerate(scales):
    p = ramp(s)
    full = expectation_full(p, rho, a)
    for k in range(3):
        errors[k, i] = abs(expectation_truncated(p, rho, a, k) - full)

print(f"{'K':>2} " + " ".join(f"{s:>10}" for s in scales) + "   fitted exponent")
for k in range(3):
    slope = np.polyfit(np.log(scales), np.log(errors[k]), 1)[0]
    print(f"{k:2d} " + " ".join(f"{e:10.2e}" for e in errors[k]) + f"   {slope:.2f}")
