"""Single sudden level crossing.

The spin Hamiltonian is ``(Delta1 / 2) sigma_z`` on ``[0, t_c]`` and
``-(Delta2 / 2) sigma_z`` afterwards.  The spin starts in the ground state
``phi_-`` of the first Hamiltonian, and ``p(t)`` is the population of the
excited state of the Hamiltonian in force at time ``t``: ``phi_+`` before the
crossing and ``phi_-`` after it.  Because the excited state itself switches at
``t_c``, ``p`` jumps up there.

Every probability is the real part of a path sum computed by
:func:`respath.pathsum.expectation_full`; closed forms appear here only as
diagnostics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import ValidationError
from .model import Protocol, Regime, Segment, excited_projector, ground_state
from .pathsum import expectation_full
from .spectral import SpectralDensity

REMAINDER = {
    Regime.OVERLAPPING: "O(|lambda| + Delta_max)",
    Regime.ISOLATED: "O(|lambda|)",
}


@dataclass(frozen=True)
class CrossingSpec:
    """Parameters of a sudden crossing; both gaps are given as positive magnitudes."""

    delta1: float
    delta2: float
    t_c: float
    coupling: float
    beta: float = 1.0
    regime: Regime = Regime.OVERLAPPING
    spectral: object = field(default=None, compare=False)
    gap_floor: float | None = None

    def __post_init__(self):
        for name in ("delta1", "delta2", "t_c"):
            value = float(getattr(self, name))
            if not (value > 0 and math.isfinite(value)):
                raise ValidationError(f"{name} must be finite and > 0, got {value}")
            object.__setattr__(self, name, value)
        object.__setattr__(self, "coupling", float(self.coupling))
        object.__setattr__(self, "beta", float(self.beta))
        object.__setattr__(self, "regime", Regime.parse(self.regime))
        if self.spectral is None:
            object.__setattr__(self, "spectral", SpectralDensity.default())

    @property
    def remainder(self):
        return REMAINDER[self.regime]

    @property
    def gaps(self):
        """Signed gaps of the two Hamiltonians."""
        return self.delta1, -self.delta2

    def protocol(self, t):
        """One segment for ``t <= t_c``, two segments afterwards."""
        if t < 0:
            raise ValidationError("time must be >= 0")
        g1, g2 = self.gaps
        if t <= self.t_c:
            segs = [Segment(g1, self.coupling, t)]
        else:
            segs = [Segment(g1, self.coupling, self.t_c), Segment(g2, self.coupling, t - self.t_c)]
        return Protocol(segs, self.beta, self.spectral, self.regime, gap_floor=self.gap_floor)

    def observable(self, t):
        g1, g2 = self.gaps
        return excited_projector(g1 if t <= self.t_c else g2)

    @property
    def initial_state(self):
        return ground_state(self.gaps[0])


def _probability(spec, protocol, observable):
    return expectation_full(protocol, spec.initial_state, observable).real


def crossing_probability(spec, t):
    """Excited-state population ``p(t)`` at dominant order.

    For ``t <= t_c`` the one-segment sum is used, afterwards the two-segment
    sum.  Valid in either regime; :func:`crossing_probability_isolated` is the
    same computation with an explicit regime check.
    """
    return _probability(spec, spec.protocol(t), spec.observable(t))


def crossing_probability_isolated(spec, t):
    """:func:`crossing_probability` for a spec in the isolated regime."""
    if spec.regime is not Regime.ISOLATED:
        raise ValidationError("crossing_probability_isolated needs regime='isolated'")
    return crossing_probability(spec, t)


def crossing_limits(spec):
    """One-sided limits ``(p(t_c-), p(t_c+))``.

    ``p(t_c+)`` uses the two-segment protocol with a zero-length second
    segment, i.e. the post-crossing observable applied at ``t_c``.
    """
    g1, g2 = spec.gaps
    before = _probability(spec, spec.protocol(spec.t_c), spec.observable(spec.t_c))
    after_protocol = Protocol(
        [Segment(g1, spec.coupling, spec.t_c), Segment(g2, spec.coupling, 0.0)],
        spec.beta,
        spec.spectral,
        spec.regime,
        gap_floor=spec.gap_floor,
    )
    after = _probability(spec, after_protocol, excited_projector(g2))
    return before, after


def crossing_jump(spec):
    """``p(t_c+) - p(t_c-)``; equals ``exp(-2 sigma t_c)`` for overlapping resonances.

    The path sum is linear in the observable, so the jump is evaluated as one
    expectation of the difference of the two excited-state projectors rather
    than as a difference of two probabilities near 1/2, which would lose all
    precision once the jump is small.
    """
    g1, g2 = spec.gaps
    protocol = spec.protocol(spec.t_c)
    diff = excited_projector(g2).a - excited_projector(g1).a
    return _probability(spec, protocol, diff)


def crossing_curve(spec, times):
    """``p`` on a grid of times, plus a boolean mask marking points after ``t_c``."""
    times = np.asarray(times, dtype=float)
    p = np.array([crossing_probability(spec, t) for t in times])
    return p, times > spec.t_c


@dataclass(frozen=True)
class IsolatedDiagnostics:
    """Rates and asymptotes for an isolated-regime crossing.

    ``rate`` is ``Im eps(2) = pi lambda^2 gamma(Delta1)``, the rate the path
    sum actually relaxes with.  ``rate_alt = pi^2 |lambda| gamma(Delta1)`` and
    ``alt_final = 1/(e^{-beta Delta2} + 1)`` are alternative closed-form
    readings of the pre-crossing exponent and post-crossing asymptote, kept
    for comparison only.  ``gibbs_final`` is the thermal excited population
    of the post-crossing Hamiltonian.
    """

    rate: float
    rate_alt: float
    rate_after: float
    gibbs_initial: float
    gibbs_final: float
    alt_final: float
    remainder: str


def isolated_diagnostics(spec):
    lam2 = spec.coupling**2
    g1 = spec.spectral.gamma(spec.delta1)
    g2 = spec.spectral.gamma(spec.delta2)
    return IsolatedDiagnostics(
        rate=math.pi * lam2 * g1,
        rate_alt=math.pi**2 * abs(spec.coupling) * g1,
        rate_after=math.pi * lam2 * g2,
        gibbs_initial=float(expit(-spec.beta * spec.delta1)),
        gibbs_final=float(expit(-spec.beta * spec.delta2)),
        alt_final=float(expit(spec.beta * spec.delta2)),
        remainder=REMAINDER[Regime.ISOLATED],
    )


def fit_decay_rate(times, values, target):
    """Least-squares slope of ``-log|values - target|`` against ``times``."""
    times = np.asarray(times, dtype=float)
    dev = np.abs(np.asarray(values, dtype=float) - target)
    keep = dev > 0
    if keep.sum() < 2:
        raise ValidationError("need at least two points with nonzero deviation to fit a rate")
    slope, _ = np.polyfit(times[keep], np.log(dev[keep]), 1)
    return -float(slope)


__all__ = [
    "REMAINDER",
    "CrossingSpec",
    "crossing_probability",
    "crossing_probability_isolated",
    "crossing_limits",
    "crossing_jump",
    "crossing_curve",
    "IsolatedDiagnostics",
    "isolated_diagnostics",
    "fit_decay_rate",
]
