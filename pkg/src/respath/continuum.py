"""Continuous-time limit of the overlapping-resonance path sum.

For a smooth gap schedule ``Delta(t)`` with fixed coupling, the path sum over
``N`` equal segments converges as ``N -> oo`` to constant-path terms plus two
single-jump integrals (jumps ``3 -> 4`` and ``4 -> 3`` at time ``s``)::

    sum_r exp(i E_r(t)) w(0,t,r) <v0, eta(0,r)> <eta~(t,r), a>
    + int_0^t exp(i E_3(s) + i (E_4(t) - E_4(s))) w(0,s,3) K_34(s) w(s,t,4) ds
          * <v0, eta(0,3)> <eta~(t,4), a>
    + (same with 3 <-> 4)

where ``E_r(t) = int_0^t eps(s,r) ds``, ``K_34 = y+ y-' / (1 + y+^2)`` and
``K_43 = y- y+' / (1 + y-^2)``.  Paths with two or more jumps are dropped;
their size is ``O((tau'_max t)^2)`` with an unspecified constant.

Only ``|tau(t)| < 1`` is supported, where
``y_pm(t) = -i tau(t) -+ sqrt(1 - tau(t)^2)`` is smooth and
``1 + y_pm^2`` stays in the right half plane, so the principal square root
in ``w`` is continuous.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev
from scipy.interpolate import CubicSpline
from scipy.optimize import minimize_scalar

from .errors import DegeneracyError, NumericError, ParseError, RegimeError, ValidationError
from .model import Protocol, Regime, Segment, apply_observable, as_observable, as_state, vectorize_state
from .resonance import resonances_overlapping, transition_matrix
from .spectral import SpectralDensity, _quad, coupling_for_sigma

REMAINDER_CLASS = "O((tau'_max t)^2 exp(2 C tau'_max t))"
_SCAN_POINTS = 2001
_CHEB_MAX_DEGREE = 1024


def _derivative(f, t, scale):
    h = 1e-5 * max(scale, 1.0)
    return (f(t + h) - f(t - h)) / (2 * h)


class GapSchedule:
    """Gap ``Delta(t)`` at fixed coupling, in the overlapping regime.

    Parameters
    ----------
    delta : callable
        ``t -> Delta(t)``; continuously differentiable.
    coupling : float
        Fixed coupling ``lambda``.
    spectral : SpectralDensity, optional
        Defaults to the standard form factor.
    delta_prime : callable, optional
        Derivative of ``delta``.  Central differences are used when absent.
    """

    def __init__(self, delta, coupling, spectral=None, delta_prime=None, name="schedule"):
        if coupling == 0 or not math.isfinite(coupling):
            raise ValidationError("schedule coupling must be finite and nonzero")
        self.delta = delta
        self.coupling = float(coupling)
        self.spectral = spectral if spectral is not None else SpectralDensity.default()
        self.sigma = 0.5 * math.pi * self.coupling**2 * self.spectral.gamma0()
        self._delta_prime = delta_prime
        self.name = name

    def __repr__(self):
        return f"GapSchedule({self.name!r}, coupling={self.coupling}, sigma={self.sigma:.6g})"

    @classmethod
    def from_tau(cls, tau, sigma, spectral=None, tau_prime=None, name="tau-schedule"):
        """Schedule given directly in units of ``sigma``: ``Delta(t) = sigma * tau(t)``."""
        spectral = spectral if spectral is not None else SpectralDensity.default()
        coupling = coupling_for_sigma(sigma, spectral)
        sched = cls(lambda t: sigma * tau(t), coupling, spectral, name=name)
        # recompute sigma exactly as given, avoiding a round trip through sqrt
        sched.sigma = float(sigma)
        if tau_prime is not None:
            sched._delta_prime = lambda t: sigma * tau_prime(t)
        return sched

    @classmethod
    def from_table(cls, t, delta, coupling, spectral=None, name="table"):
        """Cubic interpolant of tabulated ``(t, Delta)`` pairs; derivative is analytic."""
        t = np.asarray(t, dtype=float)
        delta = np.asarray(delta, dtype=float)
        if t.ndim != 1 or t.shape != delta.shape or t.size < 2:
            raise ValidationError("schedule table needs matching 1-D t and Delta columns (>= 2 rows)")
        if not np.all(np.isfinite(t)) or not np.all(np.isfinite(delta)):
            raise ValidationError("schedule table has non-finite entries")
        if np.any(np.diff(t) <= 0):
            raise ValidationError("schedule times must be strictly increasing")
        spline = CubicSpline(t, delta)
        deriv = spline.derivative()
        sched = cls(lambda s: float(spline(s)), coupling, spectral, lambda s: float(deriv(s)), name=name)
        sched.t_range = (float(t[0]), float(t[-1]))
        return sched

    @classmethod
    def from_file(cls, path, coupling, spectral=None):
        """Read a two-column text file ``t Delta`` (``#`` comments allowed)."""
        rows = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                parts = line.replace(",", " ").split()
                if len(parts) != 2:
                    raise ParseError(f"expected two columns 't Delta', got {line!r}", lineno)
                try:
                    rows.append((float(parts[0]), float(parts[1])))
                except ValueError:
                    raise ParseError(f"non-numeric entry in {line!r}", lineno) from None
        if len(rows) < 2:
            raise ParseError("schedule file needs at least two rows")
        t, d = zip(*rows)
        return cls.from_table(t, d, coupling, spectral, name=str(path))

    def tau(self, t):
        return self.delta(t) / self.sigma

    def delta_prime(self, t):
        if self._delta_prime is not None:
            return self._delta_prime(t)
        return _derivative(self.delta, t, 1.0)

    def tau_prime(self, t):
        return self.delta_prime(t) / self.sigma

    def _scan(self, f, horizon):
        ts = np.linspace(0.0, horizon, _SCAN_POINTS)
        vals = np.array([abs(f(s)) for s in ts])
        i = int(np.argmax(vals))
        lo, hi = ts[max(i - 1, 0)], ts[min(i + 1, len(ts) - 1)]
        best = vals[i]
        if hi > lo:
            res = minimize_scalar(lambda s: -abs(f(s)), bounds=(lo, hi), method="bounded")
            best = max(best, -res.fun)
        return float(best)

    def tau_max(self, horizon):
        return self._scan(self.tau, horizon)

    def tau_prime_max(self, horizon):
        """``sup |tau'(t)|`` on ``[0, horizon]`` (grid scan refined by bounded search)."""
        return self._scan(self.tau_prime, horizon)

    def check(self, horizon):
        if not (horizon >= 0 and math.isfinite(horizon)):
            raise ValidationError("horizon must be finite and >= 0")
        rng = getattr(self, "t_range", None)
        if rng is not None and not (rng[0] <= 0.0 and horizon <= rng[1]):
            raise ValidationError(f"horizon [0, {horizon}] is outside the tabulated range {rng}")
        tmax = self.tau_max(horizon)
        if not tmax < 1.0:
            raise RegimeError(f"sup |tau(t)| = {tmax:.6g} on [0, {horizon}]; the continuum limit needs |tau| < 1")
        return tmax


def y_plus_minus(tau):
    """``y_+, y_- = -i tau -+ sqrt(1 - tau^2)`` for ``|tau| < 1``."""
    root = math.sqrt(1.0 - tau * tau)
    return complex(-root, -tau), complex(root, -tau)


def y_prime(tau, tau_prime):
    """Time derivatives of ``y_+, y_-``."""
    d = tau * tau_prime / math.sqrt(1.0 - tau * tau)
    return complex(d, -tau_prime), complex(-d, -tau_prime)


class ContinuumData:
    """Time-dependent resonance data of a schedule on ``[0, horizon]``.

    ``E(t, r) = int_0^t eps(s, r) ds`` is obtained from a Chebyshev
    interpolant of ``eps(., r)`` integrated term by term.
    """

    def __init__(self, schedule, horizon):
        self.schedule = schedule
        self.horizon = float(horizon)
        self.sigma = schedule.sigma
        self.tau_max = schedule.check(self.horizon)
        self._cheb = {}
        if self.horizon > 0:
            for r in (3, 4):
                self._cheb[r] = self._integrated_energy(r)

    def y(self, t):
        return y_plus_minus(self.schedule.tau(t))

    def y_prime(self, t):
        return y_prime(self.schedule.tau(t), self.schedule.tau_prime(t))

    def epsilon(self, t, r):
        """``eps(t, 1..4) = 0, 2 i sigma, i sigma (1 +- sqrt(1 - tau^2))``."""
        s = self.sigma
        if r == 1:
            return 0j
        if r == 2:
            return 2j * s
        tau = self.schedule.tau(t)
        root = math.sqrt(1.0 - tau * tau)
        return complex(0.0, s * (1 + root)) if r == 3 else complex(0.0, s * (1 - root))

    def _integrated_energy(self, r):
        f = np.vectorize(lambda t: self.epsilon(t, r).imag)
        domain = [0.0, self.horizon]
        deg = 16
        while True:
            c = chebyshev.Chebyshev.interpolate(f, deg, domain=domain)
            tail = np.max(np.abs(c.coef[-4:]))
            if tail <= 1e-14 * max(1.0, np.max(np.abs(c.coef))):
                break
            if deg >= _CHEB_MAX_DEGREE:
                exact = _quad(lambda t: self.epsilon(t, r).imag, 0.0, self.horizon, "eps integral")
                approx = c.integ(lbnd=0.0)(self.horizon)
                if abs(exact - approx) > 1e-10 * max(1.0, abs(exact)):
                    raise NumericError(
                        f"Chebyshev integral of eps(., {r}) did not converge", residual=abs(exact - approx)
                    )
                break
            deg *= 2
        return c.integ(lbnd=0.0)

    def energy_integral(self, t, r):
        """``int_0^t eps(s, r) ds``."""
        if r == 1:
            return 0j
        if r == 2:
            return 2j * self.sigma * t
        if self.horizon == 0:
            return 0j
        return 1j * float(self._cheb[r](t))

    def w(self, s, t, r):
        """No-jump weight ``sqrt((1 + y(t)^2) / (1 + y(s)^2))`` (1 for r = 1, 2)."""
        if r in (1, 2) or s == t:
            return 1.0 + 0j
        k = 0 if r == 3 else 1
        ys, yt = self.y(s)[k], self.y(t)[k]
        return cmath.sqrt((1 + yt * yt) / (1 + ys * ys))

    def kernel(self, s, r):
        """Single-jump density: ``y+ y-'/(1 + y+^2)`` for 3->4, ``y- y+'/(1 + y-^2)`` for 4->3."""
        yp, ym = self.y(s)
        dp, dm = self.y_prime(s)
        if r == 3:
            return yp * dm / (1 + yp * yp)
        return ym * dp / (1 + ym * ym)

    def resonances(self, t):
        return resonances_overlapping(self.sigma, self.schedule.tau(t))

    def jump_integral(self, r, t=None):
        """``int_0^t`` of the single-jump integrand leaving resonance ``r`` (3 or 4)."""
        t = self.horizon if t is None else t
        if t == 0:
            return 0j
        r2 = 4 if r == 3 else 3
        e2t = self.energy_integral(t, r2)

        def integrand(s):
            phase = self.energy_integral(s, r) + e2t - self.energy_integral(s, r2)
            return cmath.exp(1j * phase) * self.w(0.0, s, r) * self.kernel(s, r) * self.w(s, t, r2)

        re = _quad(lambda s: integrand(s).real, 0.0, t, "jump integral (real part)")
        im = _quad(lambda s: integrand(s).imag, 0.0, t, "jump integral (imaginary part)")
        return complex(re, im)


@dataclass(frozen=True)
class ContinuumResult:
    value: complex
    constant_paths: complex
    jump_34: complex
    jump_43: complex
    tau_prime_max: float
    remainder: str = REMAINDER_CLASS

    @property
    def truncation_scale(self):
        return self.tau_prime_max


def continuum_evaluate(schedule, horizon, rho0, a):
    """Constant-path and single-jump contributions, returned separately."""
    rho0 = as_state(rho0)
    a = as_observable(a)
    data = ContinuumData(schedule, horizon)
    v0 = vectorize_state(rho0)
    a_vec = apply_observable(a)
    start = data.resonances(0.0)
    end = data.resonances(data.horizon)
    left = np.array([np.vdot(v0, start.right[k]) for k in range(4)])
    right = np.array([np.vdot(end.left[k], a_vec) for k in range(4)])

    constant = 0j
    for k in range(4):
        r = k + 1
        if left[k] == 0 or right[k] == 0:
            continue
        constant += (
            cmath.exp(1j * data.energy_integral(data.horizon, r)) * data.w(0.0, data.horizon, r) * left[k] * right[k]
        )
    j34 = j43 = 0j
    if left[2] != 0 and right[3] != 0:
        j34 = data.jump_integral(3) * left[2] * right[3]
    if left[3] != 0 and right[2] != 0:
        j43 = data.jump_integral(4) * left[3] * right[2]
    tpm = schedule.tau_prime_max(data.horizon) if data.horizon > 0 else 0.0
    return ContinuumResult(constant + j34 + j43, constant, j34, j43, tpm * data.horizon)


def continuum_value(schedule, horizon, rho0, a):
    """Continuous-time limit of the dominant term, up to single jumps.

    Parameters
    ----------
    schedule : GapSchedule
    horizon : float
        Final time ``t``.
    rho0 : SystemState or array
    a : Observable or array

    Returns
    -------
    complex
    """
    return continuum_evaluate(schedule, horizon, rho0, a).value


def sample_times(horizon, n, sampling="right"):
    """Sampling times of ``n`` equal segments: right endpoints ``j t / n`` or midpoints."""
    j = np.arange(1, n + 1, dtype=float)
    if sampling == "right":
        return j * horizon / n
    if sampling == "midpoint":
        return (j - 0.5) * horizon / n
    raise ValidationError(f"unknown sampling {sampling!r}; expected 'right' or 'midpoint'")


def discretize(schedule, horizon, n, sampling="right", beta=1.0):
    """Protocol of ``n`` equal segments sampling ``Delta`` on ``[0, horizon]``.

    ``sampling="right"`` takes ``Delta(j t / n)``; ``"midpoint"`` takes
    ``Delta((j - 1/2) t / n)``.
    """
    n = int(n)
    if n < 1:
        raise ValidationError("n must be >= 1")
    if horizon < 0:
        raise ValidationError("horizon must be >= 0")
    dt = horizon / n
    segs = [Segment(schedule.delta(s), schedule.coupling, dt) for s in sample_times(horizon, n, sampling)]
    try:
        return Protocol(segs, beta, schedule.spectral, Regime.OVERLAPPING)
    except DegeneracyError as exc:
        raise DegeneracyError(f"sampled schedule hits tau**2 == 1: {exc}") from None


def no_jump_product(schedule, horizon, n, r=3):
    """Product of diagonal transition coefficients ``T(r, r)`` along ``n + 1`` grid points ``0..t``.

    Its ``n -> oo`` limit is ``w(0, t, r)``.
    """
    if r not in (3, 4):
        raise ValidationError("no-jump products are only nontrivial for r = 3, 4")
    sets = [resonances_overlapping(schedule.sigma, schedule.tau(s)) for s in np.linspace(0.0, horizon, int(n) + 1)]
    prod = 1.0 + 0j
    for left, right in zip(sets, sets[1:]):
        prod *= transition_matrix(left, right).t[r - 1, r - 1]
    return prod


__all__ = [
    "REMAINDER_CLASS",
    "GapSchedule",
    "ContinuumData",
    "ContinuumResult",
    "y_plus_minus",
    "y_prime",
    "continuum_evaluate",
    "continuum_value",
    "discretize",
    "sample_times",
    "no_jump_product",
]
