"""Form factors and the scalar spectral quantities derived from them.

All reservoir information enters the simulator through

* ``gamma(r) = (sqrt|r| / 2) * integral over S^2 of |g(sqrt|r|, sigma)|^2``,
* its infrared limit ``gamma0``,
* ``sigma = (pi / 2) lambda^2 gamma0`` and ``tau = Delta / sigma``,
* the principal value ``PV integral gamma(r Delta) / (r^2 - 1) dr``,
* the thermal transform ``tau_beta g`` of the form factor.

Isotropic form factors may carry a *regular profile* ``h(k) = sqrt(k) g(k)``,
which removes the ``k^{-1/2}`` infrared singularity: then
``gamma(r) = 2 pi |h(sqrt r)|^2`` exactly.
"""

from __future__ import annotations

import math
import os
import threading
import warnings

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline
from scipy.special import expit

from .errors import DegenerateCouplingError, InfraredError, NumericError, ValidationError

DEFAULT_EPSABS = 1e-10
DEFAULT_EPSREL = 1e-8
FOUR_PI = 4.0 * math.pi


def quad_tolerances():
    """Return ``(epsabs, epsrel)``; ``RESONANCE_QUAD_TOL`` overrides the absolute one."""
    env = os.environ.get("RESONANCE_QUAD_TOL")
    if env:
        try:
            epsabs = float(env)
        except ValueError:
            raise ValidationError(f"RESONANCE_QUAD_TOL must be a number, got {env!r}") from None
        if not epsabs > 0:
            raise ValidationError("RESONANCE_QUAD_TOL must be positive")
        return epsabs, DEFAULT_EPSREL
    return DEFAULT_EPSABS, DEFAULT_EPSREL


def _quad(f, a, b, what, epsabs=None, epsrel=None, limit=400, **kw):
    """scipy quad with warnings turned into :class:`NumericError`."""
    da, dr = quad_tolerances()
    epsabs = da if epsabs is None else epsabs
    epsrel = dr if epsrel is None else epsrel
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, err = integrate.quad(f, a, b, epsabs=epsabs, epsrel=epsrel, limit=limit, **kw)
        except integrate.IntegrationWarning as exc:
            raise NumericError(f"{what}: quadrature did not converge ({exc})") from None
    if not math.isfinite(val):
        raise NumericError(f"{what}: non-finite result")
    if err > 10 * max(epsabs, epsrel * abs(val)):
        raise NumericError(f"{what}: quadrature tolerance not met", residual=err)
    return val


class SpectralDensity:
    """Form factor ``g`` of the reservoir coupling.

    Parameters
    ----------
    g : callable
        ``g(k)`` for isotropic form factors, ``g(k, theta, phi)`` otherwise.
        Must accept scalar ``k > 0``.
    isotropic : bool
        If true the angular integral is replaced by the factor ``4 pi``.
    regular : callable, optional
        Isotropic only: ``h(k) = sqrt(k) g(k)``, finite at ``k = 0``.  Used for
        evaluation when supplied.
    name : str, optional
    angular_points : int
        Gauss-Legendre order in ``cos(theta)`` for anisotropic ``g``; the
        azimuthal rule uses twice as many points.
    """

    def __init__(self, g, isotropic=True, regular=None, name=None, angular_points=24):
        if regular is not None and not isotropic:
            raise ValidationError("a regular profile is only supported for isotropic g")
        self.g = g
        self.isotropic = bool(isotropic)
        self.regular = regular
        self.name = name or getattr(g, "__name__", "custom")
        self.angular_points = int(angular_points)
        self._cache = {}
        self._lock = threading.Lock()
        self._gamma0 = None

    def __repr__(self):
        return f"SpectralDensity({self.name!r}, isotropic={self.isotropic})"

    # -- constructors -----------------------------------------------------

    @classmethod
    def default(cls):
        """``g(k) = |k|^{-1/2} exp(-|k|^2)``, for which ``gamma(r) = 2 pi exp(-2 r)``."""
        return cls(
            lambda k: k**-0.5 * math.exp(-k * k),
            regular=lambda k: math.exp(-k * k),
            name="default",
        )

    @classmethod
    def flat_cutoff(cls, cutoff=1.0):
        """``g(k) = |k|^{-1/2}`` for ``|k| <= cutoff``, zero beyond: ``gamma = 2 pi`` below ``cutoff**2``."""
        return cls(
            lambda k: k**-0.5 if k <= cutoff else 0.0,
            regular=lambda k: 1.0 if k <= cutoff else 0.0,
            name="flat-cutoff",
        )

    @classmethod
    def zero(cls):
        return cls(lambda k: 0.0, regular=lambda k: 0.0, name="zero")

    @classmethod
    def from_table(cls, k, g, name="table"):
        """Isotropic form factor from a tabulated radial profile.

        The regular profile ``sqrt(k) g(k)`` is interpolated with a cubic
        spline (constant extrapolation below the first node, zero beyond the
        last one).
        """
        k = np.asarray(k, dtype=float)
        g = np.asarray(g, dtype=float)
        if k.ndim != 1 or k.shape != g.shape or k.size < 4:
            raise ValidationError("form factor table needs >= 4 rows of (k, g)")
        if np.any(k <= 0) or np.any(np.diff(k) <= 0):
            raise ValidationError("form factor table needs strictly increasing k > 0")
        h = np.sqrt(k) * g
        spline = CubicSpline(k, h)
        k0, k1 = float(k[0]), float(k[-1])
        h0 = float(h[0])

        def regular(x):
            if x > k1:
                return 0.0
            if x < k0:
                return h0
            return float(spline(x))

        def gfun(x):
            return regular(x) / math.sqrt(x)

        return cls(gfun, regular=regular, name=name)

    @classmethod
    def from_file(cls, path):
        """Read a two-column ``k g(k)`` text file (``#`` comments allowed)."""
        try:
            data = np.loadtxt(path, comments="#", ndmin=2)
        except (OSError, ValueError) as exc:
            raise ValidationError(f"cannot read form factor table {path}: {exc}") from None
        if data.shape[1] != 2:
            raise ValidationError(f"form factor table {path} must have two columns")
        return cls.from_table(data[:, 0], data[:, 1], name=str(path))

    @classmethod
    def named(cls, name):
        """Form factor by name: ``default``, ``flat-cutoff`` or ``file:<path>``."""
        if name == "default":
            return cls.default()
        if name == "flat-cutoff":
            return cls.flat_cutoff()
        if name.startswith("file:"):
            return cls.from_file(name[5:])
        raise ValidationError(
            f"unknown form factor {name!r}; use 'default', 'flat-cutoff' or 'file:<path>'"
        )

    # -- gamma ------------------------------------------------------------

    def _angular_mean_sq(self, k, points):
        x, w = np.polynomial.legendre.leggauss(points)
        theta = np.arccos(x)
        phi = np.linspace(0.0, 2 * math.pi, 2 * points, endpoint=False)
        total = 0.0
        for th, wt in zip(theta, w):
            vals = [abs(self.g(k, th, ph)) ** 2 for ph in phi]
            total += wt * math.fsum(vals) * (2 * math.pi / len(phi))
        return total

    def _gamma_uncached(self, r):
        k = math.sqrt(r)
        if self.isotropic:
            if self.regular is not None:
                return 2 * math.pi * abs(self.regular(k)) ** 2
            return 0.5 * k * FOUR_PI * abs(self.g(k)) ** 2
        coarse = self._angular_mean_sq(k, self.angular_points)
        fine = self._angular_mean_sq(k, 2 * self.angular_points)
        if abs(fine - coarse) > 1e-8 * max(1.0, abs(fine)):
            raise NumericError(
                f"angular quadrature of |g|^2 at k={k:.6g} not converged",
                residual=abs(fine - coarse),
            )
        return 0.5 * k * fine

    def gamma(self, r):
        """Angular-averaged coupling strength at energy ``r``; depends on ``|r|`` only."""
        r = abs(float(r))
        if r == 0.0:
            return self.gamma0()
        cached = self._cache.get(r)
        if cached is not None:
            return cached
        value = self._gamma_uncached(r)
        if not math.isfinite(value):
            raise NumericError(f"gamma({r}) is not finite")
        with self._lock:
            self._cache[r] = value
        return value

    def gamma0(self):
        """Infrared limit of ``gamma``.

        Extrapolated in the variable ``sqrt(r)`` from ``r = 1e-4, 1e-6, 1e-8``
        with a quadratic fit; the linear fit through the two smallest points
        must agree to 1e-6 relative.
        """
        if self._gamma0 is not None:
            return self._gamma0
        r = np.array([1e-4, 1e-6, 1e-8])
        x = np.sqrt(r)
        v = np.array([self._gamma_uncached(ri) for ri in r])
        if not np.all(np.isfinite(v)):
            raise InfraredError("gamma is not finite near r = 0")
        quadratic = float(np.polyfit(x, v, 2)[-1])
        linear = v[2] - (v[1] - v[2]) / (x[1] - x[2]) * x[2]
        scale = float(np.max(np.abs(v)))
        if not quadratic > 1e-9 * scale:
            raise InfraredError(
                f"gamma0 = {quadratic:.3g} is not positive; g must behave like |k|^(-1/2) near 0"
            )
        if abs(quadratic - linear) > 1e-6 * abs(quadratic):
            raise InfraredError(
                "gamma has no stable limit at r -> 0+ "
                f"(extrapolants {quadratic:.12g} vs {linear:.12g})"
            )
        self._gamma0 = quadratic
        return quadratic

    def thermal(self, beta):
        return ThermalTransform(beta, self)


def sigma_tau(segment, spectral):
    """Return ``(sigma, tau)`` for a segment: ``sigma = (pi/2) lambda^2 gamma0``, ``tau = Delta / sigma``."""
    if segment.coupling == 0:
        raise DegenerateCouplingError("coupling is zero: sigma vanishes and tau is undefined")
    sigma = 0.5 * math.pi * segment.coupling**2 * spectral.gamma0()
    return sigma, segment.gap / sigma


def coupling_for_sigma(sigma, spectral):
    """Inverse of the sigma formula: the positive coupling giving ``sigma``."""
    if not sigma > 0:
        raise ValidationError("sigma must be positive")
    return math.sqrt(2.0 * sigma / (math.pi * spectral.gamma0()))


# -- principal values ------------------------------------------------------


def principal_value(f, lower=-math.inf, upper=math.inf, half_width=0.5):
    """``PV integral_lower^upper f(r) / (r^2 - 1) dr`` with poles at ``r = +-1``.

    Each pole is excised symmetrically on a window of ``half_width``; inside
    the window the smooth part is subtracted,

        PV int (G(r) - G(p)) / (r - p) dr + G(p) * PV int dr / (r - p),

    and the second term vanishes because the window is symmetric.  The rest of
    the range is integrated adaptively (infinite limits allowed).  Both poles
    must lie strictly inside ``(lower, upper)`` with their full window.
    """
    h = float(half_width)
    if not (lower < -1 - h and upper > 1 + h):
        raise ValidationError("integration range must contain both pole windows")
    if math.isinf(upper) or math.isinf(lower):
        for sign in (1.0, -1.0):
            near, far = (abs(f(sign * x)) / x for x in (1e3, 1e5))
            if far > 1e-12 and far > 0.5 * near:
                raise NumericError("integrand does not decay: principal value diverges")

    def regular(r):
        return f(r) / (r * r - 1.0)

    def near_plus(r):
        # G(r) = f(r) / (r + 1)
        return (f(r) / (r + 1.0) - g_plus) / (r - 1.0)

    def near_minus(r):
        # H(r) = f(r) / (r - 1)
        return (f(r) / (r - 1.0) - g_minus) / (r + 1.0)

    g_plus = f(1.0) / 2.0
    g_minus = f(-1.0) / -2.0
    pieces = (
        _quad(regular, lower, -1 - h, "pv tail"),
        _quad(near_minus, -1 - h, -1.0, "pv pole -1"),
        _quad(near_minus, -1.0, -1 + h, "pv pole -1"),
        _quad(regular, -1 + h, 1 - h, "pv middle"),
        _quad(near_plus, 1 - h, 1.0, "pv pole +1"),
        _quad(near_plus, 1.0, 1 + h, "pv pole +1"),
        _quad(regular, 1 + h, upper, "pv tail"),
    )
    return math.fsum(pieces)


def pv_integral(delta, spectral):
    """``PV integral over R of gamma(r Delta) / (r^2 - 1) dr``.

    ``gamma`` depends on ``|r Delta|`` only, so the result depends on
    ``|Delta|``; sign effects are handled by the caller.
    """
    delta = abs(float(delta))
    if delta == 0:
        raise ValidationError("pv_integral needs a nonzero gap")
    return principal_value(lambda r: spectral.gamma(r * delta))


# -- thermal transform -----------------------------------------------------


class ThermalTransform:
    """``[tau_beta g](u, sigma)``: the form factor as seen in the thermal representation.

    ``(1/sqrt 2) sqrt(|u|^{1/2} / (exp(-beta u) + 1))`` times ``g(sqrt u)`` for
    ``u >= 0`` and ``conj(g)(sqrt(-u))`` for ``u < 0``.
    """

    def __init__(self, beta, source):
        beta = float(beta)
        if not beta > 0:
            raise ValidationError("beta must be > 0")
        self.beta = beta
        self.source = source

    def _radial(self, k, sigma_pt):
        src = self.source
        if src.isotropic:
            if src.regular is not None:
                return complex(src.regular(k))
            k = max(k, 1e-300)
            return complex(math.sqrt(k) * src.g(k))
        if sigma_pt is None:
            raise ValidationError("anisotropic form factor needs an angular point (theta, phi)")
        k = max(k, 1e-300)
        return complex(math.sqrt(k) * src.g(k, *sigma_pt))

    def __call__(self, u, sigma_pt=None):
        u = float(u)
        k = math.sqrt(abs(u))
        # |u|^{1/4} g(sqrt|u|) == sqrt(k) g(k) == regular profile
        value = self._radial(k, sigma_pt)
        if u < 0:
            value = value.conjugate()
        return value * math.sqrt(0.5 * expit(self.beta * u))


def thermal_transform(spectral, beta, u, sigma_pt=None):
    return ThermalTransform(beta, spectral)(u, sigma_pt)
