"""Level-shift matrices, resonance data and transition matrices for the spin-fermion model.

Resonance labels ``r = 1..4`` are stored as array indices ``0..3``.  Vectors
are rows of 4x4 arrays in the basis order of :data:`respath.model.BASIS`.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment
from scipy.special import expit

from .errors import DegeneracyError, NumericError, RegimeError, ValidationError
from .model import DEGENERACY_TOL, INDEX, SQRT2, Regime
from .spectral import pv_integral

BIORTHO_TOL = 1e-10
IMAG_TOL = 1e-12

_PP, _PM, _MP, _MM = (INDEX[k] for k in ("++", "+-", "-+", "--"))


def _basis(**coeffs):
    v = np.zeros(4, dtype=complex)
    for label, c in coeffs.items():
        v[INDEX[label.replace("p", "+").replace("m", "-")]] = c
    return v


@dataclass(frozen=True)
class LevelShiftMatrix:
    """4x4 level-shift operator in the doubled basis."""

    m: np.ndarray
    regime: Regime = Regime.OVERLAPPING
    sigma: float | None = None
    delta: float | None = None

    def __post_init__(self):
        m = np.array(self.m, dtype=complex)
        if m.shape != (4, 4):
            raise ValidationError("level-shift matrix must be 4x4")
        m.setflags(write=False)
        object.__setattr__(self, "m", m)
        ev = np.linalg.eigvals(m)
        scale = max(1.0, float(np.max(np.abs(m))))
        if np.min(ev.imag) < -IMAG_TOL * scale:
            raise ValidationError("level-shift matrix has an eigenvalue with negative imaginary part")

    def closed_form_energies(self):
        """Energies of :func:`resonances_overlapping` for this matrix, or ``None`` at sigma = 0."""
        if self.sigma is None or self.delta is None:
            return None
        if self.sigma == 0:
            d = abs(self.delta)
            return np.array([0.0, 0.0, d, -d], dtype=complex)
        return overlapping_energies(self.sigma, self.delta / self.sigma)


def level_shift_overlapping(sigma, delta):
    """Level-shift matrix for overlapping resonances.

    ``i sigma * I + [[0,0,0,-i sigma],[0,Delta,-i sigma,0],[0,-i sigma,-Delta,0],[-i sigma,0,0,0]]``
    """
    sigma = float(sigma)
    delta = float(delta)
    if sigma < 0:
        raise ValidationError("sigma must be >= 0")
    s = 1j * sigma
    m = np.zeros((4, 4), dtype=complex)
    m[_PP, _PP] = s
    m[_PP, _MM] = -s
    m[_PM, _PM] = s + delta
    m[_PM, _MP] = -s
    m[_MP, _PM] = -s
    m[_MP, _MP] = s - delta
    m[_MM, _PP] = -s
    m[_MM, _MM] = s
    return LevelShiftMatrix(m, Regime.OVERLAPPING, sigma, delta)


@dataclass(frozen=True)
class ResonanceSet:
    """Resonance energies with biorthogonal right/left vectors for one segment.

    ``right[r]`` is eta(r+1), ``left[r]`` is eta~(r+1).
    """

    energies: np.ndarray
    right: np.ndarray
    left: np.ndarray
    segment_index: int = 0
    regime: Regime = Regime.OVERLAPPING

    def __post_init__(self):
        for name, shape in (("energies", (4,)), ("right", (4, 4)), ("left", (4, 4))):
            a = np.array(getattr(self, name), dtype=complex)
            if a.shape != shape:
                raise ValidationError(f"ResonanceSet.{name} must have shape {shape}")
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    def gram(self):
        """Matrix of ``<eta~(r), eta(r')>``; the identity for a biorthonormal set."""
        return self.left.conj() @ self.right.T

    def projectors(self):
        """Rank-one projectors ``|eta(r)><eta~(r)|`` (invariant under rescaling of the pair)."""
        return np.einsum("ri,rj->rij", self.right, self.left.conj())

    def check(self, tol=BIORTHO_TOL):
        """Raise if the documented invariants fail; return self otherwise."""
        if np.max(np.abs(self.gram() - np.eye(4))) > tol:
            raise NumericError("resonance vectors are not biorthonormal")
        if np.min(self.energies.imag) < -IMAG_TOL * max(1.0, float(np.max(np.abs(self.energies)))):
            raise NumericError("resonance energy with negative imaginary part")
        if self.energies[0] != 0:
            raise NumericError("epsilon(1) must vanish exactly")
        return self


@dataclass(frozen=True)
class TransitionMatrix:
    """``t[r, r'] = <eta~_j(r), eta_{j+1}(r')>`` between consecutive segments."""

    t: np.ndarray
    regime: Regime = Regime.OVERLAPPING

    def __post_init__(self):
        t = np.array(self.t, dtype=complex)
        t.setflags(write=False)
        object.__setattr__(self, "t", t)

    def allowed(self):
        """Boolean mask of nonzero entries (the transition graph)."""
        return self.t != 0


# -- overlapping regime ----------------------------------------------------


def y_pm(tau):
    """``y_+, y_- = -i tau +- i sqrt(tau^2 - 1)`` with the principal square root."""
    root = cmath.sqrt(complex(tau * tau - 1.0))
    return -1j * tau + 1j * root, -1j * tau - 1j * root


def overlapping_energies(sigma, tau):
    root = sigma * cmath.sqrt(complex(tau * tau - 1.0))
    return np.array([0.0, 2j * sigma, 1j * sigma + root, 1j * sigma - root], dtype=complex)


def resonances_overlapping(sigma, tau, segment_index=0, degeneracy_tol=DEGENERACY_TOL):
    """Closed-form resonance data for overlapping resonances (leading order).

    Parameters
    ----------
    sigma : float
        Damping scale ``(pi/2) lambda^2 gamma0``, > 0.
    tau : float
        ``Delta / sigma``.  ``tau**2 == 1`` (within ``degeneracy_tol``) is
        rejected because resonances 3 and 4 then coincide.

    Returns
    -------
    ResonanceSet
    """
    if not sigma > 0:
        raise ValidationError("sigma must be > 0")
    if abs(tau * tau - 1.0) < degeneracy_tol:
        raise DegeneracyError(f"tau = {tau!r}: tau**2 == 1, resonances 3 and 4 are degenerate")
    yp, ym = y_pm(tau)
    ap = 1.0 / (1.0 + yp.conjugate() ** 2)
    am = 1.0 / (1.0 + ym.conjugate() ** 2)
    right = np.array(
        [
            _basis(pp=1 / SQRT2, mm=1 / SQRT2),
            _basis(pp=1 / SQRT2, mm=-1 / SQRT2),
            _basis(pm=1.0, mp=yp),
            _basis(pm=1.0, mp=ym),
        ]
    )
    left = np.array(
        [
            right[0],
            right[1],
            ap * _basis(pm=1.0, mp=yp.conjugate()),
            am * _basis(pm=1.0, mp=ym.conjugate()),
        ]
    )
    return ResonanceSet(overlapping_energies(sigma, tau), right, left, segment_index, Regime.OVERLAPPING)


# -- isolated regime -------------------------------------------------------


def resonances_isolated(segment, beta, spectral, segment_index=0, gap_floor=None):
    """Resonance data for isolated resonances, to second order in the coupling.

    Energies: ``0``, ``i pi lambda^2 gamma(Delta)``, and
    ``+-Delta + lambda^2 (i pi gamma(Delta) / 2 -+ sign(Delta) PV / 2)`` where
    ``PV`` is :func:`respath.spectral.pv_integral`.  The population block
    carries the Gibbs weights ``w+ = e^{-beta Delta} / (e^{-beta Delta} + 1)``
    and ``w- = 1 - w+``:

        eta(1) = phi++ + phi--          eta~(1) = w+ phi++ + w- phi--
        eta(2) = w- phi++ - w+ phi--    eta~(2) = phi++ - phi--

    and ``eta(3) = eta~(3) = phi+-``, ``eta(4) = eta~(4) = phi-+``.
    Negative gaps follow from conjugation by sigma_x; the formulas above are
    already written so that they hold for either sign.
    """
    delta = float(segment.gap)
    lam2 = float(segment.coupling) ** 2
    g0 = spectral.gamma0()
    floor = gap_floor if gap_floor is not None else 10.0 * 0.5 * math.pi * lam2 * g0
    if not abs(delta) > floor:
        raise RegimeError(f"|gap| = {abs(delta):.6g} is not above the isolated-regime floor {floor:.6g}")
    gam = spectral.gamma(delta)
    pv = pv_integral(delta, spectral)
    sign = math.copysign(1.0, delta)
    energies = np.array(
        [
            0.0,
            1j * math.pi * lam2 * gam,
            delta + lam2 * (0.5j * math.pi * gam - 0.5 * sign * pv),
            -delta + lam2 * (0.5j * math.pi * gam + 0.5 * sign * pv),
        ],
        dtype=complex,
    )
    w_plus = expit(-beta * delta)
    w_minus = expit(beta * delta)
    right = np.array(
        [
            _basis(pp=1.0, mm=1.0),
            _basis(pp=w_minus, mm=-w_plus),
            _basis(pm=1.0),
            _basis(mp=1.0),
        ]
    )
    left = np.array(
        [
            _basis(pp=w_plus, mm=w_minus),
            _basis(pp=1.0, mm=-1.0),
            _basis(pm=1.0),
            _basis(mp=1.0),
        ]
    )
    return ResonanceSet(energies, right, left, segment_index, Regime.ISOLATED)


def renormalized_gap(delta, coupling, spectral):
    """Lamb-shifted gap ``Delta - lambda^2 PV int_0^oo gamma(r Delta) / (r^2 - 1) dr``.

    Equals ``|Re eps(3)|`` of the isolated resonances, carrying the sign of ``delta``.
    The half-line integral is half of :func:`respath.spectral.pv_integral`
    because the integrand is even in ``r``.
    """
    if delta == 0:
        raise ValidationError("the Lamb shift is undefined at zero gap")
    return delta - math.copysign(1.0, delta) * coupling**2 * 0.5 * pv_integral(delta, spectral)


# -- transitions -----------------------------------------------------------


def transition_matrix(left, right):
    """Overlaps ``<eta~_left(r), eta_right(r')>`` computed from the stored vectors."""
    if left.regime is not right.regime:
        raise ValidationError(
            f"cannot connect a {left.regime.value} segment to a {right.regime.value} segment"
        )
    t = left.left.conj() @ right.right.T
    # overlaps that vanish analytically can come out at roundoff level; make
    # them exact zeros so the transition graph keeps its sparsity
    scale = np.outer(np.linalg.norm(left.left, axis=1), np.linalg.norm(right.right, axis=1))
    t[np.abs(t) <= 8 * np.finfo(float).eps * scale] = 0
    return TransitionMatrix(t, left.regime)


def transition_coefficients_overlapping(tau_j, tau_next):
    """Closed-form transition coefficients between two overlapping segments."""
    y3, y4 = y_pm(tau_j)
    n3, n4 = y_pm(tau_next)
    a3 = 1.0 / (1.0 + y3.conjugate() ** 2)
    a4 = 1.0 / (1.0 + y4.conjugate() ** 2)
    t = np.zeros((4, 4), dtype=complex)
    t[0, 0] = t[1, 1] = 1.0
    t[2, 2] = 1.0 + a3.conjugate() * y3 * (n3 - y3)
    t[3, 3] = 1.0 + a4.conjugate() * y4 * (n4 - y4)
    t[2, 3] = a3.conjugate() * y3 * (n4 - y4)
    t[3, 2] = a4.conjugate() * y4 * (n3 - y3)
    return t


def transition_coefficients_isolated(delta_j, delta_next, beta):
    """Closed-form transition coefficients between two isolated segments."""
    t = np.eye(4, dtype=complex)
    t[0, 1] = math.sinh(beta * (delta_next - delta_j) / 2) / (
        2 * math.cosh(beta * delta_j / 2) * math.cosh(beta * delta_next / 2)
    )
    return t


def separated_asymptotics(tau_j, tau_next):
    """Large-``|tau|`` expansions of T(3,3), T(4,4), T(3,4), T(4,3) as printed in the literature.

    Returns a dict keyed by ``(r, r')`` (1-based).  Residuals are expected to be
    ``O(1/tau_min^2)``.
    """
    a = (tau_next - tau_j) / (2 * tau_j)
    b = (abs(tau_next) - abs(tau_j)) / (2 * tau_j)
    return {(3, 3): 1 + a - b, (4, 4): 1 + a + b, (3, 4): a + b, (4, 3): a - b}


def overlapping_asymptotics(tau_j, tau_next):
    """Small-``|tau|`` expansions of the 3/4 block; residuals ``O(tau_max^2)``."""
    d = 0.5j * (tau_next - tau_j)
    return {(3, 3): 1 + d, (4, 4): 1 - d, (3, 4): d, (4, 3): -d}


# -- numeric oracle --------------------------------------------------------


def _blocks(m):
    """Connected components of the sparsity graph of ``m`` (invariant subspaces)."""
    n = m.shape[0]
    adj = (m != 0) | (m.T != 0)
    seen = [False] * n
    blocks = []
    for start in range(n):
        if seen[start]:
            continue
        stack, comp = [start], []
        seen[start] = True
        while stack:
            i = stack.pop()
            comp.append(i)
            for j in range(n):
                if adj[i, j] and not seen[j]:
                    seen[j] = True
                    stack.append(j)
        blocks.append(sorted(comp))
    return blocks


def numeric_eigendecomposition(lsm, reference=None, defect_tol=1e-6, segment_index=0):
    """Eigen-decompose a level-shift matrix with a generic dense eigensolver.

    The matrix is first split into invariant blocks (connected components of
    its sparsity pattern) so that eigenvalues which coincide across blocks do
    not mix eigenvectors.  Left vectors are rescaled so that
    ``<eta~(r), eta(r)> = 1``.  Labels follow ``reference`` energies by
    minimum total distance; without a reference the order is by (Re, Im).

    A Jordan block shows up as a left/right overlap of order ``sqrt(eps)``,
    so ``defect_tol`` must sit well above ``1.5e-8``.
    """
    m = lsm.m if isinstance(lsm, LevelShiftMatrix) else np.asarray(lsm, dtype=complex)
    if reference is None and isinstance(lsm, LevelShiftMatrix):
        reference = lsm.closed_form_energies()
    values = []
    rvecs = []
    lvecs = []
    for block in _blocks(m):
        sub = m[np.ix_(block, block)]
        w, vl, vr = scipy.linalg.eig(sub, left=True, right=True)
        for k in range(len(block)):
            r = np.zeros(4, dtype=complex)
            l = np.zeros(4, dtype=complex)
            r[block] = vr[:, k]
            l[block] = vl[:, k]
            overlap = np.vdot(l, r)
            if abs(overlap) < defect_tol * np.linalg.norm(l) * np.linalg.norm(r):
                raise DegeneracyError("level-shift matrix is defective (left/right eigenvectors orthogonal)")
            l = l / overlap.conjugate()
            values.append(w[k])
            rvecs.append(r)
            lvecs.append(l)
    values = np.array(values)
    if reference is not None:
        reference = np.asarray(reference, dtype=complex)
        cost = np.abs(reference[:, None] - values[None, :])
        _, order = linear_sum_assignment(cost)
    else:
        order = sorted(range(4), key=lambda k: (values[k].real, values[k].imag))
    order = list(order)
    energies = values[order]
    if reference is not None and reference[0] == 0:
        # label 1 is the invariant resonance; keep it exactly zero when the solver agrees
        if abs(energies[0]) < 1e-12 * max(1.0, float(np.max(np.abs(m)))):
            energies = energies.copy()
            energies[0] = 0.0
    return ResonanceSet(
        energies,
        np.array([rvecs[k] for k in order]),
        np.array([lvecs[k] for k in order]),
        segment_index,
        lsm.regime if isinstance(lsm, LevelShiftMatrix) else Regime.OVERLAPPING,
    )
