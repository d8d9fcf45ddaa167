"""Domain types and basis conventions.

The doubled system space C^2 (x) C^2 is always addressed in the ordered basis

    phi_{++}, phi_{+-}, phi_{-+}, phi_{--}

where ``phi_{s's} = phi_{s'} (x) phi_s`` and ``phi_+`` / ``phi_-`` are the
sigma_z eigenvectors with eigenvalues +1 / -1.  A 2x2 matrix ``X`` is mapped
to the doubled space row-major, so component ``2*i + j`` carries ``X[i, j]``.

Units: hbar = k_B = 1 throughout.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateCouplingError, DegeneracyError, RegimeError, ValidationError

#: Labels of the doubled-space basis, in storage order.
BASIS = ("++", "+-", "-+", "--")
#: Label -> component index.  Every module addresses components through this.
INDEX = {label: i for i, label in enumerate(BASIS)}

SQRT2 = math.sqrt(2.0)
#: Trace vector psi_S = (phi_{++} + phi_{--}) / sqrt(2).
PSI_S = np.array([1.0, 0.0, 0.0, 1.0], dtype=complex) / SQRT2
PSI_S.setflags(write=False)

HERMITIAN_RTOL = 1e-10
DEGENERACY_TOL = 1e-6

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PROJ_PLUS = np.array([[1, 0], [0, 0]], dtype=complex)
PROJ_MINUS = np.array([[0, 0], [0, 1]], dtype=complex)

NAMED_OBSERVABLES = {
    "identity": np.eye(2, dtype=complex),
    "pauli_x": PAULI_X,
    "pauli_y": PAULI_Y,
    "pauli_z": PAULI_Z,
    "projector_plus": PROJ_PLUS,
    "projector_minus": PROJ_MINUS,
}


class Regime(enum.Enum):
    OVERLAPPING = "overlapping"
    ISOLATED = "isolated"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise ValidationError(
                f"unknown regime {value!r}; expected 'overlapping' or 'isolated'"
            ) from None


def _frozen(a):
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def _check_hermitian(m, what):
    if m.shape != (2, 2):
        raise ValidationError(f"{what} must be 2x2, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationError(f"{what} has non-finite entries")
    scale = max(1.0, float(np.max(np.abs(m))))
    if np.max(np.abs(m - m.conj().T)) > HERMITIAN_RTOL * scale:
        raise ValidationError(f"{what} is not Hermitian")


@dataclass(frozen=True)
class Segment:
    """One constant piece of the protocol: gap ``Delta``, coupling ``lambda`` and duration."""

    gap: float
    coupling: float
    duration: float

    def __post_init__(self):
        for name in ("gap", "coupling", "duration"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValidationError(f"segment {name} must be finite, got {value}")
            object.__setattr__(self, name, value)
        if self.duration < 0:
            raise ValidationError(f"segment duration must be >= 0, got {self.duration}")

    def with_duration(self, duration):
        return Segment(self.gap, self.coupling, duration)


@dataclass(frozen=True)
class SystemState:
    """Density matrix of the spin, validated Hermitian, unit trace and positive."""

    rho: np.ndarray

    def __post_init__(self):
        rho = _frozen(self.rho)
        _check_hermitian(rho, "density matrix")
        if abs(np.trace(rho) - 1.0) > HERMITIAN_RTOL:
            raise ValidationError(f"density matrix must have unit trace, got {np.trace(rho)}")
        if np.min(np.linalg.eigvalsh(rho)) < -HERMITIAN_RTOL:
            raise ValidationError("density matrix is not positive semidefinite")
        object.__setattr__(self, "rho", rho)

    @property
    def is_real(self):
        return bool(np.all(self.rho.imag == 0))

    @classmethod
    def pure(cls, psi):
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))


@dataclass(frozen=True)
class Observable:
    """Hermitian 2x2 observable of the spin."""

    a: np.ndarray

    def __post_init__(self):
        a = _frozen(self.a)
        _check_hermitian(a, "observable")
        object.__setattr__(self, "a", a)

    @classmethod
    def named(cls, name):
        try:
            return cls(NAMED_OBSERVABLES[name])
        except KeyError:
            raise ValidationError(
                f"unknown observable {name!r}; known: {', '.join(NAMED_OBSERVABLES)}"
            ) from None


def as_state(rho):
    return rho if isinstance(rho, SystemState) else SystemState(rho)


def as_observable(a):
    return a if isinstance(a, Observable) else Observable(a)


def vectorize_state(rho):
    """Map a density matrix to the left vector ``sqrt(2) (rho (x) 1) psi_S``.

    Component ``phi_{s's}`` equals ``sqrt(2) * rho[s', s]``.  Paired with
    :func:`apply_observable` through the antilinear-first inner product this
    reproduces ``trace(rho a)``.
    """
    rho = as_state(rho).rho
    # 2 rho / sqrt(2) rather than sqrt(2) rho: exact agreement with
    # apply_observable(identity) for the maximally mixed state
    return _frozen(2.0 * rho.reshape(4) / SQRT2)


def apply_observable(a):
    """Return ``(a (x) 1) psi_S`` with components ``a[s', s] / sqrt(2)``."""
    a = as_observable(a).a
    return _frozen(a.reshape(4) / SQRT2)


def inner(u, v):
    """Inner product, antilinear in the first slot."""
    return complex(np.vdot(u, v))


def excited_projector(gap):
    """Projector onto the excited state of ``H_S = (gap / 2) sigma_z``.

    For a positive gap the excited state is phi_+, for a negative gap phi_-.
    A zero gap has no excited state.
    """
    if gap > 0:
        return Observable(PROJ_PLUS)
    if gap < 0:
        return Observable(PROJ_MINUS)
    raise ValidationError("a zero gap has no excited state")


def ground_state(gap):
    """Ground-state density matrix of ``(gap / 2) sigma_z``."""
    if gap > 0:
        return SystemState(PROJ_MINUS)
    if gap < 0:
        return SystemState(PROJ_PLUS)
    raise ValidationError("a zero gap has a degenerate ground state")


@dataclass(frozen=True)
class Protocol:
    """Piecewise-constant driving protocol plus bath parameters.

    Parameters
    ----------
    segments : sequence of Segment
        At least one segment, in time order.
    beta : float
        Inverse temperature, > 0.
    spectral : SpectralDensity
        Form factor of the reservoir coupling.
    regime : Regime or str
        ``"overlapping"`` or ``"isolated"``.
    gap_floor : float, optional
        Minimum ``|Delta|`` in the isolated regime.  Defaults to ``10 * sigma``
        evaluated per segment.
    """

    segments: Sequence[Segment]
    beta: float
    spectral: object = None
    regime: Regime = Regime.OVERLAPPING
    gap_floor: float | None = None
    degeneracy_tol: float = DEGENERACY_TOL
    _sigmas: tuple = field(init=False, repr=False, compare=False, default=())

    def __post_init__(self):
        from .spectral import SpectralDensity

        segments = tuple(self.segments)
        if len(segments) < 1:
            raise ValidationError("protocol needs N >= 1 segments")
        for s in segments:
            if not isinstance(s, Segment):
                raise ValidationError(f"expected Segment, got {type(s).__name__}")
        beta = float(self.beta)
        if not (beta > 0 and math.isfinite(beta)):
            raise ValidationError(f"beta must be > 0, got {self.beta}")
        spectral = self.spectral if self.spectral is not None else SpectralDensity.default()
        regime = Regime.parse(self.regime)
        object.__setattr__(self, "segments", segments)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "spectral", spectral)
        object.__setattr__(self, "regime", regime)

        g0 = spectral.gamma0()
        sigmas = []
        for j, s in enumerate(segments):
            if s.coupling == 0:
                raise DegenerateCouplingError(f"segment {j}: coupling must be nonzero")
            sigma = 0.5 * math.pi * s.coupling**2 * g0
            sigmas.append(sigma)
            if regime is Regime.OVERLAPPING:
                tau = s.gap / sigma
                if abs(tau * tau - 1.0) < self.degeneracy_tol:
                    raise DegeneracyError(
                        f"segment {j}: tau = {tau:.12g} gives tau**2 == 1; "
                        "resonances 3 and 4 coincide (complete splitting violated)"
                    )
            else:
                floor = self.gap_floor if self.gap_floor is not None else 10.0 * sigma
                if not abs(s.gap) > floor:
                    raise RegimeError(
                        f"segment {j}: |gap| = {abs(s.gap):.6g} is not above the "
                        f"isolated-regime floor {floor:.6g}"
                    )
        object.__setattr__(self, "_sigmas", tuple(sigmas))

    def __len__(self):
        return len(self.segments)

    @property
    def n_segments(self):
        return len(self.segments)

    @property
    def total_time(self):
        return math.fsum(s.duration for s in self.segments)

    def sigma(self, j):
        return self._sigmas[j]

    def tau(self, j):
        return self.segments[j].gap / self._sigmas[j]

    def replace_segments(self, segments):
        return Protocol(
            segments,
            self.beta,
            self.spectral,
            self.regime,
            gap_floor=self.gap_floor,
            degeneracy_tol=self.degeneracy_tol,
        )

    def split_segment(self, j, fraction=0.5):
        """Split segment ``j`` into two consecutive pieces with identical parameters."""
        s = self.segments[j]
        first = s.with_duration(s.duration * fraction)
        second = s.with_duration(s.duration - first.duration)
        segs = list(self.segments)
        segs[j : j + 1] = [first, second]
        return self.replace_segments(segs)

    def truncated(self, t):
        """Protocol restricted to ``[0, t]``; the last segment is extended past its end."""
        if t < 0:
            raise ValidationError("time must be >= 0")
        segs = []
        elapsed = 0.0
        for s in self.segments:
            if elapsed + s.duration >= t:
                segs.append(s.with_duration(max(t - elapsed, 0.0)))
                return self.replace_segments(segs)
            segs.append(s)
            elapsed += s.duration
        last = segs[-1]
        segs[-1] = last.with_duration(last.duration + (t - elapsed))
        return self.replace_segments(segs)
