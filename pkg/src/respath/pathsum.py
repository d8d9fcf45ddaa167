"""Dominant-order path sums over resonance paths.

The expectation of an observable after a piecewise-constant protocol is, to
leading order in the coupling,

    sum over paths (r_1..r_N) of
        exp(i sum_j t_j eps_j(r_j)) <v0, eta_1(r_1)> prod_j T_j(r_j, r_{j+1}) <eta~_N(r_N), a_vec>

with ``v0`` from :func:`respath.model.vectorize_state` and ``a_vec`` from
:func:`respath.model.apply_observable`.  The neglected remainder is of order
``max_j |lambda_j|``; it is reported as :data:`REMAINDER_CLASS` and never
estimated.
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass

import numpy as np

from .errors import BudgetError, NumericError, ValidationError
from .model import Regime, apply_observable, as_observable, as_state, vectorize_state
from .resonance import resonances_isolated, resonances_overlapping, transition_matrix

log = logging.getLogger(__name__)

REMAINDER_CLASS = "O(max|lambda_j|)"
FULL_BUDGET = 13
TRUNCATED_MAX_SEGMENTS = 10**6
IMAG_TOL = 1e-9


@dataclass(frozen=True)
class Path:
    """Sequence of 1-based resonance labels, one per segment."""

    labels: tuple

    def __post_init__(self):
        labels = tuple(int(r) for r in self.labels)
        if not labels:
            raise ValidationError("a path needs at least one label")
        if any(r not in (1, 2, 3, 4) for r in labels):
            raise ValidationError(f"path labels must be in 1..4, got {labels}")
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return len(self.labels)

    @property
    def jump_count(self):
        return sum(a != b for a, b in zip(self.labels, self.labels[1:]))


@dataclass(frozen=True)
class PathAmplitude:
    propagator: complex
    weight: complex

    @property
    def value(self):
        return self.propagator * self.weight


@dataclass(frozen=True)
class ResonanceData:
    """Per-segment resonance sets, boundary transition matrices and durations."""

    sets: tuple
    transitions: tuple
    durations: np.ndarray
    regime: Regime

    @property
    def n_segments(self):
        return len(self.sets)


@functools.lru_cache(maxsize=4096)
def _segment_resonances(gap, coupling, regime, beta, spectral, gap_floor, degeneracy_tol):
    from .model import Segment

    seg = Segment(gap, coupling, 0.0)
    if regime is Regime.OVERLAPPING:
        sigma = 0.5 * np.pi * coupling**2 * spectral.gamma0()
        return resonances_overlapping(sigma, gap / sigma, degeneracy_tol=degeneracy_tol)
    return resonances_isolated(seg, beta, spectral, gap_floor=gap_floor)


def resonance_data(protocol):
    """Resonance sets and transition matrices for every segment of ``protocol``."""
    sets = []
    for s in protocol.segments:
        sets.append(
            _segment_resonances(
                s.gap,
                s.coupling,
                protocol.regime,
                protocol.beta,
                protocol.spectral,
                protocol.gap_floor,
                protocol.degeneracy_tol,
            )
        )
    transitions = []
    cache = {}
    for j in range(len(sets) - 1):
        key = (id(sets[j]), id(sets[j + 1]))
        if key not in cache:
            cache[key] = transition_matrix(sets[j], sets[j + 1])
        transitions.append(cache[key])
    durations = np.array([s.duration for s in protocol.segments], dtype=float)
    return ResonanceData(tuple(sets), tuple(transitions), durations, protocol.regime)


def _boundaries(data, rho0, a):
    v0 = vectorize_state(rho0)
    a_vec = apply_observable(a)
    first = data.sets[0].right.conj() @ v0
    # <v0, eta(r)> = conj(<eta(r), v0>)
    first = first.conj()
    last = data.sets[-1].left.conj() @ a_vec
    return first, last


def path_amplitude(path, data, v0, a_vec):
    labels = path.labels if isinstance(path, Path) else tuple(path)
    if len(labels) != data.n_segments:
        raise ValidationError(f"path has {len(labels)} labels for {data.n_segments} segments")
    idx = [r - 1 for r in labels]
    phase = 0j
    for j, r in enumerate(idx):
        phase += 1j * data.durations[j] * data.sets[j].energies[r]
    weight = np.vdot(v0, data.sets[0].right[idx[0]])
    for j in range(len(idx) - 1):
        weight *= data.transitions[j].t[idx[j], idx[j + 1]]
    weight *= np.vdot(data.sets[-1].left[idx[-1]], a_vec)
    return PathAmplitude(complex(np.exp(phase)), complex(weight))


def path_value(path, data, v0, a_vec):
    """Contribution of a single resonance path to the dominant term."""
    return path_amplitude(path, data, v0, a_vec).value


def enumerate_paths(data, max_jumps=None, starts=None):
    """Yield label tuples along nonzero transition coefficients.

    Paths through a vanishing coefficient are never generated.  ``starts``
    restricts the first label (1-based); ``max_jumps`` bounds the jump count.
    """
    n = data.n_segments
    succ = []
    for t in data.transitions:
        mask = t.t != 0
        succ.append([tuple(int(c) + 1 for c in np.nonzero(mask[r])[0]) for r in range(4)])
    starts = (1, 2, 3, 4) if starts is None else tuple(starts)
    limit = n if max_jumps is None else max_jumps

    def extend(prefix, jumps):
        j = len(prefix)
        if j == n:
            yield tuple(prefix)
            return
        last = prefix[-1]
        for nxt in succ[j - 1][last - 1]:
            nj = jumps + (nxt != last)
            if nj <= limit:
                prefix.append(nxt)
                yield from extend(prefix, nj)
                prefix.pop()

    for r in starts:
        yield from extend([r], 0)


def _check_result(value, rho0, a, strict=True):
    scale = max(1.0, abs(value))
    if abs(value.imag) > IMAG_TOL * scale:
        msg = f"expectation of a Hermitian observable has imaginary part {value.imag:.3g}"
        if strict:
            raise NumericError(msg)
        log.info("%s (jump truncation)", msg)
    eig = np.linalg.eigvalsh(a.a)
    if eig[0] >= -1e-12 and abs(value) > eig[-1] * (1 + 1e-6):
        log.warning(
            "dominant-order expectation %.12g exceeds the largest eigenvalue %.12g of a positive observable",
            value.real,
            eig[-1],
        )


def expectation_full(protocol, rho0, a, budget=FULL_BUDGET):
    """Sum of :func:`path_value` over every resonance path of ``protocol``.

    Parameters
    ----------
    protocol : Protocol
    rho0 : SystemState or array
        Initial spin state.
    a : Observable or array
        Hermitian observable.
    budget : int
        Largest number of segments accepted for full enumeration.

    Returns
    -------
    complex
        Dominant term; the imaginary part vanishes for Hermitian inputs.
    """
    if protocol.n_segments > budget:
        raise BudgetError(
            f"full enumeration is limited to N <= {budget} segments (got {protocol.n_segments}); "
            "use expectation_truncated with a jump bound instead"
        )
    rho0 = as_state(rho0)
    a = as_observable(a)
    data = resonance_data(protocol)
    v0 = vectorize_state(rho0)
    a_vec = apply_observable(a)
    first, _ = _boundaries(data, rho0, a)
    starts = [r + 1 for r in range(4) if first[r] != 0]
    values = [path_value(p, data, v0, a_vec) for p in enumerate_paths(data, starts=starts)]
    value = complex(np.sum(np.array(values, dtype=complex))) if values else 0j
    _check_result(value, rho0, a)
    return value


def jump_resolved(protocol, rho0, a, max_jumps):
    """Contributions of paths with exactly ``k`` jumps, ``k = 0..max_jumps``.

    Evaluated by a forward recursion over segments that carries, for each
    label and jump count, the summed amplitude of all path prefixes; the cost
    is linear in the number of segments.
    """
    if max_jumps < 0:
        raise ValidationError("max_jumps must be >= 0")
    if protocol.n_segments > TRUNCATED_MAX_SEGMENTS:
        raise BudgetError(f"truncated sums are limited to N <= {TRUNCATED_MAX_SEGMENTS} segments")
    rho0 = as_state(rho0)
    a = as_observable(a)
    data = resonance_data(protocol)
    first, last = _boundaries(data, rho0, a)
    k_max = int(max_jumps)
    amp = np.zeros((k_max + 1, 4), dtype=complex)
    amp[0] = first * np.exp(1j * data.durations[0] * data.sets[0].energies)
    for j, tm in enumerate(data.transitions):
        t = tm.t
        diag = np.diag(t)
        off = t - np.diag(diag)
        prop = np.exp(1j * data.durations[j + 1] * data.sets[j + 1].energies)
        stay = amp * diag
        move = amp @ off
        nxt = stay
        nxt[1:] += move[:-1]
        amp = nxt * prop
    return amp @ last


def expectation_truncated(protocol, rho0, a, max_jumps):
    """Sum over resonance paths with at most ``max_jumps`` jumps.

    Unlike the full sum, the truncated sum need not be real for Hermitian
    inputs: when ``|tau|`` passes through 1, complex conjugation pairs a path
    that stays on label 3 with one that jumps to 4, and the cutoff can keep
    one without the other.  The imaginary part is returned as is.
    """
    rho0 = as_state(rho0)
    a = as_observable(a)
    parts = jump_resolved(protocol, rho0, a, max_jumps)
    value = complex(np.sum(parts))
    _check_result(value, rho0, a, strict=False)
    return value


def expectation(protocol, rho0, a, max_jumps=None, budget=FULL_BUDGET):
    """Full enumeration when ``max_jumps`` is None, truncated sum otherwise."""
    if max_jumps is None:
        return expectation_full(protocol, rho0, a, budget=budget)
    return expectation_truncated(protocol, rho0, a, max_jumps)


def count_paths(data, max_jumps=None):
    return sum(1 for _ in enumerate_paths(data, max_jumps=max_jumps))


__all__ = [
    "REMAINDER_CLASS",
    "Path",
    "PathAmplitude",
    "ResonanceData",
    "resonance_data",
    "path_amplitude",
    "path_value",
    "enumerate_paths",
    "expectation_full",
    "expectation_truncated",
    "expectation",
    "jump_resolved",
    "count_paths",
]
