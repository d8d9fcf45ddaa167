"""Independent reference computations used by the tests.

Nothing here imports the numerical core of ``respath``: every oracle builds
its answer from the raw definitions with plain numpy/scipy.
"""

from __future__ import annotations

import cmath
import math

import numpy as np
import scipy.linalg

SQRT2 = math.sqrt(2.0)


# -- principal value by brute-force excision --------------------------------


def _gauss_panels(f, edges, order=24):
    x, w = np.polynomial.legendre.leggauss(order)
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        mid, half = 0.5 * (a + b), 0.5 * (b - a)
        total += half * np.sum(w * f(mid + half * x))
    return total


def pv_excision(gamma, eps, upper=40.0):
    """``2 * [int_0^{1-eps} + int_{1+eps}^upper] gamma(r) / (r^2 - 1) dr`` on graded panels.

    Valid for an even ``gamma`` that is negligible beyond ``upper``.
    """
    f = lambda r: gamma(r) / (r * r - 1.0)
    d = np.geomspace(0.5, eps, 60)
    left = np.concatenate([[0.0], 1.0 - d])
    right = np.concatenate([1.0 + d[::-1], [1.5], np.linspace(2.0, upper, 200)])
    return 2.0 * (_gauss_panels(f, left) + _gauss_panels(f, right))


def pv_excision_extrapolated(gamma, eps_list=(1e-3, 1e-4, 1e-5), upper=40.0):
    """Quadratic extrapolation in ``eps`` of :func:`pv_excision` to ``eps = 0``.

    Symmetric excision leaves an error ``c1 eps + c3 eps^3 + ...``; fitting a
    polynomial through the three values removes the linear term.
    """
    eps = np.asarray(eps_list, dtype=float)
    vals = np.array([pv_excision(gamma, e, upper) for e in eps])
    coef = np.polyfit(eps, vals, len(eps) - 1)
    return float(coef[-1])


# -- overlapping-regime resonance data from the defining formulas -----------


def level_shift(sigma, delta):
    """Level-shift matrix written out entry by entry."""
    s = sigma
    return np.array(
        [
            [1j * s, 0, 0, -1j * s],
            [0, delta + 1j * s, -1j * s, 0],
            [0, -1j * s, -delta + 1j * s, 0],
            [-1j * s, 0, 0, 1j * s],
        ],
        dtype=complex,
    )


def closed_form_energies(sigma, tau):
    root = sigma * cmath.sqrt(tau * tau - 1)
    return [0j, 2j * sigma, 1j * sigma + root, 1j * sigma - root]


def closed_form_vectors(tau):
    """Right and left vectors of the overlapping regime, as (4, 4) row arrays."""
    root = cmath.sqrt(tau * tau - 1)
    yp, ym = -1j * tau + 1j * root, -1j * tau - 1j * root
    ap = 1 / (1 + yp.conjugate() ** 2)
    am = 1 / (1 + ym.conjugate() ** 2)
    right = np.array(
        [
            [1 / SQRT2, 0, 0, 1 / SQRT2],
            [1 / SQRT2, 0, 0, -1 / SQRT2],
            [0, 1, yp, 0],
            [0, 1, ym, 0],
        ],
        dtype=complex,
    )
    left = np.array(
        [
            [1 / SQRT2, 0, 0, 1 / SQRT2],
            [1 / SQRT2, 0, 0, -1 / SQRT2],
            ap * np.array([0, 1, yp.conjugate(), 0]),
            am * np.array([0, 1, ym.conjugate(), 0]),
        ],
        dtype=complex,
    )
    return right, left


def projector(right, left):
    """``|eta><eta~|`` as a matrix acting on column vectors."""
    return np.outer(right, left.conj())


# -- propagators ------------------------------------------------------------


def rho_vector(rho):
    return SQRT2 * np.asarray(rho, dtype=complex).reshape(4)


def obs_vector(a):
    return np.asarray(a, dtype=complex).reshape(4) / SQRT2


def overlapping_expectation_expm(segments, sigma_of, rho, a):
    """``<v0, prod_j expm(i t_j L_j) a_vec>`` with matrices applied in time order.

    ``segments`` holds ``(gap, duration)``; ``sigma_of(gap)`` gives sigma.
    """
    vec = obs_vector(a)
    for gap, duration in reversed(segments):
        vec = scipy.linalg.expm(1j * duration * level_shift(sigma_of(gap), gap)) @ vec
    return complex(np.vdot(rho_vector(rho), vec))


# -- sudden crossing closed forms ------------------------------------------


def crossing_overlapping(sigma, t_c, t):
    """Excited population through a sudden crossing, overlapping resonances."""
    if t <= t_c:
        return 0.5 * (1 - math.exp(-2 * sigma * t))
    return 0.5 * (1 + math.exp(-2 * sigma * t))


def crossing_isolated(delta1, delta2, t_c, rate1, rate2, beta, t):
    """Hand-derived excited population for isolated resonances.

    ``rate1``, ``rate2`` are the population relaxation rates of the two
    Hamiltonians.  Derived from the rate picture: before ``t_c`` the excited
    population of ``+Delta1`` relaxes from 0 to its Gibbs value; afterwards the
    population of ``phi_-`` (now excited) relaxes from ``1 - p(t_c)`` to the
    Gibbs value of ``-Delta2``.
    """
    g1 = 1 / (math.exp(beta * delta1) + 1)
    g2 = 1 / (math.exp(beta * delta2) + 1)
    if t <= t_c:
        return g1 * (1 - math.exp(-rate1 * t))
    start = 1 - g1 * (1 - math.exp(-rate1 * t_c))
    return g2 + (start - g2) * math.exp(-rate2 * (t - t_c))


def isolated_transition_12(delta_j, delta_next, beta):
    return math.sinh(beta * (delta_next - delta_j) / 2) / (
        2 * math.cosh(beta * delta_j / 2) * math.cosh(beta * delta_next / 2)
    )
