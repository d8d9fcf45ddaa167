"""Acceptance criteria, one test per criterion.

Each test prints a single ``criterion N: PASS|FAIL`` line; the lines are
also collected and repeated in the pytest terminal summary.  Run this file
directly (``python3 tests/test_acceptance.py``) for the lines alone.
"""

import itertools
import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

import oracles
from respath.cli import main
from respath.continuum import ContinuumData, GapSchedule, continuum_value, discretize, no_jump_product
from respath.model import PAULI_X, PAULI_Y, PAULI_Z, Protocol, Segment
from respath.pathsum import expectation_full, expectation_truncated
from respath.resonance import (
    level_shift_overlapping,
    numeric_eigendecomposition,
    overlapping_asymptotics,
    resonances_isolated,
    resonances_overlapping,
    separated_asymptotics,
    transition_coefficients_isolated,
    transition_coefficients_overlapping,
    transition_matrix,
)
from respath.scenarios import CrossingSpec, Regime, crossing_jump, crossing_probability, fit_decay_rate
from respath.spectral import SpectralDensity, ThermalTransform, coupling_for_sigma, principal_value

DATA = Path(__file__).parent / "data"
SPECTRAL = SpectralDensity.default()
I2 = np.eye(2)
RHO_X = 0.5 * (I2 + PAULI_X)
A_GEN = 0.7 * PAULI_X - 0.4 * PAULI_Y + 0.2 * PAULI_Z

RESULTS = []


def report(n, checks, elapsed, limit):
    """Print and record the verdict for criterion ``n``; return it."""
    checks = dict(checks)
    checks[f"runtime {elapsed:.2f}s < {limit:g}s"] = elapsed < limit
    ok = all(checks.values())
    failed = [name for name, good in checks.items() if not good]
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}"
    line += "" if ok else " (" + "; ".join(failed) + ")"
    print(line)
    RESULTS.append(line)
    return ok, failed


# -- 1 -----------------------------------------------------------------------


def test_criterion_1_closed_form_resonances():
    t0 = time.perf_counter()
    grid = list(itertools.product((0.1, 1.0, 10.0), (0.0, 0.3, -0.3, 0.9, -0.9, 1.5, -1.5, 5.0, -5.0)))
    eig_err = proj_err = 0.0
    for sigma, tau in grid:
        closed = resonances_overlapping(sigma, tau)
        ev = np.linalg.eigvals(level_shift_overlapping(sigma, sigma * tau).m)
        # match each eigenvalue to its closed form
        ref = np.array(oracles.closed_form_energies(sigma, tau))
        for e in ev:
            eig_err = max(eig_err, float(np.min(np.abs(ref - e))))
        np.testing.assert_allclose(closed.energies, ref, atol=1e-12)
        numeric = numeric_eigendecomposition(level_shift_overlapping(sigma, sigma * tau))
        proj_err = max(proj_err, float(np.max(np.abs(closed.projectors() - numeric.projectors()))))
    ok, failed = report(
        1,
        {f"eigenvalues {eig_err:.1e} <= 1e-12": eig_err <= 1e-12, f"projectors {proj_err:.1e} <= 1e-10": proj_err <= 1e-10},
        time.perf_counter() - t0,
        1.0,
    )
    assert ok, failed


# -- 2 -----------------------------------------------------------------------


def test_criterion_2_transition_coefficients():
    t0 = time.perf_counter()
    taus = (0.0, 0.3, -0.3, 0.9, -0.9, 1.5, -1.5, 5.0, -5.0)
    closed_err = 0.0
    for tj, tn in itertools.product(taus, taus):
        t = transition_matrix(resonances_overlapping(1.0, tj), resonances_overlapping(1.0, tn)).t
        closed_err = max(closed_err, float(np.max(np.abs(t - transition_coefficients_overlapping(tj, tn)))))
    for dj, dn, beta in [(1.0, 2.0, 1.0), (2.0, -1.5, 0.7), (-1.0, 3.0, 3.0)]:
        a = resonances_isolated(Segment(dj, 0.05, 1.0), beta, SPECTRAL)
        b = resonances_isolated(Segment(dn, 0.05, 1.0), beta, SPECTRAL)
        t = transition_matrix(a, b).t
        closed_err = max(closed_err, float(np.max(np.abs(t - transition_coefficients_isolated(dj, dn, beta)))))
        closed_err = max(closed_err, abs(t[0, 1] - oracles.isolated_transition_12(dj, dn, beta)))

    # separated regime, tau_min = 50, formulas exactly as printed
    sep_err = 0.0
    for tj, tn in [(50.0, 60.0), (60.0, 50.0), (-50.0, -60.0), (-60.0, -50.0)]:
        t = transition_matrix(resonances_overlapping(1.0, tj), resonances_overlapping(1.0, tn)).t
        for (r, rp), v in separated_asymptotics(tj, tn).items():
            sep_err = max(sep_err, abs(t[r - 1, rp - 1] - v))
    sep_bound = 3 / 50.0**2

    ovl_err = 0.0
    for tj, tn in [(0.01, 0.02), (0.02, -0.02), (-0.015, 0.005), (0.0, 0.02)]:
        t = transition_matrix(resonances_overlapping(1.0, tj), resonances_overlapping(1.0, tn)).t
        for (r, rp), v in overlapping_asymptotics(tj, tn).items():
            ovl_err = max(ovl_err, abs(t[r - 1, rp - 1] - v))
    ovl_bound = 3 * 0.02**2

    ok, failed = report(
        2,
        {
            f"closed forms {closed_err:.1e} <= 1e-12": closed_err <= 1e-12,
            f"separated asymptotics {sep_err:.2e} <= {sep_bound:.1e}": sep_err <= sep_bound,
            f"overlapping asymptotics {ovl_err:.1e} <= {ovl_bound:.1e}": ovl_err <= ovl_bound,
        },
        time.perf_counter() - t0,
        1.0,
    )
    assert ok, failed


# -- 3 -----------------------------------------------------------------------


def test_criterion_3_worked_crossing():
    t0 = time.perf_counter()
    sigma, t_c = 0.1, 1.0
    coupling = coupling_for_sigma(sigma, SPECTRAL)
    spec = CrossingSpec(0.05, 0.03, t_c, coupling, spectral=SPECTRAL)
    times = np.linspace(0.0, 5.0, 100)
    curve_err = max(abs(crossing_probability(spec, t) - oracles.crossing_overlapping(sigma, t_c, t)) for t in times)
    jump_err = abs(crossing_jump(spec) - math.exp(-2 * sigma * t_c))
    late = np.linspace(15 / (2 * sigma) + 1e-9, 300.0, 50)
    asym = max(abs(crossing_probability(spec, t) - 0.5) for t in late)
    ok, failed = report(
        3,
        {
            f"curve {curve_err:.1e} <= 1e-10": curve_err <= 1e-10,
            f"jump {jump_err:.1e} <= 1e-10": jump_err <= 1e-10,
            f"asymptote {asym:.1e} < 1e-6": asym < 1e-6,
        },
        time.perf_counter() - t0,
        1.0,
    )
    assert ok, failed


# -- 4 -----------------------------------------------------------------------


def test_criterion_4_isolated_relaxation():
    t0 = time.perf_counter()
    lam, d1, d2, beta, t_c = 0.05, 1.0, 1.5, 1.0, 20.0
    spec = CrossingSpec(d1, d2, t_c, lam, beta, Regime.ISOLATED, SPECTRAL)
    gibbs1 = 1 / (math.exp(beta * d1) + 1)
    times = np.linspace(0.5, t_c - 0.5, 40)
    rate = fit_decay_rate(times, [crossing_probability(spec, t) for t in times], gibbs1)
    target_rate = math.pi * lam**2 * SPECTRAL.gamma(d1)
    rel = abs(rate / target_rate - 1)
    rate2 = math.pi * lam**2 * SPECTRAL.gamma(d2)
    p_final = crossing_probability(spec, t_c + 40 / rate2)
    final_err = abs(p_final - 1 / (math.exp(beta * d2) + 1))
    ok, failed = report(
        4,
        {f"rate rel. error {rel:.1e} <= 5%": rel <= 0.05, f"final population {final_err:.1e} <= 1e-8": final_err <= 1e-8},
        time.perf_counter() - t0,
        5.0,
    )
    assert ok, failed


# -- 5 -----------------------------------------------------------------------


def _random_protocol(rng, regime):
    n = int(rng.integers(1, 11))
    lam = coupling_for_sigma(1.0, SPECTRAL)
    segs = []
    for _ in range(n):
        if regime == "overlapping":
            tau = rng.uniform(-3, 3)
            while abs(tau * tau - 1) < 1e-2:
                tau = rng.uniform(-3, 3)
            segs.append(Segment(tau, lam, rng.uniform(0, 1)))
        else:
            segs.append(Segment(rng.choice([-1, 1]) * rng.uniform(0.5, 3), 0.05, rng.uniform(0, 5)))
    return Protocol(segs, rng.uniform(0.3, 3), SPECTRAL, regime)


def _random_pair(rng):
    v = rng.normal(size=3)
    v *= rng.uniform(0, 1) / np.linalg.norm(v)
    rho = 0.5 * (I2 + v[0] * PAULI_X + v[1] * PAULI_Y + v[2] * PAULI_Z)
    c = rng.normal(size=4)
    return rho, c[0] * I2 + c[1] * PAULI_X + c[2] * PAULI_Y + c[3] * PAULI_Z


def test_criterion_5_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20240605)
    trunc_err = trace_err = split_err = 0.0
    for i in range(20):
        p = _random_protocol(rng, "overlapping" if i % 2 == 0 else "isolated")
        rho, a = _random_pair(rng)
        full = expectation_full(p, rho, a)
        trunc_err = max(trunc_err, abs(expectation_truncated(p, rho, a, p.n_segments - 1) - full))
        trace_err = max(trace_err, abs(expectation_full(p, rho, I2) - 1))
        for k in range(3):
            trace_err = max(trace_err, abs(expectation_truncated(p, rho, I2, k) - 1))
        j = int(rng.integers(0, p.n_segments))
        split_err = max(split_err, abs(expectation_full(p.split_segment(j, rng.uniform(0.1, 0.9)), rho, a) - full))
    ok, failed = report(
        5,
        {
            f"K=N-1 vs full {trunc_err:.1e} <= 1e-12": trunc_err <= 1e-12,
            f"trace {trace_err:.1e} <= 1e-10": trace_err <= 1e-10,
            f"splitting {split_err:.1e} <= 1e-12": split_err <= 1e-12,
        },
        time.perf_counter() - t0,
        30.0,
    )
    assert ok, failed


# -- 6 -----------------------------------------------------------------------


def test_criterion_6_truncation_scaling():
    t0 = time.perf_counter()
    total, n, tau0 = 4.0, 12, 0.2
    lam = coupling_for_sigma(1.0, SPECTRAL)
    scales = np.array([0.05, 0.1, 0.2])  # tau'_max * t
    errors = {k: [] for k in range(3)}
    for s in scales:
        rate, dt = s / total, total / n
        p = Protocol([Segment(tau0 + rate * (j + 1) * dt, lam, dt) for j in range(n)], 1.0, SPECTRAL)
        full = expectation_full(p, RHO_X, A_GEN)
        for k in errors:
            errors[k].append(abs(expectation_truncated(p, RHO_X, A_GEN, k) - full))
    checks = {}
    for k, errs in errors.items():
        slope = np.polyfit(np.log(scales), np.log(errs), 1)[0]
        checks[f"K={k} exponent {slope:.2f} in {k + 1}+-0.4"] = abs(slope - (k + 1)) <= 0.4
    ok, failed = report(6, checks, time.perf_counter() - t0, 60.0)
    assert ok, failed


# -- 7 -----------------------------------------------------------------------


def test_criterion_7_continuum_limit():
    t0 = time.perf_counter()
    ramp = GapSchedule.from_tau(lambda t: 0.1 + 0.05 * t, 1.0, tau_prime=lambda t: 0.05)
    target = continuum_value(ramp, 4.0, RHO_X, A_GEN)
    errs = [abs(expectation_truncated(discretize(ramp, 4.0, n), RHO_X, A_GEN, 1) - target) for n in (25, 50, 100, 200)]
    monotone = all(b <= a for a, b in zip(errs, errs[1:]))

    gentle = GapSchedule.from_tau(lambda t: 0.1 + 0.005 * t, 1.0, tau_prime=lambda t: 0.005)
    w = ContinuumData(gentle, 4.0).w(0.0, 4.0, 3)
    nojump = abs(no_jump_product(gentle, 4.0, 200) - w)

    const_err = 0.0
    for tau in (0.0, 0.4, -0.7):
        sched = GapSchedule.from_tau(lambda t, tau=tau: tau, 1.0, tau_prime=lambda t: 0.0)
        single = Protocol([Segment(sched.delta(0), sched.coupling, 2.5)], 1.0, SPECTRAL)
        const_err = max(const_err, abs(continuum_value(sched, 2.5, RHO_X, A_GEN) - expectation_full(single, RHO_X, A_GEN)))
    ok, failed = report(
        7,
        {
            "errors nonincreasing " + ",".join(f"{e:.1e}" for e in errs): monotone,
            f"no-jump product {nojump:.1e} <= 1e-6": nojump <= 1e-6,
            f"constant schedule {const_err:.1e} <= 1e-10": const_err <= 1e-10,
        },
        time.perf_counter() - t0,
        60.0,
    )
    assert ok, failed


# -- 8 -----------------------------------------------------------------------


def test_criterion_8_quadrature_oracles():
    t0 = time.perf_counter()
    pv_err = abs(principal_value(lambda r: 1 / (r * r + 1)) + math.pi / 2)
    const = abs(principal_value(lambda r: 1.0))
    tt = ThermalTransform(1.0, SPECTRAL)
    db = max(abs(math.exp(-u) * abs(tt(u)) ** 2 - abs(tt(-u)) ** 2) for u in np.linspace(-3, 3, 100))
    gam = max(abs(SPECTRAL.gamma(r) - 2 * math.pi * math.exp(-2 * r)) for r in (0.1, 0.5, 1.0, 5.0))
    ok, failed = report(
        8,
        {
            f"PV 1/(r^2+1) {pv_err:.1e} <= 1e-8": pv_err <= 1e-8,
            f"constant PV {const:.1e} <= 1e-10": const <= 1e-10,
            f"detailed balance {db:.1e} <= 1e-12": db <= 1e-12,
            f"gamma {gam:.1e} <= 1e-10": gam <= 1e-10,
        },
        time.perf_counter() - t0,
        5.0,
    )
    assert ok, failed


# -- 9 -----------------------------------------------------------------------


def test_criterion_9_cli(tmp_path):
    t0 = time.perf_counter()
    cmd = [sys.executable, "-m", "respath", "crossing", "-i", str(DATA / "crossing.proto"), "--grid", "0:5:51"]
    first = subprocess.run(cmd, capture_output=True, check=True).stdout
    second = subprocess.run(cmd, capture_output=True, check=True).stdout
    golden = (DATA / "crossing_golden.csv").read_bytes()

    bad_parse = tmp_path / "parse.proto"
    bad_parse.write_text("lambda = 0.1\nsegment 0.1 one\n")
    bad_valid = tmp_path / "valid.proto"
    bad_valid.write_text("lambda = 0.1\n")
    k = np.linspace(0.01, 30, 6000)
    np.savetxt(tmp_path / "rough.txt", np.c_[k, k**-0.5 * (1 + 0.9 * np.sign(np.sin(300 * k)))])
    bad_numeric = tmp_path / "numeric.proto"
    bad_numeric.write_text("lambda = 0.01\nregime = isolated\nform_factor = file:rough.txt\nsegment 1.0 1\n")
    codes = [main(["resonances", "-i", str(p)]) for p in (bad_parse, bad_valid, bad_numeric)]
    ok, failed = report(
        9,
        {
            "two runs byte-identical": first == second,
            "matches golden file": first == golden,
            f"exit codes {codes} == [2, 3, 4]": codes == [2, 3, 4],
        },
        time.perf_counter() - t0,
        5.0,
    )
    assert ok, failed


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
