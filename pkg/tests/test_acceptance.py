"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the lines inline; they
are repeated in the terminal summary either way.
"""
import math
import time

import numpy as np
import pytest

import checks
import oracles
from conftest import BLOWUP_DQ
from quasiground.asymptotics import (ThresholdOptions, classify, concentration_track,
                                     multiplier_track, nonexistence_probe, threshold_bisect,
                                     threshold_geometry)
from quasiground.constants import ProblemParams, critical_exponent, existence_threshold, gn_constants
from quasiground.energy import auxiliary_F
from quasiground.field import Geometry, GridField, integrate, l2_distance
from quasiground.profile import gn_equality_ratio, pohozaev_residuals, solve_profile
from verdicts import verdict


def _decreasing(xs):
    return all(b < a for a, b in zip(xs, xs[1:]))


def _g(xs):
    return "[" + ", ".join(f"{x:.4g}" for x in xs) + "]"


def test_c01_shooting_oracle():
    t0 = time.perf_counter()
    p = solve_profile(ProblemParams(1, 6.0))
    elapsed = time.perf_counter() - t0
    peak_err = abs(p.peak / 4 ** (1 / 3) - 1)
    mass_err = abs(p.mass / oracles.mass_1d(6.0) - 1)
    ok = peak_err <= 1e-8 and mass_err <= 1e-6 and elapsed < 1.0
    verdict(1, "shooting oracle", ok,
            f"peak rel err {peak_err:.2e} (<=1e-8), mass rel err {mass_err:.2e} (<=1e-6), {elapsed:.3f}s (<1s)")


def test_c02_pohozaev_identities():
    worst, min_order, details = 0.0, math.inf, []
    for N in (1, 2):
        qs = critical_exponent(N)
        for q in (qs, qs - 0.5, qs - 1.0):
            p = ProblemParams(N, q)
            res = max(abs(x) for x in pohozaev_residuals(solve_profile(p, nodes=4096)))
            coarse = [max(abs(x) for x in pohozaev_residuals(solve_profile(p, nodes=n)))
                      for n in (1024, 2048)]
            order = math.log2(coarse[0] / coarse[1])
            worst = max(worst, res)
            min_order = min(min_order, order)
            details.append(f"N={N} q={q:g}: {res:.1e}/p={order:.2f}")
    ok = worst <= 1e-5 and min_order >= 1.9
    verdict(2, "Pohozaev identities", ok,
            f"max residual {worst:.2e} (<=1e-5), min order {min_order:.2f} (>=1.9); " + "; ".join(details))


def test_c03_gn_sharpness():
    cases = [(1, 6.0), (1, 5.0), (1, 3.0), (2, 4.0), (2, 3.0)]
    ratios = []
    for N, q in cases:
        prof = solve_profile(ProblemParams(N, q))
        ratios.append(gn_equality_ratio(prof, gn_constants(prof.params, prof.mass)))
    worst_bump = -math.inf
    for (N, q), g in [((1, 6.0), Geometry.interval(-4.0, 4.0, 2001)),
                      ((2, 4.0), Geometry.radial(2, 4.0, 1001))]:
        p = ProblemParams(N, q)
        gn = gn_constants(p, solve_profile(p).mass)
        for rho in checks.bump_corpus(g, 50, 17 + N):
            worst_bump = max(worst_bump, gn_equality_ratio(rho, gn, q))
    ok = all(0.999 <= r <= 1.001 for r in ratios) and worst_bump <= 1 + 1e-10
    verdict(3, "GN sharpness", ok,
            f"optimizer ratios {_g(ratios)} in [0.999,1.001]; max bump ratio {worst_bump:.6f} (<=1+1e-10, 2x50 bumps)")


def test_c04_gradient_correctness(harmonic):
    orders = {}
    for q in (2.0, critical_exponent(1) - 0.25):
        for name, V in (("V=0", None), ("V=|x|^2", harmonic)):
            orders[f"q={q:g},{name}"] = min(checks.fd_orders(ProblemParams(1, q, 3.0), V, n_dirs=20, seed=5))
    worst = min(orders.values())
    verdict(4, "gradient finite differences", worst >= 1.9,
            f"min observed order {worst:.3f} (>=1.9) over 20 directions: "
            + ", ".join(f"{k}: {v:.3f}" for k, v in orders.items()))


def test_c05_trial_family_identities(crit1, crit2):
    worst, parts = 0.0, []
    for prof in (crit1, crit2):
        for tau in (1.0, 2.0, 4.0):
            errs = checks.trial_relative_errors(prof, tau)
            worst = max(worst, max(errs.values()))
        parts.append(f"N={prof.N}")
    # the N=1 closed forms with the oracle's |v|_1 and c0 instead of the solver's
    m, c0m = oracles.mass_1d(6.0), oracles.sqrt_dirichlet_1d(6.0)
    oracle_err = abs(crit1.sqrt_dirichlet / c0m - 1) + abs(crit1.mass / m - 1)
    ok = worst <= 1e-4 and oracle_err <= 1e-4
    verdict(5, "trial-family identities", ok,
            f"max rel err {worst:.2e} (<=1e-4) for tau in {{1,2,4}}, {', '.join(parts)}; "
            f"oracle consistency {oracle_err:.1e}")


def test_c06_energy_asymptote(blowup_records):
    dev = [abs(r.d_numeric / r.d_formula - 1) for r in blowup_records]
    ok = _decreasing(dev) and dev[-1] <= 0.10
    verdict(6, "energy asymptote", ok, f"|d/d_formula-1| = {_g(dev)} at q*-q = {list(BLOWUP_DQ)}, final <= 0.10")


def test_c07_term_ratios(blowup_records):
    r = blowup_records
    ql, nl = abs(r[-1].ratio_quasilinear - 1), abs(r[-1].ratio_nonlinear - 1)
    k = [x.ratio_kinetic for x in r]
    ok = ql <= 0.15 and nl <= 0.15 and _decreasing(k) and k[-1] <= 0.1 * k[0]
    verdict(7, "quasilinear/nonlinear/kinetic ratios", ok,
            f"|ql-1|={ql:.4f}, |nl-1|={nl:.4f} (<=0.15); ratio_kinetic {_g(k)} decreasing, final/first={k[-1] / k[0]:.2e} (<=0.1)")


def test_c08_multiplier_limit(blowup_records):
    tr = multiplier_track(blowup_records)
    N = blowup_records[0].N
    ok = tr["final_deviation"] <= 0.10 / N
    verdict(8, "multiplier limit", ok,
            f"mu_scaled {_g(tr['mu_scaled'])} -> {tr['target']:g}; final deviation {tr['final_deviation']:.4f} (<=0.10/N)")


def test_c09_blowup_profile(blowup_records):
    masses = [r.rescaled_mass for r in blowup_records]
    dist = [r.profile_L2_dist for r in blowup_records]
    rates = [r.tail_rate for r in blowup_records]
    ok = (all(abs(m - 1) <= 1e-4 for m in masses) and _decreasing(dist) and dist[-1] <= 0.10
          and all(x > 0 for x in rates))
    verdict(9, "blow-up profile", ok,
            f"rescaled mass err max {max(abs(m - 1) for m in masses):.1e} (<=1e-4); L2 dist {_g(dist)} "
            f"decreasing, final <= 0.10; tail rates {_g(rates)} > 0")


def test_c10_concentration(trapped_records, gap_records, harmonic):
    tr = concentration_track(trapped_records, harmonic)
    gaps = [g.gap for g in gap_records]
    ok = (tr["distance_nonincreasing"] and tr["potential_decreasing"]
          and all(g >= -1e-6 for g in gaps) and _decreasing(gaps))
    verdict(10, "concentration at the zero of V", ok,
            f"peak distance {_g(tr['peak_distance'])} (nonincreasing within h={_g(tr['resolution'])}); "
            f"int V u^2 {_g(tr['potential_mass'])} decreasing; gap {_g(gaps)} >= -1e-6 and decreasing")


def test_c11_threshold(crit1, a_star1, harmonic):
    trace = []
    found = threshold_bisect(1, harmonic, (0.5 * a_star1, 2.0 * a_star1), critical=crit1, trace=trace)
    opts = ThresholdOptions()
    g = threshold_geometry(1, harmonic, crit1, opts)
    low = classify(0.5 * a_star1, 1, harmonic, crit1, opts, g)
    high = classify(2.0 * a_star1, 1, harmonic, crit1, opts, g)
    err = abs(found / a_star1 - 1)
    ok = err <= 0.05 and low == "converged" and high == "diverged"
    verdict(11, "existence threshold", ok,
            f"bisection {found:.5f} vs a*={a_star1:.5f}: rel err {err:.4f} (<=0.05, {len(trace)} runs); "
            f"a*/2 {low}, 2a* {high}")


def test_c12_nonexistence_slope(crit1, a_star1):
    rep = nonexistence_probe(ProblemParams(1, 6.0, 2 * a_star1), [4, 8, 16, 32, 64, 128], crit1)
    coef_err = abs(rep.coefficient / rep.expected_coefficient - 1)
    ok = abs(rep.slope - 3.0) <= 0.1 and coef_err <= 0.15
    verdict(12, "nonexistence slope", ok,
            f"slope {rep.slope:.4f} (3 +- 0.1), coefficient {rep.coefficient:.6g} vs "
            f"{rep.expected_coefficient:.6g} (rel err {coef_err:.2e} <= 0.15)")


def test_c13_compactness(compact_records):
    grid = compact_records[:-1]
    d = [r.d_numeric for r in grid]
    gaps = [abs(b - a) for a, b in zip(d, d[1:])]
    shrink = [a / b for a, b in zip(gaps, gaps[1:])]
    steps = [l2_distance(a.u, b.u) for a, b in zip(grid, grid[1:])]
    crit = compact_records[-1].d_numeric
    tail = abs(crit - d[-1])
    ok = all(s >= 2.0 for s in shrink) and _decreasing(steps) and tail <= gaps[-1]
    verdict(13, "compactness below a*", ok,
            f"d {_g(d)}; gap shrink factors {_g(shrink)} (>=2); ||du|| {_g(steps)} decreasing; "
            f"|d(q*)-d(q_last)|={tail:.2e} within the geometric tail {gaps[-1]:.2e}")


def test_c14_auxiliary_functional(crit1, a_star1):
    F0, _ = checks.limit_F(crit1, a_star1)
    g = Geometry.interval(-4.0, 4.0, 1601)
    rng = np.random.default_rng(23)
    below = []
    for f in checks.bump_corpus(g, 20, 29):
        c = rng.uniform(0.05, 0.99)
        rho = GridField(g, f.values * c / integrate(f))
        below.append(auxiliary_F(rho, 1, a_star1))
    sweep = [checks.limit_F(crit1, a_star1, scale=1.5, dilation=s)[0] for s in (1, 2, 4, 8, 16, 32)]
    ok = abs(F0) <= 1e-4 and min(below) > 0 and _decreasing(sweep) and sweep[-1] < -1e3
    verdict(14, "auxiliary functional", ok,
            f"|F(w0^2)|={abs(F0):.2e} (<=1e-4); min F over 20 mass<1 densities {min(below):.3e} (>0); "
            f"mass-1.5 dilations F={_g(sweep)} decreasing below -1e3")


@pytest.mark.parametrize("N", [1, 2])
def test_threshold_value_is_profile_mass_power(N, crit1, crit2):
    prof = crit1 if N == 1 else crit2
    assert existence_threshold(N, prof.mass) == pytest.approx(prof.mass ** (2.0 / N))
