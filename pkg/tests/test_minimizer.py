import math
import os

import numpy as np
import pytest

from quasiground.constants import ProblemParams, gn_constants
from quasiground.energy import evaluate, gaussian, stationarity_residual, trial_energy, trial_family
from quasiground.errors import NoConvergence
from quasiground.field import Geometry, GridField, mass
from quasiground.minimizer import (CRITICAL_FLOOR, MinimizerOptions, default_divergence_floor,
                                   descend_step, detect_divergence, minimize)
from quasiground.potentials import Potential
from quasiground.profile import solve_profile

G1 = Geometry.interval(-8.0, 8.0, 801)
V2 = Potential.power(2)


@pytest.fixture(scope="module")
def compact_run(a_star1):
    p = ProblemParams(1, 5.0, 0.5 * a_star1)
    return p, minimize(p, V2, geometry=G1)


def test_converges_with_unit_mass(compact_run):
    p, res = compact_run
    assert res.converged and res.status == "converged"
    assert abs(mass(res.u) - 1.0) < 1e-10
    assert res.grad_norm / (1 + abs(res.mu)) <= 1e-8
    assert stationarity_residual(res.u, p, V2) <= 1e-7 * (1 + abs(res.mu))
    assert np.all(res.u.values >= 0)


def test_energy_history_monotone_within_roundoff(compact_run):
    _, res = compact_run
    e = [h[1] for h in res.history]
    band = 16 * np.finfo(float).eps * 10 * max(abs(x) for x in e)
    assert all(b <= a + band for a, b in zip(e, e[1:]))


def test_minimum_below_gaussian_trial(compact_run):
    p, res = compact_run
    for w in (0.3, 0.7, 1.5):
        assert res.energy.total <= evaluate(gaussian(G1, w), p, V2).total


def test_mirror_symmetry(compact_run):
    _, res = compact_run
    u = res.u.values
    assert np.max(np.abs(u - u[::-1])) < 1e-6 * u.max()


def test_steepest_descent_and_unpreconditioned_agree(a_star1):
    p = ProblemParams(1, 4.0, 0.5 * a_star1)
    g = Geometry.interval(-6.0, 6.0, 241)
    base = minimize(p, V2, geometry=g)
    sd = minimize(p, V2, geometry=g, opts=MinimizerOptions(method="sd", max_iter=20000))
    assert sd.energy.total == pytest.approx(base.energy.total, rel=1e-9)


def test_critical_lower_bound(a_star1):
    # at q = q* and a < a*: E >= 1/2 int(|u'|^2 + V u^2) + 1/4 (1 - a/a*) int |(u^2)'|^2
    a = 0.5 * a_star1
    res = minimize(ProblemParams(1, 6.0, a), V2, geometry=G1)
    e = res.energy
    bound = e.kinetic + e.potential + (1 - a / a_star1) * e.quasilinear
    assert res.converged and e.total >= bound - 1e-9


def test_supercritical_coupling_diverges(crit1, a_star1):
    p = ProblemParams(1, 6.0, 2 * a_star1)
    g = Geometry.radial(1, 1.0, 4001)
    init = trial_family(20.0, crit1, g)
    res = minimize(p, None, init=init)
    assert res.diverged and res.status == "diverged"
    assert res.energy.total < CRITICAL_FLOOR


def test_detect_divergence_on_trial_history(crit1, a_star1):
    hist_div, hist_ok = [], []
    for k in range(10):
        tau = 2.0 ** k
        e_div = trial_energy(tau, crit1, ProblemParams(1, 6.0, 2 * a_star1))
        e_ok = trial_energy(tau, crit1, ProblemParams(1, 6.0, 0.5 * a_star1))
        hist_div.append((e_div.total, e_div.grad_rho_sq))
        hist_ok.append((e_ok.total, e_ok.grad_rho_sq))
    assert detect_divergence(hist_div, CRITICAL_FLOOR)
    assert not detect_divergence(hist_ok, CRITICAL_FLOOR)
    assert not detect_divergence(hist_div[:5], CRITICAL_FLOOR)
    # energy low but Q not growing
    flat = [(-1e7, 1.0)] * 10
    assert not detect_divergence(flat, CRITICAL_FLOOR)


def test_default_divergence_floor(crit1):
    p = ProblemParams(1, 5.5, 2 * crit1.mass ** 2)
    gn = gn_constants(p, solve_profile(p).mass)
    assert default_divergence_floor(p.with_q(6.0)) == CRITICAL_FLOOR
    assert default_divergence_floor(p, gn) < 0
    assert default_divergence_floor(p.with_a(1.0), gn, crit1.mass ** 2) == CRITICAL_FLOOR


def test_iteration_cap(a_star1):
    p = ProblemParams(1, 5.0, 0.5 * a_star1)
    with pytest.raises(NoConvergence) as err:
        minimize(p, V2, geometry=G1, opts=MinimizerOptions(max_iter=2))
    assert err.value.result.iterations == 2
    res = minimize(p, V2, geometry=G1, opts=MinimizerOptions(max_iter=2, raise_on_cap=False))
    assert res.status == "iteration-cap"


def test_checkpoints(tmp_path, a_star1):
    p = ProblemParams(1, 5.0, 0.5 * a_star1)
    minimize(p, V2, geometry=G1, opts=MinimizerOptions(max_iter=6, raise_on_cap=False,
                                                       checkpoint_every=3, checkpoint_dir=str(tmp_path)))
    assert sorted(os.listdir(tmp_path)) == ["checkpoint_0000003.csv", "checkpoint_0000006.csv"]


def test_descend_step_never_increases_energy(a_star1):
    p = ProblemParams(1, 5.0, 0.5 * a_star1)
    u = gaussian(G1, 2.0)
    e0 = evaluate(u, p, V2).total
    for step in (1e-4, 1e-2, 1.0):
        v, ok = descend_step(u, p, V2, step)
        e1 = evaluate(v, p, V2).total
        assert e1 <= e0
        assert ok or v is u
        assert math.isclose(mass(v), 1.0, rel_tol=1e-12)


def test_option_validation():
    with pytest.raises(ValueError):
        MinimizerOptions(tol=0.0)
    with pytest.raises(ValueError):
        MinimizerOptions(method="newton")
    with pytest.raises(ValueError):
        minimize(ProblemParams(1, 4.0), None)


def test_zero_initial_state_rejected():
    with pytest.raises(ValueError):
        minimize(ProblemParams(1, 4.0), None, init=GridField(G1, np.zeros(G1.nodes)))

