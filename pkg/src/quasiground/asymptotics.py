"""Sweeps ``q -> q*`` and regime probes built on the minimizer.

Blow-up mode (``a > a*``) follows minimizers that concentrate on the scale
``eps_q``: each member lives on a window of ``L eps_q`` with a fixed number of
nodes per ``eps_q`` and is warm-started from its predecessor dilated by
``eps_prev/eps_q``. Compactness mode (``a < a*``) keeps one mesh throughout.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from .constants import (ProblemParams, blowup_level, blowup_scale, energy_asymptote,
                        existence_threshold, gn_constants, limit_profile_scale,
                        multiplier_limit, optimal_trial_tau)
from .energy import evaluate, limit_density, trial_energy, trial_family
from .errors import BadBracket, InvalidRegime, NoConvergence, PartialSweep, Stall
from .field import Geometry, GridField, integrate, rescale
from .minimizer import CRITICAL_FLOOR, MinimizerOptions, minimize
from .potentials import Potential
from .profile import RadialProfile, solve_profile

DEFAULT_DQ = (0.5, 0.25, 0.125, 0.0625)
STALL_SLACK = 100.0


@dataclass
class SweepRecord:
    """Diagnostics of one sweep member.

    The first twelve fields are the CSV columns, in order. ``eps_q``, ``t_q``,
    ``d_formula`` and the rescaled quantities are NaN in compactness mode.
    """

    q: float
    eps_q: float
    t_q: float
    d_numeric: float
    d_formula: float
    ratio_quasilinear: float
    ratio_nonlinear: float
    ratio_kinetic: float
    mu_scaled: float
    profile_L2_dist: float
    peak_location: float
    potential_mass: float
    rescaled_mass: float = math.nan
    tail_rate: float = math.nan
    mu: float = math.nan
    iterations: int = 0
    nodes: int = 0
    R_max: float = math.nan
    h: float = math.nan
    N: int = 0
    u: GridField | None = field(default=None, repr=False, compare=False)

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls) if f.name != "u"]

    def row(self) -> list:
        d = asdict(self)
        return [d[c] for c in self.columns()]


@dataclass(frozen=True)
class SweepOptions:
    """Mesh and solver settings for :func:`sweep`.

    ``nodes_per_eps`` fixes the blow-up resolution; ``window`` (in units of
    ``eps_q``) defaults to the rescaled limit support plus a tail margin.
    ``geometry`` is the fixed mesh of compactness mode (default: symmetric
    interval where ``V >= 1e3``, 2048 nodes). ``center`` is ``"peak"`` to
    follow the previous maximum or ``"argmin"`` to stay on the zero of ``V``.
    """

    nodes_per_eps: int = 64
    window: float | None = None
    geometry: Geometry | None = None
    compact_nodes: int = 2048
    center: str = "peak"
    minimizer: MinimizerOptions = MinimizerOptions()
    profile_nodes: int = 4096


def _critical(N, profile_nodes=4096):
    return solve_profile(ProblemParams(N, 2.0 + 4.0 / N), nodes=profile_nodes)


def _window(opts, ps: RadialProfile, eps):
    if opts.window is not None:
        return opts.window
    lam = limit_profile_scale(ps.N, ps.mass)
    return 1.5 * ps.R / lam + 10.0 * math.sqrt(ps.N) * eps ** (ps.N / 2.0)


def _blowup_geometry(N, V, eps, L, center, npe):
    half = math.ceil(L * npe)
    if V is None or N > 1:
        return Geometry.radial(N, half * eps / npe, half + 1)
    return Geometry.interval(center - half * eps / npe, center + half * eps / npe, 2 * half + 1)


def default_geometry(N, V, nodes=2048, level=1e3) -> Geometry:
    """Mesh reaching the radius where ``V >= level`` (radius 10 when ``V`` is absent)."""
    ext = V.default_extent(level) if V is not None else None
    ext = ext or 10.0
    if N == 1 and V is not None:
        c = V.argmin_point()
        return Geometry.interval(c - ext, c + ext, nodes)
    return Geometry.radial(N, ext, nodes)


def tail_rate(w: GridField, start: float) -> float:
    """Exponential decay rate of ``w`` beyond radius ``start`` (least-squares on log w)."""
    x = w.geometry.distance_from(0.0) if w.geometry.kind == "radial" else np.abs(w.x)
    v = w.values
    sel = (x > start) & (v > 1e-300)
    sel[-1] = False
    if sel.sum() < 3:
        return math.nan
    slope = np.polyfit(x[sel], np.log(v[sel]), 1)[0]
    return float(-slope)


def _rescaled_diagnostics(u: GridField, eps, center, L, ps):
    g = u.geometry
    if g.kind == "radial":
        target = Geometry.radial(g.N, L, g.nodes)
        w = rescale(u, eps, 0.0, target, check=False)
    else:
        target = Geometry.interval(-L, L, g.nodes)
        w = rescale(u, eps, center, target, check=False)
    rho = w.values ** 2
    w0 = limit_density(ps, target).values
    dist = math.sqrt(integrate(w, (rho - w0) ** 2) / integrate(w, w0 ** 2))
    lam = limit_profile_scale(ps.N, ps.mass)
    return integrate(w, rho), dist, tail_rate(w, ps.R / lam)


def _warm_start(prev: GridField, eps_prev, c_prev, eps, c, g: Geometry) -> GridField:
    k = eps_prev / eps
    src = prev.geometry
    if src.kind == "radial":
        return rescale(prev, k, 0.0, g, check=False)
    return rescale(prev, k, c_prev - k * c, g, check=False)


def sweep(q_list, params: ProblemParams, V: Potential | None = None,
          opts: SweepOptions | None = None, mode: str = "blowup",
          critical: RadialProfile | None = None) -> list[SweepRecord]:
    """Minimize along increasing ``q`` and record the asymptotic diagnostics.

    Parameters
    ----------
    q_list : sequence of float
        Strictly increasing, all below ``q*`` (compactness mode also accepts ``q*``).
    params : ProblemParams
        Supplies ``N`` and ``a``; its ``q`` is ignored.
    V : Potential or None
    mode : {"blowup", "compactness"}
        Blow-up needs ``a > a*``, compactness ``a < a*``.
    critical : RadialProfile, optional
        Profile at ``q*`` (solved if omitted).

    Raises
    ------
    PartialSweep
        A member failed; ``.records`` holds the completed ones.
    """
    opts = opts or SweepOptions()
    if V is not None and V.is_zero:
        V = None
    N, a = params.N, params.a
    qs = [float(q) for q in q_list]
    q_star = params.q_star
    if len(qs) == 0 or any(b <= x for x, b in zip(qs, qs[1:])):
        raise InvalidRegime("q_list must be strictly increasing")
    ps = critical or _critical(N, opts.profile_nodes)
    a_star = existence_threshold(N, ps.mass)
    if mode == "blowup":
        if not a > a_star:
            raise InvalidRegime(f"blow-up mode needs a > a* = {a_star}")
        if qs[-1] >= q_star:
            raise InvalidRegime("blow-up sweeps need q < q*")
    elif mode == "compactness":
        if not a < a_star:
            raise InvalidRegime(f"compactness mode needs a < a* = {a_star}")
        if qs[-1] > q_star * (1 + 1e-13):
            raise InvalidRegime("compactness sweeps need q <= q*")
    else:
        raise ValueError(f"unknown sweep mode {mode!r}")

    records: list[SweepRecord] = []
    prev = None
    eps_prev = c_prev = None
    fixed = opts.geometry or default_geometry(N, V, opts.compact_nodes)
    for q in qs:
        p = params.with_q(q)
        try:
            if mode == "blowup":
                rec, prev, eps_prev, c_prev = _blowup_member(p, V, opts, ps, prev, eps_prev, c_prev)
            else:
                rec = _compact_member(p, V, opts, ps, prev, fixed)
                prev = rec.u
        except (NoConvergence, Stall) as exc:
            raise PartialSweep(f"member q={q} failed: {exc}", q=q, records=records) from exc
        records.append(rec)
    return records


def _blowup_member(p, V, opts, ps, prev, eps_prev, c_prev):
    N, q, a = p.N, p.q, p.a
    pq = solve_profile(p.with_a(1.0), nodes=opts.profile_nodes)
    gn = gn_constants(p, pq.mass)
    eps = blowup_scale(p, gn)
    t = blowup_level(p, gn)
    d_formula = energy_asymptote(p, gn)
    L = _window(opts, ps, eps)
    if V is None or N > 1:
        c = 0.0
    elif prev is None or opts.center == "argmin":
        c = V.argmin_point()
    else:
        c = prev.peak_location()
    g = _blowup_geometry(N, V, eps, L, c, opts.nodes_per_eps)
    if prev is None:
        init = trial_family(optimal_trial_tau(p, gn, pq.mass), pq, g, center=c)
    else:
        init = _warm_start(prev, eps_prev, c_prev, eps, c, g)
    res = minimize(p, V, init=init, opts=opts.minimizer, gn=gn)
    if not res.converged:
        raise NoConvergence(f"minimizer ended with status {res.status}", res)
    e = res.energy
    peak = res.u.peak_location()
    center = peak if g.kind == "interval" else 0.0
    rmass, dist, rate = _rescaled_diagnostics(res.u, eps, center, L, ps)
    rec = SweepRecord(
        q=q, eps_q=eps, t_q=t, d_numeric=e.total, d_formula=d_formula,
        ratio_quasilinear=e.grad_rho_sq / t,
        ratio_nonlinear=4.0 * a / (q + 2.0) * e.power_integral / t,
        ratio_kinetic=e.grad_sq / e.grad_rho_sq,
        mu_scaled=res.mu * eps ** (N + 2),
        profile_L2_dist=dist, peak_location=peak, potential_mass=2.0 * e.potential,
        rescaled_mass=rmass, tail_rate=rate, mu=res.mu, iterations=res.iterations,
        nodes=g.nodes, R_max=g.hi, h=g.h, N=N, u=res.u)
    return rec, res.u, eps, c


def _compact_member(p, V, opts, ps, prev, g):
    # no blow-up scale below a*: the scaled columns stay NaN
    res = minimize(p, V, init=prev, geometry=g, opts=opts.minimizer)
    if not res.converged:
        raise NoConvergence(f"minimizer ended with status {res.status}", res)
    e = res.energy
    nan = math.nan
    return SweepRecord(
        q=p.q, eps_q=nan, t_q=nan, d_numeric=e.total, d_formula=nan,
        ratio_quasilinear=nan, ratio_nonlinear=nan,
        ratio_kinetic=e.grad_sq / e.grad_rho_sq, mu_scaled=nan,
        profile_L2_dist=nan, peak_location=res.u.peak_location(),
        potential_mass=2.0 * e.potential, mu=res.mu, iterations=res.iterations,
        nodes=g.nodes, R_max=g.hi, h=g.h, N=p.N, u=res.u)


def default_q_list(N, dq=DEFAULT_DQ):
    qs = 2.0 + 4.0 / N
    return [qs - d for d in dq]


def multiplier_track(records) -> dict:
    """``mu_q eps_q^(N+2)`` along the sweep against its limit ``-1/N``."""
    if len(records) < 3:
        raise ValueError("need at least three records")
    target = multiplier_limit(records[0].N)
    mu = [r.mu_scaled for r in records]
    dev = [abs(m - target) for m in mu]
    return {"mu_scaled": mu, "target": target, "deviation": dev,
            "final_deviation": dev[-1],
            "monotone": all(b <= x for x, b in zip(dev, dev[1:]))}


def concentration_track(records, V: Potential) -> dict:
    """Distance of the peaks to ``{V = 0}`` and ``int V u^2`` along the sweep.

    ``resolution`` holds the mesh spacing of each member, the scale below
    which peak distances are not meaningful.
    """
    dist = [float(V.argmin_distance(r.peak_location)) for r in records]
    pot = [r.potential_mass for r in records]
    res = [r.h for r in records]
    return {
        "peak_distance": dist,
        "potential_mass": pot,
        "resolution": res,
        "distance_nonincreasing": all(b <= x + h for x, b, h in zip(dist, dist[1:], res[:-1])),
        "potential_decreasing": all(b < x for x, b in zip(pot, pot[1:])),
    }


@dataclass
class GapRecord:
    """``d_a(q) - d~_a(q)`` with its rigorous discrete bracket.

    ``lower = 1/2 int V u^2`` at the minimizer with ``V``; ``upper = 1/2 int V u~^2``
    at the potential-free minimizer centered on the zero of ``V``. ``raw`` is the
    direct difference, which loses all digits once the energies reach
    ``t_q >> 1``; ``gap`` is ``raw`` clipped into ``[lower, upper]``.
    """

    q: float
    gap: float
    raw: float
    lower: float
    upper: float
    d_with_V: float
    d_without_V: float


def energy_gap(q_list, params: ProblemParams, V: Potential, opts: SweepOptions | None = None,
               critical: RadialProfile | None = None) -> list[GapRecord]:
    """Minimize with and without ``V`` on identical meshes and compare the minima."""
    opts = opts or SweepOptions()
    ps = critical or _critical(params.N, opts.profile_nodes)
    if V is None or V.is_zero:
        base = sweep(q_list, params, None, opts, "blowup", ps)
        return [GapRecord(r.q, 0.0, 0.0, 0.0, 0.0, r.d_numeric, r.d_numeric) for r in base]
    fixed = SweepOptions(**{**opts.__dict__, "center": "argmin"})
    with_v = sweep(q_list, params, V, fixed, "blowup", ps)
    free = _free_on_same_meshes(with_v, params, fixed)
    out = []
    for rv, (d0, u0) in zip(with_v, free):
        lower = 0.5 * rv.potential_mass
        upper = 0.5 * integrate(u0, V(u0.x) * u0.values ** 2)
        raw = rv.d_numeric - d0
        out.append(GapRecord(rv.q, min(max(raw, lower), upper), raw, lower, upper, rv.d_numeric, d0))
    return out


def _free_on_same_meshes(records, params, opts):
    """Potential-free minima on the meshes of ``records`` (interval geometry, centered on V's zero)."""
    out = []
    tol = opts.minimizer.tol
    for r in records:
        try:
            res = minimize(params.with_q(r.q), None, init=r.u, opts=opts.minimizer)
        except Stall as exc:
            # without V the translation mode is only pinned by the lattice, and the
            # residual can stall just above tol; the bracket needs no more than that
            res = exc.result
            if res is None or res.grad_norm / (1.0 + abs(res.mu)) > STALL_SLACK * tol:
                raise PartialSweep(f"potential-free member q={r.q} failed: {exc}", q=r.q) from exc
        else:
            if not res.converged:
                raise PartialSweep(f"potential-free member q={r.q} failed", q=r.q)
        out.append((res.energy.total, res.u))
    return out


@dataclass
class ProbeReport:
    """Trial-family energies and log-log fits of the dominant term."""

    mode: str
    taus: list
    energies: list
    dominant: list
    slope: float
    coefficient: float
    expected_slope: float
    expected_coefficient: float
    energy_slope: float


def _fit(x, y):
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    return float(np.polyfit(lx, ly, 1)[0])


def nonexistence_probe(params: ProblemParams, tau_list, critical: RadialProfile | None = None,
                       V: Potential | None = None, nodes: int = 4097) -> ProbeReport:
    """Evaluate the discrete energy on the trial family over ``tau_list``.

    At ``q = q*`` the dominant term is ``quasilinear - nonlinear``, which
    scales as ``tau^(N+2)`` with coefficient ``N (1 - a/a*)/(4 |v*|_{L1})``; for
    ``a = a*`` it vanishes and the energy grows like ``tau^2``. For ``q > q*``
    the dominant term is the nonlinear one, ``~ tau^(Nq/2)``, which outgrows
    every positive term.
    """
    N, q, a = params.N, params.q, params.a
    ps = critical or _critical(N)
    m = ps.mass
    a_star = existence_threshold(N, m)
    taus = [float(t) for t in tau_list]
    if len(taus) < 2:
        raise ValueError("need at least two dilations")
    energies, dominant = [], []
    supercritical = q > params.q_star * (1 + 1e-13)
    for tau in taus:
        g = Geometry.radial(N, ps.R / tau, nodes)
        u = trial_family(tau, ps, g)
        e = evaluate(u, params, V)
        energies.append(e.total)
        dominant.append(-e.nonlinear if supercritical else e.quasilinear - e.nonlinear)
    dom = np.asarray(dominant)
    E = np.asarray(energies)
    if supercritical:
        mode = "dilation"
        expected_slope = N * q / 2.0
        expected_coef = math.nan
    else:
        mode = "critical"
        expected_slope = N + 2.0
        expected_coef = N * (1.0 - a / a_star) / (4.0 * m)
    y = np.abs(dom)
    slope = _fit(taus, y) if np.all(y > 0) else math.nan
    coef = float(np.mean(dom / np.asarray(taus) ** expected_slope))
    e_slope = _fit(taus, np.abs(E)) if np.all(E != 0) else math.nan
    return ProbeReport(mode, taus, energies, dominant, slope, coef, expected_slope,
                       expected_coef, e_slope)


@dataclass(frozen=True)
class ThresholdOptions:
    """Settings for :func:`threshold_bisect`.

    Each classification starts from the trial state at dilation ``seed_tau``:
    below ``a*`` it relaxes to a spread-out minimizer, above it the collapse
    continues to the mesh scale. The mesh must resolve the seed
    (``nodes_across_seed`` nodes across its support radius).
    """

    rel_tol: float = 0.01
    seed_tau: float = 100.0
    nodes_across_seed: int = 24
    R_max: float | None = None
    minimizer: MinimizerOptions = MinimizerOptions(max_iter=20000)
    max_nodes: int = 200001


def classify(a: float, N: int, V, ps: RadialProfile, opts: ThresholdOptions,
             geometry: Geometry) -> str:
    """``"converged"`` or ``"diverged"`` for the run at ``q = q*`` and coupling ``a``."""
    p = ProblemParams(N, 2.0 + 4.0 / N, a)
    init = trial_family(opts.seed_tau, ps, geometry)
    try:
        res = minimize(p, V, init=init, opts=opts.minimizer)
    except (Stall, NoConvergence) as exc:
        # a stuck run is judged by where it got stuck
        res = exc.result
        if res is None:
            raise
        floor = opts.minimizer.divergence_floor
        floor = CRITICAL_FLOOR if floor is None else floor
        return "diverged" if res.energy.total < floor else "converged"
    return res.status


def threshold_geometry(N, V, ps, opts: ThresholdOptions) -> Geometry:
    R = opts.R_max
    if R is None:
        R = (V.default_extent() if V is not None else None) or 10.0
    h = ps.R / opts.seed_tau / opts.nodes_across_seed
    nodes = min(int(math.ceil(R / h)) + 1, opts.max_nodes)
    return Geometry.radial(N, R, nodes)


def threshold_bisect(N: int, V, a_bracket, opts: ThresholdOptions | None = None,
                     critical: RadialProfile | None = None, trace: list | None = None) -> float:
    """Bisect on ``a`` at ``q = q*`` between convergent and divergent runs.

    Returns the bracket midpoint once its width drops below ``rel_tol * a*``.
    Every classification is appended to ``trace`` as ``(a, status)`` when given.

    Raises
    ------
    BadBracket
        Both ends classify identically.
    """
    opts = opts or ThresholdOptions()
    ps = critical or _critical(N)
    a_ref = existence_threshold(N, ps.mass)
    lo, hi = sorted(float(x) for x in a_bracket)
    g = threshold_geometry(N, V, ps, opts)

    def run(a):
        s = classify(a, N, V, ps, opts, g)
        if trace is not None:
            trace.append((a, s))
        return s

    s_lo, s_hi = run(lo), run(hi)
    if s_lo == s_hi:
        raise BadBracket(f"both bracket ends classify as {s_lo}")
    if s_lo == "diverged":
        raise BadBracket("divergence below convergence: bracket reversed")
    while hi - lo >= opts.rel_tol * a_ref:
        mid = 0.5 * (lo + hi)
        if run(mid) == "diverged":
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def trial_comparison(params: ProblemParams, profile: RadialProfile) -> float:
    """Closed-form potential-free energy of the trial state at ``tau_opt``."""
    gn = gn_constants(params, profile.mass)
    tau = optimal_trial_tau(params, gn, profile.mass)
    return trial_energy(tau, profile, params).total


__all__ = [
    "SweepRecord", "SweepOptions", "sweep", "multiplier_track", "concentration_track",
    "GapRecord", "energy_gap", "ProbeReport", "nonexistence_probe", "ThresholdOptions",
    "threshold_bisect", "classify", "default_q_list", "default_geometry", "tail_rate",
    "trial_comparison",
]
