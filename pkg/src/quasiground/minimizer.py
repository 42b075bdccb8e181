"""Projected descent on the unit-mass sphere.

Each step moves against a tangent direction, clips at zero and renormalizes.
A step is kept only if the energy does not increase; otherwise it is halved.
The default direction is a Sobolev gradient whose metric contains the
quasilinear stiffness ``1 + 2u^2``, which keeps steps of order one even when
the state concentrates on a tiny length scale.
"""
from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .constants import ProblemParams, energy_asymptote
from .energy import EnergyBreakdown, evaluate_with_gradient, gaussian, potential_values
from .errors import InvalidRegime, NoConvergence, NumericalBlowup, Stall
from .field import Geometry, GridField

log = logging.getLogger(__name__)

CRITICAL_FLOOR = -1e6


@dataclass(frozen=True)
class MinimizerOptions:
    """Solver knobs.

    ``tol`` bounds the relative stationarity residual
    ``||G - mu u|| / (1 + |mu|)``. The divergence test fires when the energy
    is below ``divergence_floor`` and ``int |grad u^2|^2`` rose monotonically
    over the last ``divergence_window`` history samples by a factor of at
    least ``divergence_growth``.
    """

    tol: float = 1e-8
    max_iter: int = 50000
    precondition: bool = True
    step0: float = 1.0
    step_growth: float = 1.5
    stall_rel: float = 1e-14
    divergence_floor: float | None = None
    divergence_window: int = 8
    divergence_growth: float = 10.0
    history_every: int = 1
    checkpoint_every: int = 0
    checkpoint_dir: str | None = None
    raise_on_cap: bool = True
    method: str = "cg"
    restart_every: int = 50

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.method not in ("cg", "sd"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.max_iter < 1 or self.history_every < 1 or self.divergence_window < 2:
            raise ValueError("iteration counts must be positive")


@dataclass
class MinimizationResult:
    u: GridField
    energy: EnergyBreakdown
    mu: float
    iterations: int
    grad_norm: float
    converged: bool
    diverged: bool
    history: list = field(default_factory=list, repr=False)

    @property
    def status(self) -> str:
        if self.converged:
            return "converged"
        if self.diverged:
            return "diverged"
        return "iteration-cap"


def default_divergence_floor(params: ProblemParams, gn=None, a_star=None) -> float:
    """``10 x`` the energy asymptote below ``q*`` when it applies, else ``-1e6``."""
    if params.is_critical or gn is None:
        return CRITICAL_FLOOR
    try:
        return 10.0 * energy_asymptote(params, gn, a_star)
    except InvalidRegime:
        return CRITICAL_FLOOR


def detect_divergence(history, floor: float, window: int = 8, growth: float = 10.0) -> bool:
    """Energy below ``floor`` while ``int |grad u^2|^2`` kept rising.

    Parameters
    ----------
    history : sequence of ``(energy, dirichlet_sq)`` pairs (extra leading
        items per entry, such as an iteration count, are allowed)
    """
    if len(history) < window:
        return False
    energy = [h[-2] for h in history]
    q = [h[-1] for h in history]
    if not energy[-1] < floor:
        return False
    j = len(q) - 1
    while j > 0 and q[j] > q[j - 1]:
        j -= 1
    run = len(q) - j
    return run >= window and q[-1] >= growth * q[j]


class _Problem:
    """Mesh-level data shared by all iterations of one run."""

    def __init__(self, geometry: Geometry, params: ProblemParams, V):
        self.g = geometry
        self.params = params
        self.Vn = potential_values(V, geometry)
        if self.Vn is not None:
            self.Vn = np.ascontiguousarray(self.Vn)
        self.wn = geometry.node_weights
        self.free = np.ones(geometry.nodes, dtype=bool)
        self.free[-1] = False
        if not geometry.left_free:
            self.free[0] = False

    def state(self, u):
        f = GridField(self.g, u)
        e, G = evaluate_with_gradient(f, self.params, self.Vn)
        return e, G

    def normalize(self, u):
        u = np.where(self.free, np.maximum(u, 0.0), 0.0)
        m = float(np.dot(self.wn, u * u))
        if not m > 0 or not math.isfinite(m):
            return None
        return u / math.sqrt(m)

    def direction(self, u, G, mu, precondition):
        r = G - mu * u
        if not precondition:
            return r
        g = self.g
        sigma = 1.0 + abs(mu)
        zG = np.empty_like(u)
        zu = np.empty_like(u)
        kernels.precond_solve(G, u, self.Vn, self.wn, g.cell_weights, g.h, sigma, g.left_free, zG)
        kernels.precond_solve(u, u, self.Vn, self.wn, g.cell_weights, g.h, sigma, g.left_free, zu)
        denom = float(np.dot(self.wn, u * zu))
        if not denom > 0:
            return r
        return zG - float(np.dot(self.wn, u * zG)) / denom * zu


_ROUNDOFF = 16 * np.finfo(float).eps


def _scale(e):
    return abs(e.kinetic) + abs(e.potential) + abs(e.quasilinear) + abs(e.nonlinear)


def _projected_residual(u, G, mu, wn):
    r = G - mu * u
    r = np.where((u <= 0.0) & (r > 0.0), 0.0, r)
    return math.sqrt(float(np.dot(wn, r * r)))


def descend_step(u: GridField, params: ProblemParams, V=None, step: float = 1.0,
                 precondition: bool = False):
    """One projected step ``normalize((u - step (G - mu u))_+)``.

    Returns ``(u_next, accepted)``; a rejected step returns ``u`` unchanged.
    """
    prob = _Problem(u.geometry, params, V)
    x = np.array(u.values)
    e, G = prob.state(x)
    mu = float(np.dot(prob.wn, G * x))
    d = prob.direction(x, G, mu, precondition)
    trial = prob.normalize(x - step * d)
    if trial is None:
        return u, False
    e_t, _ = prob.state(trial)
    if math.isfinite(e_t.total) and e_t.total <= e.total:
        return GridField(u.geometry, trial), True
    return u, False


def _checkpoint(opts, it, u):
    if opts.checkpoint_every and it % opts.checkpoint_every == 0:
        d = opts.checkpoint_dir or "."
        os.makedirs(d, exist_ok=True)
        u.to_csv(os.path.join(d, f"checkpoint_{it:07d}.csv"))


def minimize(params: ProblemParams, V=None, init: GridField | None = None,
             opts: MinimizerOptions | None = None, geometry: Geometry | None = None,
             gn=None, a_star=None) -> MinimizationResult:
    """Minimize the energy over nonnegative unit-mass fields.

    Parameters
    ----------
    params : ProblemParams
    V : Potential, nodal array or None
        ``None`` minimizes the potential-free functional.
    init : GridField, optional
        Starting state (clipped and renormalized). Defaults to a Gaussian of
        width ``R_max/8`` at a zero of ``V`` on ``geometry``.
    opts : MinimizerOptions
    gn, a_star : optional
        Used only to derive the default divergence floor below ``q*``.

    Raises
    ------
    NumericalBlowup
        Non-finite energy at an accepted state.
    Stall
        Step size collapsed before convergence.
    NoConvergence
        Iteration cap hit with ``opts.raise_on_cap``; ``.result`` holds the last state.
    """
    opts = opts or MinimizerOptions()
    if init is None:
        if geometry is None:
            raise ValueError("need an initial field or a geometry")
        center = V.argmin_point() if hasattr(V, "argmin_point") else 0.0
        if geometry.kind == "radial":
            center, width = 0.0, geometry.hi / 8.0
        else:
            width = 0.5 * (geometry.hi - geometry.lo) / 8.0
        init = gaussian(geometry, width, center)
    floor = opts.divergence_floor
    if floor is None:
        floor = default_divergence_floor(params, gn, a_star)

    prob = _Problem(init.geometry, params, V)
    u = prob.normalize(np.array(init.values, dtype=float))
    if u is None:
        raise ValueError("initial field is identically zero")
    e, G = prob.state(u)
    if not math.isfinite(e.total):
        raise NumericalBlowup("non-finite energy at the initial state")
    step = opts.step0
    step_min = opts.stall_rel * opts.step0
    history = []

    def result(it, mu, res, converged=False, diverged=False):
        return MinimizationResult(GridField(prob.g, u), e, mu, it, res, converged, diverged, history)

    it = 0
    p_prev = z_prev = r_prev = None
    while True:
        mu = float(np.dot(prob.wn, G * u))
        r = G - mu * u
        res = _projected_residual(u, G, mu, prob.wn)
        if it % opts.history_every == 0:
            history.append((it, e.total, e.grad_rho_sq))
            if detect_divergence(history, floor, opts.divergence_window, opts.divergence_growth):
                return result(it, mu, res, diverged=True)
        if res / (1.0 + abs(mu)) <= opts.tol:
            if not history or history[-1][0] != it:
                history.append((it, e.total, e.grad_rho_sq))
            if e.total < floor and e.grad_rho_sq >= opts.divergence_growth * min(h[2] for h in history):
                # stationary only at the mesh scale: the collapse has run out of resolution
                return result(it, mu, res, diverged=True)
            return result(it, mu, res, converged=True)
        if it >= opts.max_iter:
            out = result(it, mu, res)
            if opts.raise_on_cap:
                raise NoConvergence(f"no convergence after {it} iterations (residual {res:.3e})", out)
            return out

        z = prob.direction(u, G, mu, opts.precondition)
        p = -z
        if opts.method == "cg" and p_prev is not None and it % opts.restart_every:
            beta = float(np.dot(prob.wn, r * (z - z_prev))) / float(np.dot(prob.wn, r_prev * z_prev))
            if beta > 0:
                p = p + beta * (p_prev - float(np.dot(prob.wn, u * p_prev)) * u)
        slope = float(np.dot(prob.wn, r * p))
        if not slope < 0:
            p = -z
            slope = float(np.dot(prob.wn, r * p))

        trial, e_t, G_t, step = _line_search(prob, u, e, G, p, slope, res, step, step_min)
        if trial is None and p_prev is not None:
            # a stale conjugate direction can fail at roundoff; retry along the plain one
            p = -z
            slope = float(np.dot(prob.wn, r * p))
            trial, e_t, G_t, step = _line_search(prob, u, e, G, p, slope, res, opts.step0, step_min)
        if trial is None:
            raise Stall(f"step underflow at iteration {it} (residual {res:.3e})", result(it, mu, res))
        p_prev, z_prev, r_prev = p, z, r
        u, e, G = trial, e_t, G_t
        step = min(step * opts.step_growth, 1e6 * opts.step0)
        it += 1
        _checkpoint(opts, it, GridField(prob.g, u))


def _line_search(prob, u, e, G, p, slope, res, step, step_min):
    """Backtracking with a quadratic-model refinement along ``normalize((u + s p)_+)``.

    Inside the roundoff band of the energy a step is judged by the residual
    instead. Returns ``(trial, energy, gradient, step)``; ``trial`` is
    ``None`` on step underflow.
    """
    noise = _ROUNDOFF * _scale(e)

    def probe(s):
        t = prob.normalize(u + s * p)
        if t is None:
            return None, None, None, math.inf, False
        et, Gt = prob.state(t)
        if not math.isfinite(et.total):
            return None, None, None, math.inf, False
        de = et.total - e.total
        if de < -noise:
            return t, et, Gt, de, True
        if de <= noise:
            mu_t = float(np.dot(prob.wn, Gt * t))
            return t, et, Gt, de, _projected_residual(t, Gt, mu_t, prob.wn) < res
        return t, et, Gt, de, False

    while step >= step_min:
        t, et, Gt, de, ok = probe(step)
        curv = de - slope * step
        if ok:
            # the quadratic through phi(0), phi'(0), phi(step) may point further out
            if de < -noise and curv > 0:
                s_q = -slope * step * step / (2.0 * curv)
                if s_q > 1.25 * step or s_q < 0.8 * step:
                    t2, et2, Gt2, de2, ok2 = probe(s_q)
                    if ok2 and de2 < de:
                        return t2, et2, Gt2, s_q
            return t, et, Gt, step
        if de > noise and curv > 0 and math.isfinite(curv):
            step = min(max(-slope * step * step / (2.0 * curv), 0.1 * step), 0.5 * step)
        else:
            step *= 0.5
    return None, None, None, step


def with_options(opts: MinimizerOptions, **changes) -> MinimizerOptions:
    return replace(opts, **changes)
