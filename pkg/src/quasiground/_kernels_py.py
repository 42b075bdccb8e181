"""Pure-Python/numpy fallback for the compiled kernels in ``_kernels.pyx``.

Same signatures, same return layout. The shooting loop is scalar Python and
therefore slow; the field kernels are vectorized.
"""
import math

import numpy as np
from scipy.linalg import solve_banded

V_HITS_ZERO = 1
DV_HITS_ZERO = -1
NO_EVENT = 0


def _spow(v, e):
    if v <= 0.0:
        return 0.0
    return math.exp(e * math.log(v))


def _rhs(r, v, p, N, half_q):
    if r == 0.0:
        return (1.0 - _spow(v, half_q)) / N
    return 1.0 - _spow(v, half_q) - (N - 1) * p / r


def _herm(v0, p0, v1, p1, h, t):
    t2 = t * t
    t3 = t2 * t
    return ((2 * t3 - 3 * t2 + 1) * v0 + (t3 - 2 * t2 + t) * h * p0
            + (-2 * t3 + 3 * t2) * v1 + (t3 - t2) * h * p1)


def _dherm(v0, p0, v1, p1, h, t):
    t2 = t * t
    return ((6 * t2 - 6 * t) * v0 + (3 * t2 - 4 * t + 1) * h * p0
            + (-6 * t2 + 6 * t) * v1 + (3 * t2 - 2 * t) * h * p1) / h


def _root_herm(v0, p0, v1, p1, h, lo, hi):
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if _herm(v0, p0, v1, p1, h, mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _root_dherm(v0, p0, v1, p1, h):
    lo, hi = 0.0, 1.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if _dherm(v0, p0, v1, p1, h, mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def shoot(alpha, N, q, h, r_max, record=False):
    half_q = 0.5 * q
    if alpha <= 1.0:
        return DV_HITS_ZERO, 0.0, alpha, 0.0, 0, None, None, None
    r, v, p = 0.0, alpha, 0.0
    k = 0
    code = NO_EVENT
    r_ev, v_ev, p_ev = r_max, 0.0, 0.0
    rs, vs, ps = ([0.0], [alpha], [0.0]) if record else (None, None, None)
    while r < r_max:
        k1v = p
        k1p = _rhs(r, v, p, N, half_q)
        k2v = p + 0.5 * h * k1p
        k2p = _rhs(r + 0.5 * h, v + 0.5 * h * k1v, k2v, N, half_q)
        k3v = p + 0.5 * h * k2p
        k3p = _rhs(r + 0.5 * h, v + 0.5 * h * k2v, k3v, N, half_q)
        k4v = p + h * k3p
        k4p = _rhs(r + h, v + h * k3v, k4v, N, half_q)
        v1 = v + h * (k1v + 2 * k2v + 2 * k3v + k4v) / 6.0
        p1 = p + h * (k1p + 2 * k2p + 2 * k3p + k4p) / 6.0

        if v1 <= 0.0:
            code = V_HITS_ZERO
            t_ev = _root_herm(v, p, v1, p1, h, 0.0, 1.0)
        elif p1 >= 0.0:
            t_min = _root_dherm(v, p, v1, p1, h)
            if _herm(v, p, v1, p1, h, t_min) <= 0.0:
                code = V_HITS_ZERO
                t_ev = _root_herm(v, p, v1, p1, h, 0.0, t_min)
            else:
                code = DV_HITS_ZERO
                t_ev = t_min
        if code != NO_EVENT:
            r_ev = r + t_ev * h
            v_ev = 0.0 if code == V_HITS_ZERO else _herm(v, p, v1, p1, h, t_ev)
            p_ev = _dherm(v, p, v1, p1, h, t_ev)
            break
        k += 1
        r = k * h
        v, p = v1, p1
        if record:
            rs.append(r)
            vs.append(v)
            ps.append(p)
    if record:
        return code, r_ev, v_ev, p_ev, k, np.array(rs), np.array(vs), np.array(ps)
    return code, r_ev, v_ev, p_ev, k, None, None, None


def energy_terms(u, V, wn, wc, h, power, grad=None, q=0.0, a=0.0, left_free=False):
    u = np.asarray(u)
    rho = u * u
    du = np.diff(u)
    drho = np.diff(rho)
    ih2 = 1.0 / (h * h)
    K = float(np.dot(wc, du * du)) * ih2
    Q = float(np.dot(wc, drho * drho)) * ih2
    au = np.abs(u)
    L = float(np.dot(wn, np.where(au > 0, au, 0.0) ** power))
    P = float(np.dot(wn, V * rho)) if V is not None else 0.0
    if grad is not None:
        flux_u = wc * du
        flux_r = wc * drho
        lap_u = np.zeros_like(u)
        lap_r = np.zeros_like(u)
        lap_u[:-1] -= flux_u
        lap_u[1:] += flux_u
        lap_r[:-1] -= flux_r
        lap_r[1:] += flux_r
        g = (lap_u + lap_r * u) * ih2 / wn - a * au ** q * u
        if V is not None:
            g += V * u
        g[-1] = 0.0
        if not left_free:
            g[0] = 0.0
        grad[:] = g
    return K, Q, P, L


def precond_solve(b, u, V, wn, wc, h, sigma, left_free, out):
    n = len(u)
    first = 0 if left_free else 1
    last = n - 2
    out[:] = 0.0
    if last < first:
        return
    ih2 = 1.0 / (h * h)
    kappa = wc * (1.0 + 2.0 * (u[:-1] ** 2 + u[1:] ** 2)) * ih2
    diag = wn * sigma
    if V is not None:
        diag = diag + wn * V
    diag = diag.copy()
    diag[:-1] += kappa
    diag[1:] += kappa
    idx = slice(first, last + 1)
    m = last - first + 1
    ab = np.zeros((3, m))
    ab[1] = diag[idx]
    off = -kappa[first:last]
    ab[0, 1:] = off
    ab[2, :-1] = off
    out[idx] = solve_banded((1, 1), ab, (wn * b)[idx])
