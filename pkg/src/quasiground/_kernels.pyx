# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: radial shooting, discrete energy/gradient, tridiagonal solve.

Every function here has a line-for-line counterpart in ``_kernels_py`` with
the same signature and return layout.
"""
import numpy as np

from libc.math cimport exp, log

cdef int V_HITS_ZERO = 1
cdef int DV_HITS_ZERO = -1
cdef int NO_EVENT = 0


cdef inline double _spow(double v, double e) noexcept nogil:
    cdef int k
    cdef double r
    if v <= 0.0:
        return 0.0
    if e == <double>(<int>e) and 0.0 < e <= 16.0:
        # integer exponents (q* in low dimension) by repeated squaring
        k = <int>e
        r = 1.0
        while k:
            if k & 1:
                r *= v
            v *= v
            k >>= 1
        return r
    return exp(e * log(v))


cdef inline double _rhs(double r, double v, double p, int N, double half_q) noexcept nogil:
    if r == 0.0:
        return (1.0 - _spow(v, half_q)) / N
    return 1.0 - _spow(v, half_q) - (N - 1) * p / r


cdef inline double _herm(double v0, double p0, double v1, double p1,
                         double h, double t) noexcept nogil:
    cdef double t2 = t * t
    cdef double t3 = t2 * t
    return ((2 * t3 - 3 * t2 + 1) * v0 + (t3 - 2 * t2 + t) * h * p0
            + (-2 * t3 + 3 * t2) * v1 + (t3 - t2) * h * p1)


cdef inline double _dherm(double v0, double p0, double v1, double p1,
                          double h, double t) noexcept nogil:
    cdef double t2 = t * t
    return ((6 * t2 - 6 * t) * v0 + (3 * t2 - 4 * t + 1) * h * p0
            + (-6 * t2 + 6 * t) * v1 + (3 * t2 - 2 * t) * h * p1) / h


cdef double _root_herm(double v0, double p0, double v1, double p1,
                       double h, double lo, double hi) noexcept nogil:
    # H(lo) > 0 >= H(hi)
    cdef int i
    cdef double mid
    for i in range(80):
        mid = 0.5 * (lo + hi)
        if _herm(v0, p0, v1, p1, h, mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


cdef double _root_dherm(double v0, double p0, double v1, double p1,
                        double h) noexcept nogil:
    # H'(0) < 0 <= H'(1)
    cdef int i
    cdef double lo = 0.0, hi = 1.0, mid
    for i in range(80):
        mid = 0.5 * (lo + hi)
        if _dherm(v0, p0, v1, p1, h, mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def shoot(double alpha, int N, double q, double h, double r_max, bint record=False):
    """Integrate v'' + (N-1)/r v' = 1 - v^(q/2), v(0)=alpha, v'(0)=0 with RK4.

    Returns ``(code, r_event, v_event, dv_event, n_steps, r, v, dv)``; the
    arrays are None unless ``record`` and hold the uniform nodes strictly
    before the event.
    """
    cdef double half_q = 0.5 * q
    cdef double r = 0.0, v = alpha, p = 0.0
    cdef double k1v, k1p, k2v, k2p, k3v, k3p, k4v, k4p
    cdef double v1, p1, t_ev, t_min
    cdef Py_ssize_t k = 0, cap = 0
    cdef int code = NO_EVENT
    cdef double r_ev = r_max, v_ev = 0.0, p_ev = 0.0
    cdef double[::1] rs_v, vs_v, ps_v

    if alpha <= 1.0:
        return DV_HITS_ZERO, 0.0, alpha, 0.0, 0, None, None, None

    if record:
        cap = 1024
        rs = np.empty(cap)
        vs = np.empty(cap)
        ps = np.empty(cap)
        rs_v = rs
        vs_v = vs
        ps_v = ps
        rs_v[0] = 0.0
        vs_v[0] = alpha
        ps_v[0] = 0.0

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
            v_ev = _herm(v, p, v1, p1, h, t_ev)
            p_ev = _dherm(v, p, v1, p1, h, t_ev)
            if code == V_HITS_ZERO:
                v_ev = 0.0
            break

        k += 1
        r = k * h
        v = v1
        p = p1
        if record:
            if k >= cap:
                cap *= 2
                rs = np.resize(rs, cap)
                vs = np.resize(vs, cap)
                ps = np.resize(ps, cap)
                rs_v = rs
                vs_v = vs
                ps_v = ps
            rs_v[k] = r
            vs_v[k] = v
            ps_v[k] = p

    if record:
        return code, r_ev, v_ev, p_ev, k, rs[:k + 1].copy(), vs[:k + 1].copy(), ps[:k + 1].copy()
    return code, r_ev, v_ev, p_ev, k, None, None, None


def energy_terms(const double[::1] u, V, const double[::1] wn,
                 const double[::1] wc, double h, double power,
                 double[::1] grad=None, double q=0.0, double a=0.0,
                 bint left_free=False):
    """Return ``(K, Q, P, L)`` = (int |u'|^2, int |(u^2)'|^2, int V u^2, int |u|^power).

    When ``grad`` is given it receives the L2-gradient of
    E = K/2 + P/2 + Q/4 - a/(q+2) L (``power`` must equal q+2); Dirichlet
    nodes get 0.
    """
    cdef Py_ssize_t n = u.shape[0], i
    cdef double K = 0.0, Q = 0.0, P = 0.0, L = 0.0
    cdef double du, dr, ui, rhoi, rhoj, au, uq
    cdef double ih2 = 1.0 / (h * h)
    cdef const double[::1] Vv
    cdef bint has_V = V is not None
    cdef bint has_grad = grad is not None
    cdef bint fused = has_grad and power == q + 2.0
    cdef double[::1] g
    if has_V:
        Vv = V
    if has_grad:
        g = grad

    for i in range(n - 1):
        du = u[i + 1] - u[i]
        rhoi = u[i] * u[i]
        rhoj = u[i + 1] * u[i + 1]
        dr = rhoj - rhoi
        K += wc[i] * du * du
        Q += wc[i] * dr * dr
    K *= ih2
    Q *= ih2

    for i in range(n):
        ui = u[i]
        au = ui if ui >= 0.0 else -ui
        rhoi = ui * ui
        if has_V:
            P += wn[i] * Vv[i] * rhoi
        if fused:
            # |u|^(q+2) = |u|^q u^2 saves one pow per node
            uq = _spow(au, q)
            L += wn[i] * uq * rhoi
        else:
            L += wn[i] * _spow(au, power)
            if has_grad:
                uq = _spow(au, q)
        if not has_grad:
            continue
        if i == n - 1 or (i == 0 and not left_free):
            g[i] = 0.0
            continue
        if i > 0:
            du = wc[i - 1] * (ui - u[i - 1])
            dr = wc[i - 1] * (rhoi - u[i - 1] * u[i - 1])
        else:
            du = 0.0
            dr = 0.0
        du -= wc[i] * (u[i + 1] - ui)
        dr -= wc[i] * (u[i + 1] * u[i + 1] - rhoi)
        g[i] = (du + dr * ui) * ih2 / wn[i] - a * uq * ui
        if has_V:
            g[i] += Vv[i] * ui
    return K, Q, P, L


def precond_solve(const double[::1] b, const double[::1] u, V,
                  const double[::1] wn, const double[::1] wc, double h,
                  double sigma, bint left_free, double[::1] out):
    """Solve (diag(wn*(sigma+V)) + A_kappa) z = wn*b on the free nodes.

    A_kappa is the stiffness matrix with cell coefficient
    1 + 2(u_j^2 + u_{j+1}^2); Dirichlet nodes get z = 0.
    """
    cdef Py_ssize_t n = u.shape[0], i, first = 0 if left_free else 1
    cdef Py_ssize_t last = n - 2
    cdef double ih2 = 1.0 / (h * h)
    cdef double[::1] cp = np.empty(n)
    cdef double[::1] dp = np.empty(n)
    cdef double kl, kr, diag, lower, upper, denom
    cdef bint has_V = V is not None
    cdef const double[::1] Vv
    if has_V:
        Vv = V

    for i in range(n):
        out[i] = 0.0
    if last < first:
        return
    for i in range(first, last + 1):
        kl = 0.0
        if i > 0:
            kl = wc[i - 1] * (1.0 + 2.0 * (u[i - 1] * u[i - 1] + u[i] * u[i])) * ih2
        kr = wc[i] * (1.0 + 2.0 * (u[i] * u[i] + u[i + 1] * u[i + 1])) * ih2
        diag = wn[i] * sigma + kl + kr
        if has_V:
            diag += wn[i] * Vv[i]
        lower = -kl if i > first else 0.0
        upper = -kr if i < last else 0.0
        if i == first:
            cp[i] = upper / diag
            dp[i] = wn[i] * b[i] / diag
        else:
            denom = diag - lower * cp[i - 1]
            cp[i] = upper / denom
            dp[i] = (wn[i] * b[i] - lower * dp[i - 1]) / denom
    out[last] = dp[last]
    for i in range(last - 1, first - 1, -1):
        out[i] = dp[i] - cp[i] * out[i + 1]
