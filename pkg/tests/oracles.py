"""Reference values computed independently of the package.

For N=1 the profile equation has the first integral
``v'^2 = 2v - 4/(q+2) v^((q+2)/2) = c v (alpha^(q/2) - v^(q/2))`` with
``c = 4/(q+2)``, so the peak and every integral of the profile reduce to
one-dimensional quadratures in ``v`` with algebraic end-point weights.
"""
import math

from scipy.integrate import quad


def peak_1d(q):
    """Center value ``alpha`` with ``f(alpha) = 0``."""
    return ((q + 2.0) / 2.0) ** (2.0 / q)


def _gap_ratio(v, q):
    """``(alpha - v) / (c (alpha^p - v^p))`` with ``p = q/2``, stable up to ``v = alpha``."""
    alpha = peak_1d(q)
    p, c = q / 2.0, 4.0 / (q + 2.0)
    x = (v - alpha) / alpha
    if x == 0.0:
        return 1.0 / (c * p * alpha ** (p - 1.0))
    if x <= -1.0:
        return alpha / (c * alpha ** p)
    return -x * alpha / (-c * alpha ** p * math.expm1(p * math.log1p(x)))


def _alg(g, q, left=0.0):
    """``int_0^alpha g(v) (alpha - v)^(-1/2) v^left dv``."""
    alpha = peak_1d(q)
    val, _ = quad(g, 0.0, alpha, weight="alg", wvar=(left, -0.5), limit=500,
                  epsabs=1e-15, epsrel=1e-13)
    return val


def mass_1d(q):
    """``int v dx = 2 int_0^alpha v / sqrt(f) dv``."""
    return 2.0 * _alg(lambda v: math.sqrt(_gap_ratio(v, q)), q, 0.5)


def support_radius_1d(q):
    """``R = int_0^alpha dv / sqrt(f)``."""
    return _alg(lambda v: math.sqrt(_gap_ratio(v, q)), q, -0.5)


def sqrt_dirichlet_1d(q):
    """``int |(sqrt v)'|^2 dx = 1/2 int_0^alpha sqrt(f)/v dv``."""
    alpha = peak_1d(q)
    c = 4.0 / (q + 2.0)
    val, _ = quad(lambda v: math.sqrt(max(2.0 - c * v ** (q / 2.0), 0.0)), 0.0, alpha, weight="alg",
                  wvar=(-0.5, 0.0), limit=500, epsabs=1e-15, epsrel=1e-13)
    return 0.5 * val
