"""Radial free-boundary profile ``v_q`` and the sharp GN constants built from it.

``v_q`` solves ``-Δv + 1 = v^(q/2)`` in a ball ``B_R`` with ``v = ∂v/∂n = 0``
on its boundary. It is found by shooting on the center value: overshooting
trajectories reach ``v = 0`` with nonzero slope, undershooting ones turn
around (``v' = 0``) at a positive height.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from . import kernels
from .constants import GNConstants, ProblemParams, sphere_area, theta
from .errors import IntegrationError, InvalidExponent, NoBracket, NonUniqueProfile

_SCAN_POINTS = 24
_COARSE_STEP = 2e-3


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Shooting solution on ``[0, R]``.

    ``r``, ``v`` and ``dv`` hold the RK4 nodes (uniform spacing ``h``) with the
    free boundary ``R`` as last node. Integrals are trapezoidal in ``r`` with
    the radial weight ``omega_N r^(N-1)``.
    """

    N: int
    q: float
    R: float
    r: np.ndarray
    v: np.ndarray
    dv: np.ndarray
    h: float
    alpha: float
    tol: float
    meta: dict = field(default_factory=dict)

    @property
    def peak(self) -> float:
        return float(self.v[0])

    @property
    def params(self) -> ProblemParams:
        return ProblemParams(self.N, self.q)

    def _integrate(self, f):
        return sphere_area(self.N) * float(np.trapezoid(f * self.r ** (self.N - 1), self.r))

    @cached_property
    def mass(self) -> float:
        """L1 norm ``|v_q|_{L1}``."""
        return self._integrate(self.v)

    @cached_property
    def dirichlet(self) -> float:
        """``int |grad v_q|^2``."""
        return self._integrate(self.dv ** 2)

    @cached_property
    def power_integral(self) -> float:
        """``int v_q^((q+2)/2)``."""
        return self._integrate(np.where(self.v > 0, self.v, 0.0) ** ((self.q + 2) / 2))

    @cached_property
    def sqrt_dirichlet(self) -> float:
        """``int |grad sqrt(v_q)|^2``; at the free boundary the integrand tends to v''(R)/2 = 1/2."""
        with np.errstate(divide="ignore", invalid="ignore"):
            f = np.where(self.v > 0, self.dv ** 2 / (4.0 * self.v), 0.5)
        # the slope residual at R pollutes dv^2/v near the edge; bridge linearly to the limit
        k = min(32, len(self.r) // 8)
        if k >= 2:
            r0 = self.r[-k - 1]
            s = (self.r[-k - 1:] - r0) / (self.R - r0)
            f[-k - 1:] = f[-k - 1] * (1 - s) + 0.5 * s
        return self._integrate(f)

    @cached_property
    def _spline(self):
        return CubicHermiteSpline(self.r, self.v, self.dv, extrapolate=False)

    def __call__(self, r) -> np.ndarray:
        """Evaluate ``v_q`` at radii ``r`` (zero outside the support)."""
        r = np.abs(np.asarray(r, dtype=float))
        out = np.zeros_like(r)
        inside = r < self.R
        out[inside] = self._spline(r[inside])
        return np.maximum(out, 0.0)

    def derivative(self, r) -> np.ndarray:
        r = np.abs(np.asarray(r, dtype=float))
        out = np.zeros_like(r)
        inside = r < self.R
        out[inside] = self._spline.derivative()(r[inside])
        return out

    def boundary_residuals(self) -> tuple[float, float]:
        """``(|v(R)|, |v'(R)|)``."""
        return abs(float(self.v[-1])), abs(float(self.dv[-1]))

    def to_csv(self, path) -> None:
        header = f"N={self.N} q={self.q!r} R={self.R!r} mass={self.mass!r}"
        with open(path, "w") as fh:
            fh.write(f"# {header}\n")
            fh.write("r,v\n")
            for ri, vi in zip(self.r, self.v):
                fh.write(f"{float(ri)!r},{float(vi)!r}\n")


def read_profile_csv(path):
    """Return ``(meta, r, v)`` from a file written by :meth:`RadialProfile.to_csv`."""
    meta = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for item in line[1:].split():
                    key, _, val = item.partition("=")
                    meta[key] = int(val) if key == "N" else float(val)
                continue
            if line.startswith("r,"):
                continue
            a, b = line.split(",")
            rows.append((float(a), float(b)))
    arr = np.array(rows)
    return meta, arr[:, 0].copy(), arr[:, 1].copy()


def _classify(alpha, N, q, h, r_max):
    code = kernels.shoot(alpha, N, q, h, r_max)[0]
    if code == kernels.NO_EVENT:
        raise IntegrationError(f"no shooting event before r={r_max} for alpha={alpha}")
    return code


def _scan(N, q, h, lo, hi, r_max):
    alphas = np.linspace(lo, hi, _SCAN_POINTS + 1)
    codes = [kernels.DV_HITS_ZERO] + [_classify(a, N, q, h, r_max) for a in alphas[1:]]
    changes = [(float(alphas[i]), float(alphas[i + 1]))
               for i in range(len(codes) - 1) if codes[i] != codes[i + 1]]
    if len(changes) > 1:
        raise NonUniqueProfile(changes)
    if not changes:
        raise NoBracket(f"no overshoot in alpha range [{lo}, {hi}] for N={N}, q={q}")
    return changes[0]


def _bisect(N, q, h, lo, hi, r_max, rel_width=0.0):
    # lo undershoots, hi overshoots
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi or hi - lo <= rel_width * hi:
            break
        if _classify(mid, N, q, h, r_max) == kernels.V_HITS_ZERO:
            hi = mid
        else:
            lo = mid
    return lo, hi


def _rebracket(N, q, h, alpha, r_max):
    width = 1e-9 * alpha
    for _ in range(40):
        lo, hi = alpha - width, alpha + width
        if (_classify(max(lo, 1.0), N, q, h, r_max) == kernels.DV_HITS_ZERO
                and _classify(hi, N, q, h, r_max) == kernels.V_HITS_ZERO):
            return max(lo, 1.0), hi
        width *= 8
    raise NoBracket(f"lost the shooting bracket near alpha={alpha}")


def solve_profile(params: ProblemParams, tol: float = 1e-6, nodes: int = 4096,
                  alpha_bracket: tuple[float, float] | None = None,
                  r_max: float = 100.0) -> RadialProfile:
    """Shoot for the free-boundary profile at ``(params.N, params.q)``.

    Parameters
    ----------
    params : ProblemParams
        Only ``N`` and ``q`` are used; needs ``1 < q <= q*``.
    tol : float
        Required ``|v'(R)| <= tol * peak / R`` (``v(R) = 0`` holds by construction).
    nodes : int
        Approximate number of RK4 nodes on ``[0, R]``; the step is tuned so
        that ``R`` falls on the last node.
    alpha_bracket : tuple, optional
        Search interval for the center value; defaults to
        ``(1, 4 ((q+2)/2)^(2/q))``.

    Raises
    ------
    NoBracket, NonUniqueProfile, IntegrationError
    """
    N, q = params.N, params.q
    if not 1.0 < q <= params.q_star * (1 + 1e-13):
        raise InvalidExponent(f"profile needs 1 < q <= q*, got q={q}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if nodes < 16:
        raise ValueError("need at least 16 nodes")
    lo, hi = alpha_bracket or (1.0, 4.0 * ((q + 2.0) / 2.0) ** (2.0 / q))

    lo, hi = _scan(N, q, _COARSE_STEP, lo, hi, r_max)
    # the fine passes rebracket at 1e-9 relative width, so stop the coarse one there
    lo, hi = _bisect(N, q, _COARSE_STEP, lo, hi, r_max, 1e-10)
    R = kernels.shoot(hi, N, q, _COARSE_STEP, r_max)[1]

    # two passes so that R lands on a node to roundoff
    for _ in range(2):
        h = R / (nodes - 1)
        lo, hi = _rebracket(N, q, h, hi, r_max)
        lo, hi = _bisect(N, q, h, lo, hi, r_max)
        code, R, _, dv_R, _, r, v, dv = kernels.shoot(hi, N, q, h, r_max, True)

    if R - r[-1] < 1e-9 * h:
        r[-1], v[-1], dv[-1] = R, 0.0, dv_R
    else:
        r = np.append(r, R)
        v = np.append(v, 0.0)
        dv = np.append(dv, dv_R)
    if abs(dv_R) > tol * hi / R:
        raise IntegrationError(
            f"|v'(R)| = {abs(dv_R):.3e} exceeds tol*peak/R = {tol * hi / R:.3e}; tolerance unattainable in double precision")
    return RadialProfile(N=N, q=float(q), R=float(R), r=r, v=v, dv=dv, h=float(h),
                         alpha=float(hi), tol=tol,
                         meta={"alpha_lo": float(lo), "backend": kernels.BACKEND})


def pohozaev_residuals(profile: RadialProfile) -> tuple[float, float]:
    """Signed relative residuals of the two Pohozaev identities.

    First: ``int v^((q+2)/2)`` against ``mass/(1-theta)``; second:
    ``int |grad v|^2`` against ``theta*mass/(1-theta)``.
    """
    th = theta(profile.params)
    m = profile.mass
    target_power = m / (1.0 - th)
    target_grad = th * m / (1.0 - th)
    return ((profile.power_integral - target_power) / target_power,
            (profile.dirichlet - target_grad) / target_grad)


def gn_equality_ratio(u, gn: GNConstants, q: float | None = None) -> float:
    """LHS/RHS of the sharp GN inequality evaluated at ``u``.

    ``u`` is a :class:`RadialProfile` or a :class:`~quasiground.field.GridField`
    (then ``q`` is required). The ratio is 1 at the optimizer and at most 1
    otherwise.
    """
    if isinstance(u, RadialProfile):
        q = u.q
        lhs, grad, l1 = u.power_integral, u.dirichlet, u.mass
    else:
        from .field import dirichlet, lp_integral
        if q is None:
            raise ValueError("q is required for grid fields")
        lhs = lp_integral(u, (q + 2) / 2)
        grad = dirichlet(u)
        l1 = lp_integral(u, 1.0)
    th = gn.theta_q
    rhs = grad ** ((q + 2) * th / 4) * l1 ** ((q + 2) * (1 - th) / 2) / gn.upsilon_q
    return lhs / rhs


def critical_profile(N: int, tol: float = 1e-6, nodes: int = 4096) -> RadialProfile:
    """Shorthand for the profile at ``q = q*``."""
    p = ProblemParams(N, 2.0 + 4.0 / N)
    return solve_profile(p, tol=tol, nodes=nodes)


def profile_mass_exact_1d(q: float) -> float:
    """First-integral quadrature for N=1: ``2 int_0^alpha v / sqrt(2v - 4/(q+2) v^((q+2)/2)) dv``.

    Independent of the shooting code; used as an oracle.
    """
    from scipy.integrate import quad
    alpha = ((q + 2.0) / 2.0) ** (2.0 / q)
    c = 4.0 / (q + 2.0)

    # substitute v = alpha (1 - s^2) to remove the endpoint singularity at v = alpha
    def integrand(s):
        v = alpha * (1 - s * s)
        f = 2 * v - c * v ** ((q + 2) / 2)
        return v / math.sqrt(f) * 2 * alpha * s if f > 0 else 0.0

    val, _ = quad(integrand, 0.0, 1.0, limit=400, epsabs=1e-14, epsrel=1e-13)
    return 2.0 * val
