"""Closed-form exponents and constants for the quasilinear ground-state problem.

Nothing in this module discretizes anything: the only numerical input from
outside is the L1 mass of the radial profile ``v_q``, supplied by
:mod:`quasiground.profile`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidDimension, InvalidExponent, InvalidMass, InvalidRegime

_Q_SLACK = 1e-13


def critical_exponent(N: int) -> float:
    """Mass-critical exponent ``q* = 2 + 4/N``."""
    if N < 1 or int(N) != N:
        raise InvalidDimension(f"dimension must be a positive integer, got {N!r}")
    return 2.0 + 4.0 / N


def sphere_area(N: int) -> float:
    """Surface area of the unit sphere in R^N (2 for N=1, 2*pi for N=2)."""
    if N < 1:
        raise InvalidDimension(f"dimension must be a positive integer, got {N!r}")
    return 2.0 * math.pi ** (N / 2.0) / math.gamma(N / 2.0)


@dataclass(frozen=True)
class ProblemParams:
    """Dimension ``N``, exponent ``q`` and coupling ``a``.

    ``q`` above ``q*`` is rejected unless ``allow_supercritical`` is set,
    which only the dilation-divergence probe does.
    """

    N: int
    q: float
    a: float = 1.0
    allow_supercritical: bool = False

    def __post_init__(self):
        if not isinstance(self.N, (int,)) or isinstance(self.N, bool) or self.N < 1:
            raise InvalidDimension(f"dimension must be a positive integer, got {self.N!r}")
        if not math.isfinite(self.q) or self.q <= 0:
            raise InvalidExponent(f"q must be positive, got {self.q!r}")
        if not math.isfinite(self.a):
            raise InvalidExponent(f"a must be finite, got {self.a!r}")
        if self.q > self.q_star * (1 + _Q_SLACK) and not self.allow_supercritical:
            raise InvalidRegime(f"q={self.q} exceeds q*={self.q_star}; supercritical runs need allow_supercritical")

    @property
    def q_star(self) -> float:
        return critical_exponent(self.N)

    @property
    def is_critical(self) -> bool:
        return abs(self.q - self.q_star) <= _Q_SLACK * self.q_star

    def with_q(self, q: float) -> "ProblemParams":
        return ProblemParams(self.N, q, self.a, self.allow_supercritical)

    def with_a(self, a: float) -> "ProblemParams":
        return ProblemParams(self.N, self.q, a, self.allow_supercritical)


@dataclass(frozen=True)
class GNConstants:
    theta_q: float
    lambda_q: float
    a_q: float
    upsilon_q: float


def _theta(N, q):
    return 2.0 * q * N / ((q + 2.0) * (N + 2.0))


def theta(params: ProblemParams) -> float:
    """Interpolation exponent ``2qN / ((q+2)(N+2))``."""
    if params.q <= 0:
        raise InvalidExponent(f"q must be positive, got {params.q}")
    return _theta(params.N, params.q)


def lambda_factor(params: ProblemParams) -> float:
    th = theta(params)
    return (1.0 - th) * (th / (1.0 - th)) ** (params.q * params.N / (2.0 * (params.N + 2.0)))


def gn_constants(params: ProblemParams, profile_mass: float) -> GNConstants:
    """Sharp Gagliardo-Nirenberg constants for ``(N, q)``.

    Parameters
    ----------
    params : ProblemParams
    profile_mass : float
        L1 norm of the radial profile ``v_q`` at the same ``(N, q)``.
    """
    if not profile_mass > 0:
        raise InvalidMass(f"profile mass must be positive, got {profile_mass!r}")
    th = theta(params)
    lam = lambda_factor(params)
    aq = profile_mass ** (params.q / (params.N + 2.0))
    return GNConstants(theta_q=th, lambda_q=lam, a_q=aq, upsilon_q=lam * aq)


def existence_threshold(N: int, critical_mass: float) -> float:
    """``a_{q*} = |v_{q*}|_{L1}^{2/N}``."""
    if not critical_mass > 0:
        raise InvalidMass(f"profile mass must be positive, got {critical_mass!r}")
    return critical_mass ** (2.0 / N)


def exponent_collapse(params: ProblemParams) -> float:
    """``(q+2) theta_q / 4``, which equals ``q/q*``."""
    return (params.q + 2.0) * theta(params) / 4.0


def _log_base(params: ProblemParams, gn: GNConstants) -> float:
    q, qs = params.q, params.q_star
    base = 4.0 * params.a * q / (qs * gn.lambda_q * gn.a_q * (q + 2.0))
    if not base > 0:
        raise InvalidRegime(f"blow-up base must be positive, got {base}")
    return math.log(base)


def blowup_level(params: ProblemParams, gn: GNConstants) -> float:
    """``t_q = base^(q*/(q*-q))``, the predicted size of int |grad u^2|^2."""
    if params.q >= params.q_star:
        raise InvalidRegime("blow-up scale needs q < q*")
    return math.exp(params.q_star / (params.q_star - params.q) * _log_base(params, gn))


def blowup_scale(params: ProblemParams, gn: GNConstants) -> float:
    """Concentration length ``eps_q = t_q^(-1/(N+2))``."""
    if params.q >= params.q_star:
        raise InvalidRegime("blow-up scale needs q < q*")
    log_t = params.q_star / (params.q_star - params.q) * _log_base(params, gn)
    return math.exp(-log_t / (params.N + 2.0))


def energy_asymptote(params: ProblemParams, gn: GNConstants, a_star: float | None = None) -> float:
    """Leading-order minimum energy ``-(q*-q)/(4q) t_q`` of the potential-free problem."""
    if params.q >= params.q_star:
        raise InvalidRegime("energy asymptote needs q < q*")
    if a_star is not None and params.a <= a_star:
        raise InvalidRegime(f"energy asymptote needs a > a_q* = {a_star}, got a = {params.a}")
    if _log_base(params, gn) <= 0:
        raise InvalidRegime("energy asymptote needs a blow-up base above 1")
    return -(params.q_star - params.q) / (4.0 * params.q) * blowup_level(params, gn)


def rescaled_coupling(params: ProblemParams, gn: GNConstants) -> float:
    """``a eps_q^(N+2-Nq/2)``; tends to ``a_{q*}`` as q approaches q*."""
    q = params.q
    return params.q_star * gn.lambda_q * gn.a_q * (q + 2.0) / (4.0 * q)


def optimal_trial_tau(params: ProblemParams, gn: GNConstants, profile_mass: float) -> float:
    """Dilation of the profile-based trial state whose quasilinear term equals ``t_q``."""
    th = gn.theta_q
    t = blowup_level(params, gn)
    return ((1.0 - th) * t * profile_mass / th) ** (1.0 / (params.N + 2.0))


def limit_profile_scale(N: int, critical_mass: float) -> float:
    """``lambda = (|v_{q*}|_{L1}/N)^(1/(N+2))`` of the blow-up limit profile."""
    if not critical_mass > 0:
        raise InvalidMass(f"profile mass must be positive, got {critical_mass!r}")
    return (critical_mass / N) ** (1.0 / (N + 2.0))


def multiplier_limit(N: int) -> float:
    """Predicted limit ``-1/N`` of ``mu_q eps_q^(N+2)``."""
    if N < 1:
        raise InvalidDimension(f"dimension must be a positive integer, got {N!r}")
    return -1.0 / N
