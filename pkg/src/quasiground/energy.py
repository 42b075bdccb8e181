"""Energy functional, its exact discrete gradient, the multiplier, ``F`` and trial states."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .constants import ProblemParams
from .errors import DomainOverflow, NotNormalized
from .field import Geometry, GridField, dirichlet, integrate, lp_integral, mass

MASS_TOL = 1e-6


@dataclass(frozen=True)
class EnergyBreakdown:
    """The four terms of ``E = kinetic + potential + quasilinear - nonlinear``.

    ``power_integral`` is the raw ``int |u|^(q+2)``, kept so that callers can
    rescale the nonlinear term without knowing ``a``.
    """

    kinetic: float
    potential: float
    quasilinear: float
    nonlinear: float
    total: float
    power_integral: float = float("nan")

    @property
    def grad_sq(self) -> float:
        """``int |grad u|^2``."""
        return 2.0 * self.kinetic

    @property
    def grad_rho_sq(self) -> float:
        """``int |grad u^2|^2``."""
        return 4.0 * self.quasilinear

    def as_dict(self) -> dict:
        return {"kinetic": self.kinetic, "potential": self.potential,
                "quasilinear": self.quasilinear, "nonlinear": self.nonlinear,
                "total": self.total}


def potential_values(V, geometry: Geometry):
    """Nodal potential array (or ``None``) from a Potential, an array or ``None``."""
    if V is None:
        return None
    if hasattr(V, "on"):
        return V.on(geometry)
    arr = np.ascontiguousarray(V, dtype=float)
    if arr.shape != (geometry.nodes,):
        raise ValueError("potential array does not match the mesh")
    return arr


def _terms(u: GridField, params: ProblemParams, Vn, grad=None):
    g = u.geometry
    return kernels.energy_terms(np.ascontiguousarray(u.values), Vn, g.node_weights, g.cell_weights,
                                g.h, params.q + 2.0, grad, params.q, params.a, g.left_free)


def _breakdown(K, Q, P, L, params):
    kin, pot, ql = 0.5 * K, 0.5 * P, 0.25 * Q
    nl = params.a / (params.q + 2.0) * L
    return EnergyBreakdown(kin, pot, ql, nl, kin + pot + ql - nl, L)


def evaluate(u: GridField, params: ProblemParams, V=None) -> EnergyBreakdown:
    """Discrete energy of ``u``; ``V=None`` gives the potential-free functional."""
    K, Q, P, L = _terms(u, params, potential_values(V, u.geometry))
    return _breakdown(K, Q, P, L, params)


def evaluate_with_gradient(u: GridField, params: ProblemParams, Vn=None):
    """``(EnergyBreakdown, G)`` in one sweep; ``Vn`` is a nodal array or ``None``."""
    grad = np.empty(u.geometry.nodes)
    K, Q, P, L = _terms(u, params, Vn, grad)
    return _breakdown(K, Q, P, L, params), grad


def gradient(u: GridField, params: ProblemParams, V=None) -> GridField:
    """``G(u) = -Δu - Δ(u²)u + Vu - a|u|^q u`` as the exact discrete L2 gradient.

    Zero at Dirichlet nodes. ``sum(w * G * phi)`` equals the directional
    derivative of :func:`evaluate` along ``phi``.
    """
    _, g = evaluate_with_gradient(u, params, potential_values(V, u.geometry))
    return GridField(u.geometry, g)


def multiplier(u: GridField, params: ProblemParams, V=None, mass_tol: float = MASS_TOL) -> float:
    """``mu = int |grad u|^2 + int |grad u^2|^2 + int V u^2 - a int |u|^(q+2)``.

    Raises
    ------
    NotNormalized
        If ``|int u^2 - 1| > mass_tol``.
    """
    m = mass(u)
    if abs(m - 1.0) > mass_tol:
        raise NotNormalized(f"mass {m!r} differs from 1 by more than {mass_tol}")
    K, Q, P, L = _terms(u, params, potential_values(V, u.geometry))
    return K + Q + P - params.a * L


def auxiliary_F(rho: GridField, N: int, a_star: float) -> float:
    """``F(rho) = int |grad rho|^2 - N a*/(N+1) int rho^(2+2/N)`` for a density ``rho >= 0``."""
    return dirichlet(rho) - N * a_star / (N + 1.0) * lp_integral(rho, 2.0 + 2.0 / N)


def trial_geometry(tau: float, profile, nodes: int = 2049) -> Geometry:
    """Radial mesh whose last node is the edge ``R/tau`` of the trial support."""
    return Geometry.radial(profile.N, profile.R / tau, nodes)


def trial_family(tau: float, profile, geometry: Geometry | None = None, center=0.0) -> GridField:
    """Normalized trial state ``tau^(N/2) |v|_{L1}^(-1/2) sqrt(v(tau |x - center|))``.

    Parameters
    ----------
    tau : float
        Dilation; the support radius is ``profile.R / tau``.
    profile : RadialProfile
    geometry : Geometry, optional
        Defaults to :func:`trial_geometry`.
    center : float
        Only for interval meshes.

    Raises
    ------
    DomainOverflow
        If the support does not fit inside the mesh.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    if geometry is None:
        geometry = trial_geometry(tau, profile)
    if geometry.N != profile.N:
        raise ValueError("profile and mesh dimensions differ")
    radius = profile.R / tau
    slack = 1e-12 * max(radius, 1.0)
    if geometry.kind == "radial":
        fits = radius <= geometry.hi + slack
    else:
        fits = center - radius >= geometry.lo - slack and center + radius <= geometry.hi + slack
    if not fits:
        raise DomainOverflow(f"trial support radius {radius} leaves the mesh")
    scale = tau ** (profile.N / 2.0) / math.sqrt(profile.mass)
    return GridField.from_function(geometry, lambda d: scale * np.sqrt(profile(tau * d)), center)


def trial_integrals(tau: float, profile) -> dict:
    """Continuum integrals of :func:`trial_family` from the profile's own integrals.

    At ``q = q*`` these reduce to ``N tau^(N+2)/m`` for ``int |grad u^2|^2`` and
    ``(N+1) tau^(N+2)/m^(1+2/N)`` for ``int |u|^(q+2)``.
    """
    N, q, m = profile.N, profile.q, profile.mass
    return {
        "mass": 1.0,
        "dirichlet": tau ** 2 * profile.sqrt_dirichlet / m,
        "dirichlet_sq": tau ** (N + 2) * profile.dirichlet / m ** 2,
        "power": tau ** (N * q / 2.0) * profile.power_integral / m ** ((q + 2) / 2.0),
    }


def trial_energy(tau: float, profile, params: ProblemParams) -> EnergyBreakdown:
    """Closed-form potential-free energy of the trial state."""
    t = trial_integrals(tau, profile)
    kin, ql = 0.5 * t["dirichlet"], 0.25 * t["dirichlet_sq"]
    nl = params.a / (params.q + 2.0) * t["power"]
    return EnergyBreakdown(kin, 0.0, ql, nl, kin + ql - nl, t["power"])


def gaussian(geometry: Geometry, width: float, center=0.0) -> GridField:
    """Normalized Gaussian bump ``exp(-|x-center|^2 / (2 width^2))``."""
    u = GridField.from_function(geometry, lambda d: np.exp(-0.5 * (d / width) ** 2), center)
    return u.normalized()


def limit_density(profile, geometry: Geometry, center=0.0) -> GridField:
    """``lambda^N v(lambda |x - center|)/|v|_{L1}``, unit-mass limit of rescaled densities."""
    lam = (profile.mass / profile.N) ** (1.0 / (profile.N + 2.0))
    scale = lam ** profile.N / profile.mass
    return GridField.from_function(geometry, lambda d: scale * profile(lam * d), center)


def stationarity_residual(u: GridField, params: ProblemParams, V=None) -> float:
    """``||G(u) - mu u||`` in the weighted L2 norm, with ``mu = <G, u>``."""
    G = gradient(u, params, V)
    mu = integrate(u, G.values * u.values) / mass(u)
    r = G.values - mu * u.values
    return math.sqrt(integrate(u, r * r))
