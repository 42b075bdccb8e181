"""Discrete fields on uniform radial or interval meshes.

Node ``i`` carries the weight of its dual cell (``omega_N r^(N-1) dr`` for
radial meshes, ``dx`` for intervals), and differences live on cells between
consecutive nodes. With these two ingredients the discrete energy is an exact
quadratic/quartic form in the nodal values, so its gradient can be computed
exactly as well.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .constants import sphere_area
from .errors import DomainOverflow, InvalidDimension

MIN_NODES = 16


@dataclass(frozen=True)
class Geometry:
    """Uniform mesh description.

    ``kind="radial"`` meshes ``[0, hi]`` in the radius of ``R^N`` with a free
    node at the origin; ``kind="interval"`` meshes ``[lo, hi]`` in 1-D. The
    last node (and for intervals also the first) carries a homogeneous
    Dirichlet condition.
    """

    kind: str
    N: int
    lo: float
    hi: float
    nodes: int

    def __post_init__(self):
        if self.kind not in ("radial", "interval"):
            raise ValueError(f"unknown geometry kind {self.kind!r}")
        if self.N < 1:
            raise InvalidDimension(f"dimension must be a positive integer, got {self.N}")
        if self.kind == "interval" and self.N != 1:
            raise InvalidDimension("interval geometry is one-dimensional")
        if self.kind == "radial" and self.lo != 0.0:
            raise ValueError("radial meshes start at r = 0")
        if self.nodes < MIN_NODES:
            raise ValueError(f"need at least {MIN_NODES} nodes, got {self.nodes}")
        if not self.hi > self.lo:
            raise ValueError("empty mesh")

    @classmethod
    def radial(cls, N: int, R_max: float, nodes: int) -> "Geometry":
        return cls("radial", int(N), 0.0, float(R_max), int(nodes))

    @classmethod
    def interval(cls, lo: float, hi: float, nodes: int) -> "Geometry":
        return cls("interval", 1, float(lo), float(hi), int(nodes))

    @property
    def left_free(self) -> bool:
        return self.kind == "radial"

    @property
    def h(self) -> float:
        return (self.hi - self.lo) / (self.nodes - 1)

    @cached_property
    def x(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.nodes)

    @cached_property
    def node_weights(self) -> np.ndarray:
        h = self.h
        if self.kind == "interval":
            w = np.full(self.nodes, h)
            w[0] = w[-1] = 0.5 * h
            return w
        N = self.N
        edges = np.concatenate(([0.0], self.x[:-1] + 0.5 * h, [self.hi]))
        return sphere_area(N) / N * np.diff(edges ** N)

    @cached_property
    def cell_weights(self) -> np.ndarray:
        if self.kind == "interval":
            return np.full(self.nodes - 1, self.h)
        N = self.N
        return sphere_area(N) / N * np.diff(self.x ** N)

    def distance_from(self, center=0.0) -> np.ndarray:
        """Distance of every node to ``center`` (radial meshes only allow 0)."""
        if self.kind == "radial":
            if center != 0.0:
                raise ValueError("radial fields are centered at the origin")
            return self.x
        return np.abs(self.x - center)

    def header(self) -> str:
        if self.kind == "radial":
            return f"geometry=radial N={self.N} R_max={self.hi!r} nodes={self.nodes}"
        return f"geometry=interval N=1 x_lo={self.lo!r} x_hi={self.hi!r} nodes={self.nodes}"


@dataclass(frozen=True, eq=False)
class GridField:
    """Nodal values of a function on a :class:`Geometry`."""

    geometry: Geometry
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.geometry.nodes,):
            raise ValueError(f"expected {self.geometry.nodes} values, got shape {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, geometry: Geometry, f, center=0.0) -> "GridField":
        """Sample ``f(distance)`` on the mesh and zero the Dirichlet nodes."""
        v = np.asarray(f(geometry.distance_from(center)), dtype=float).copy()
        return cls(geometry, _dirichlet_zero(geometry, v))

    @property
    def x(self) -> np.ndarray:
        return self.geometry.x

    def with_values(self, values) -> "GridField":
        return GridField(self.geometry, values)

    def normalized(self) -> "GridField":
        m = mass(self)
        if not m > 0:
            raise ValueError("cannot normalize a zero field")
        return GridField(self.geometry, self.values / np.sqrt(m))

    def peak_location(self) -> float:
        return float(self.x[int(np.argmax(self.values))])

    def __add__(self, other):
        return self.with_values(self.values + _vals(other))

    def __sub__(self, other):
        return self.with_values(self.values - _vals(other))

    def __mul__(self, c):
        return self.with_values(self.values * c)

    __rmul__ = __mul__

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(f"# {self.geometry.header()}\n")
            fh.write("x,u\n")
            for xi, ui in zip(self.x, self.values):
                fh.write(f"{float(xi)!r},{float(ui)!r}\n")


def _vals(u):
    return u.values if isinstance(u, GridField) else np.asarray(u, dtype=float)


def _dirichlet_zero(geometry, v):
    v[-1] = 0.0
    if not geometry.left_free:
        v[0] = 0.0
    return v


def read_field_csv(path) -> GridField:
    meta = {}
    xs, us = [], []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                for item in line[1:].split():
                    k, _, val = item.partition("=")
                    meta[k] = val
                continue
            if line.startswith("x,"):
                continue
            a, b = line.split(",")
            xs.append(float(a))
            us.append(float(b))
    nodes = int(meta["nodes"])
    if meta.get("geometry") == "radial":
        geom = Geometry.radial(int(meta["N"]), float(meta["R_max"]), nodes)
    else:
        geom = Geometry.interval(float(meta["x_lo"]), float(meta["x_hi"]), nodes)
    return GridField(geom, np.array(us))


def integrate(u, f=None) -> float:
    """Quadrature of nodal values ``f`` (defaults to ``u.values``) on ``u``'s mesh."""
    vals = u.values if f is None else f
    return float(np.dot(u.geometry.node_weights, vals))


def mass(u: GridField) -> float:
    """``int u^2``."""
    return integrate(u, u.values ** 2)


def _grad_sq(geometry, f):
    d = np.diff(f)
    return float(np.dot(geometry.cell_weights, d * d)) / geometry.h ** 2


def dirichlet(u: GridField) -> float:
    """``int |grad u|^2`` with cell differences."""
    return _grad_sq(u.geometry, u.values)


def dirichlet_sq(u: GridField) -> float:
    """``int |grad (u^2)|^2``."""
    return _grad_sq(u.geometry, u.values ** 2)


def lp_integral(u: GridField, p: float) -> float:
    """``int |u|^p``."""
    if not p > 0:
        raise ValueError("p must be positive")
    return integrate(u, np.abs(u.values) ** p)


def l2_distance(u: GridField, v: GridField) -> float:
    if u.geometry != v.geometry:
        raise ValueError("fields live on different meshes")
    return float(np.sqrt(integrate(u, (u.values - v.values) ** 2)))


def resample(u: GridField, geometry: Geometry) -> GridField:
    """Linear interpolation of ``u`` onto another mesh (zero outside ``u``'s mesh)."""
    return rescale(u, 1.0, 0.0, geometry, check=False)


def rescale(u: GridField, eps: float, center=0.0, target: Geometry | None = None,
            check: bool = True) -> GridField:
    """Blow-up rescaling ``w(x) = eps^(N/2) u(eps x + center)``.

    Parameters
    ----------
    u : GridField
    eps : float
        Length scale; ``eps < 1`` zooms in.
    center : float
        Concentration point in ``u``'s coordinates (must be 0 for radial meshes).
    target : Geometry, optional
        Output mesh. Defaults to ``u``'s mesh mapped through ``x -> (x - center)/eps``.
    check : bool
        Raise :class:`DomainOverflow` if the rescaled support leaves ``target``.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    g = u.geometry
    if g.kind == "radial" and center != 0.0:
        raise ValueError("radial fields are centered at the origin")
    if target is None:
        if g.kind == "radial":
            target = Geometry.radial(g.N, g.hi / eps, g.nodes)
        else:
            target = Geometry.interval((g.lo - center) / eps, (g.hi - center) / eps, g.nodes)
    if target.kind != g.kind and not (target.N == 1 and g.N == 1):
        raise ValueError("cannot rescale between geometries of different dimension")
    if check:
        support = g.x[u.values != 0.0]
        if support.size:
            mapped = (support - center) / eps
            if g.kind == "radial" and target.kind == "radial":
                outside = mapped.max() > target.hi * (1 + 1e-12)
            else:
                lo = mapped.min() if g.kind == "interval" else -mapped.max()
                outside = (mapped.max() > target.hi + 1e-12 * abs(target.hi)
                           or lo < target.lo - 1e-12 * abs(target.lo))
            if outside:
                raise DomainOverflow("rescaled support exceeds the target mesh")
    src = g.x
    pts = eps * target.x + center
    if g.kind == "radial":
        pts = np.abs(pts)
    vals = np.interp(pts, src, u.values, left=0.0, right=0.0)
    if g.kind == "radial" and target.kind == "interval":
        vals = np.where(np.abs(pts) <= g.hi, vals, 0.0)
    vals *= eps ** (g.N / 2.0)
    return GridField(target, _dirichlet_zero(target, vals))
