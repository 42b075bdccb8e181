"""Trapping potentials ``V >= 0`` with ``inf V = 0``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

KINDS = ("zero", "power", "shifted-well", "custom-table")


@dataclass(frozen=True)
class Potential:
    """Radially symmetric (about ``center``) potential.

    kinds
        ``zero``: ``V = 0``; ``power``: ``|x - center|^p``;
        ``shifted-well``: ``(|x|^2 - r0^2)_+^2``; ``custom-table``: piecewise
        linear through ``(table_x, table_v)``, evaluated at ``|x|``.
    """

    kind: str = "zero"
    p: float = 2.0
    center: float = 0.0
    r0: float = 0.0
    table_x: tuple = ()
    table_v: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown potential kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "power" and not self.p > 0:
            raise ConfigError("power potential needs p > 0")
        if self.kind == "shifted-well" and self.r0 < 0:
            raise ConfigError("shifted-well needs r0 >= 0")
        if self.kind == "custom-table":
            tx, tv = np.asarray(self.table_x, float), np.asarray(self.table_v, float)
            if tx.size < 2 or tx.shape != tv.shape or np.any(np.diff(tx) <= 0):
                raise ConfigError("custom-table needs matching increasing table_x and table_v")
            if np.any(tv < 0) or tv.min() != 0.0:
                raise ConfigError("custom-table values must be >= 0 with minimum 0")

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def power(cls, p=2.0, center=0.0):
        return cls("power", p=float(p), center=float(center))

    @classmethod
    def shifted_well(cls, r0):
        return cls("shifted-well", r0=float(r0))

    @classmethod
    def table(cls, xs, vs):
        return cls("custom-table", table_x=tuple(map(float, xs)), table_v=tuple(map(float, vs)))

    @classmethod
    def from_dict(cls, d: dict) -> "Potential":
        d = dict(d)
        kind = d.pop("kind", "zero")
        for k in ("table_x", "table_v"):
            if k in d:
                d[k] = tuple(d[k])
        try:
            return cls(kind=kind, **d)
        except TypeError as exc:
            raise ConfigError(f"bad potential spec: {exc}") from None

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "power":
            d.update(p=self.p, center=self.center)
        elif self.kind == "shifted-well":
            d["r0"] = self.r0
        elif self.kind == "custom-table":
            d.update(table_x=list(self.table_x), table_v=list(self.table_v))
        return d

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero"

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "power":
            return np.abs(x - self.center) ** self.p
        if self.kind == "shifted-well":
            return np.maximum(x * x - self.r0 ** 2, 0.0) ** 2
        tx, tv = np.asarray(self.table_x), np.asarray(self.table_v)
        return np.interp(np.abs(x), tx, tv, right=tv[-1])

    def on(self, geometry) -> np.ndarray | None:
        """Nodal values on a mesh, or ``None`` for the zero potential."""
        if self.kind == "zero":
            return None
        return self(geometry.x)

    def argmin_distance(self, x) -> np.ndarray:
        """Distance from ``x`` to the zero set ``{V = 0}``."""
        x = np.asarray(x, dtype=float)
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "power":
            return np.abs(x - self.center)
        if self.kind == "shifted-well":
            return np.maximum(np.abs(x) - self.r0, 0.0)
        tx, tv = np.asarray(self.table_x), np.asarray(self.table_v)
        zeros = tx[tv == 0.0]
        return np.min(np.abs(np.abs(x)[..., None] - zeros), axis=-1)

    def argmin_point(self) -> float:
        """A point of the zero set used to center initial states."""
        if self.kind == "power":
            return self.center
        if self.kind == "custom-table":
            tx, tv = np.asarray(self.table_x), np.asarray(self.table_v)
            return float(tx[tv == 0.0][0])
        return 0.0

    def default_extent(self, level: float = 1e3) -> float | None:
        """Radius beyond which ``V >= level`` (``None`` if not confining)."""
        if self.kind == "power":
            return level ** (1.0 / self.p) + abs(self.center)
        if self.kind == "shifted-well":
            return float(np.sqrt(self.r0 ** 2 + np.sqrt(level)))
        if self.kind == "custom-table":
            tv = np.asarray(self.table_v)
            hit = np.nonzero(tv >= level)[0]
            return float(self.table_x[hit[0]]) if hit.size else None
        return None
