"""Affine maps and continuous warps R^m -> R^n.

Warps are small expression trees: an affine leaf, coordinatewise power and
sine-perturbation leaves, and composition nodes. Axis indices are 1-based.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from pwkit.errors import DimensionError, DomainError

# smallest singular value must exceed this times the largest for injectivity
INJECTIVITY_RTOL = 1e-10


@dataclass(frozen=True, eq=False)
class AffineMap:
    """``t -> A t + b`` with ``A`` of shape (n, m)."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=float, ndmin=2)
        if A.ndim != 2:
            raise DimensionError("A must be a matrix")
        b = np.zeros(A.shape[0]) if self.b is None else np.array(self.b, dtype=float).reshape(-1)
        if b.shape != (A.shape[0],):
            raise DimensionError(f"offset has length {b.shape[0]}, expected {A.shape[0]}")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise DomainError("affine map entries must be finite")
        A.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @classmethod
    def linear(cls, A) -> "AffineMap":
        return cls(A, None)

    @classmethod
    def identity(cls, n: int) -> "AffineMap":
        return cls(np.eye(n), np.zeros(n))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.A.shape[1]

    @property
    def op_norm(self) -> float:
        return float(np.linalg.norm(self.A, 2)) if self.A.size else 0.0

    def singular_values(self) -> np.ndarray:
        return np.linalg.svd(self.A, compute_uv=False)

    @property
    def is_injective(self) -> bool:
        s = self.singular_values()
        if len(s) < self.m or s[0] == 0:
            return False
        return bool(s[-1] > INJECTIVITY_RTOL * s[0])

    def inverse(self) -> "AffineMap":
        if self.n != self.m:
            raise DimensionError("only square maps have inverses")
        Ainv = np.linalg.inv(self.A)
        return AffineMap(Ainv, -Ainv @ self.b)

    def then(self, outer: "AffineMap") -> "AffineMap":
        """``outer o self``."""
        return AffineMap(outer.A @ self.A, outer.A @ self.b + outer.b)

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if t.ndim == 1:
            return self.A @ t + self.b
        return t @ self.A.T + self.b

    def to_dict(self) -> dict:
        return {"A": self.A.tolist(), "b": self.b.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "AffineMap":
        A = np.array(d["A"], dtype=float, ndmin=2)
        return cls(A, d.get("b"))


class WarpExpr:
    """Base class for continuous maps evaluated on batches of shape (P, m)."""

    def apply(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def as_affine(self, m: int) -> Optional[AffineMap]:
        """The equivalent AffineMap on R^m, or None if the tree is not affine."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if t.ndim == 1:
            return self.apply(t[None, :])[0]
        return self.apply(t)

    def then(self, outer: "WarpExpr") -> "Compose":
        return Compose(outer, self)


def _check_axis(axis: int, width: int):
    if not 1 <= axis <= width:
        raise DimensionError(f"warp axis {axis} out of range for dimension {width}")


@dataclass(frozen=True, eq=False)
class AffineWarp(WarpExpr):
    map: AffineMap

    def apply(self, t):
        if t.shape[1] != self.map.m:
            raise DimensionError(f"affine warp expects dimension {self.map.m}, got {t.shape[1]}")
        return self.map(t)

    def as_affine(self, m):
        if m != self.map.m:
            raise DimensionError(f"affine warp expects dimension {self.map.m}, got {m}")
        return self.map

    def to_dict(self):
        return {"type": "affine", **self.map.to_dict()}


@dataclass(frozen=True)
class CoordinatePower(WarpExpr):
    """Replace coordinate ``axis`` by its ``power``-th power."""

    axis: int
    power: int

    def apply(self, t):
        _check_axis(self.axis, t.shape[1])
        out = np.array(t, dtype=float)
        out[:, self.axis - 1] = out[:, self.axis - 1] ** self.power
        return out

    def as_affine(self, m):
        _check_axis(self.axis, m)
        return AffineMap.identity(m) if self.power == 1 else None

    def to_dict(self):
        return {"type": "power", "axis": self.axis, "power": self.power}


@dataclass(frozen=True)
class CoordinateSine(WarpExpr):
    """Replace coordinate ``axis`` x by ``x + amplitude * sin(frequency * x)``."""

    axis: int
    amplitude: float
    frequency: float = 1.0

    def apply(self, t):
        _check_axis(self.axis, t.shape[1])
        out = np.array(t, dtype=float)
        x = out[:, self.axis - 1]
        out[:, self.axis - 1] = x + self.amplitude * np.sin(self.frequency * x)
        return out

    def as_affine(self, m):
        _check_axis(self.axis, m)
        if self.amplitude == 0 or self.frequency == 0:
            return AffineMap.identity(m)
        return None

    def to_dict(self):
        return {"type": "sine", "axis": self.axis, "amplitude": self.amplitude,
                "frequency": self.frequency}


@dataclass(frozen=True, eq=False)
class Compose(WarpExpr):
    """``outer o inner``."""

    outer: WarpExpr
    inner: WarpExpr

    def apply(self, t):
        return self.outer.apply(self.inner.apply(t))

    def as_affine(self, m):
        first = self.inner.as_affine(m)
        if first is None:
            return None
        second = self.outer.as_affine(first.n)
        return None if second is None else first.then(second)

    def to_dict(self):
        return {"type": "compose", "outer": self.outer.to_dict(), "inner": self.inner.to_dict()}


def affine(A, b=None) -> AffineWarp:
    return AffineWarp(AffineMap(A, b))


def chain(*warps: WarpExpr) -> WarpExpr:
    """Compose warps left to right: ``chain(f, g)(t) == g(f(t))``."""
    if not warps:
        raise DomainError("chain needs at least one warp")
    out = warps[0]
    for w in warps[1:]:
        out = Compose(w, out)
    return out


def warp_from_dict(d: dict) -> WarpExpr:
    kind = d.get("type")
    if kind == "affine":
        return AffineWarp(AffineMap.from_dict(d))
    if kind == "power":
        return CoordinatePower(int(d["axis"]), int(d["power"]))
    if kind == "sine":
        return CoordinateSine(int(d["axis"]), float(d["amplitude"]), float(d.get("frequency", 1.0)))
    if kind == "compose":
        return Compose(warp_from_dict(d["outer"]), warp_from_dict(d["inner"]))
    if kind == "chain":
        return chain(*(warp_from_dict(x) for x in d["maps"]))
    raise DomainError(f"unknown warp type {kind!r}")


def warp_dims(warp: WarpExpr, m: int) -> int:
    """Output dimension of ``warp`` on R^m (probes one point)."""
    return warp.apply(np.zeros((1, m))).shape[1]
