"""Bandlimited signals on R^n: spectral supports, grid-sampled spectra, the
test-function catalog and pointwise evaluation.

Fourier convention used everywhere in the package::

    f(t) = integral of fhat(u) * exp(i (u, t)) du

with no 2*pi in the exponent and no normalising constant in front, so the
spectrum of ``2 sin(t)/t`` is the indicator of [-1, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from pwkit.errors import (
    CatalogIndexError,
    DimensionError,
    DomainError,
    ResourceError,
    UnsupportedRepresentationError,
)

SINC_CROSSOVER = 1e-4
MAX_GRID_NODES = 2**23
# intervals per unit of spectral length, keyed by dimension
DEFAULT_PER_UNIT = {1: 256, 2: 128, 3: 64}
_CHUNK_ELEMENTS = 2**22


def sinc_safe(x):
    """``sin(x)/x`` with the value 1 filled in at the origin.

    Below ``|x| < 1e-4`` the two-term Taylor series ``1 - x**2/6`` is used;
    the dropped ``x**4/120`` term is under 1e-18 there. Works for real and
    complex input, scalar or array.
    """
    arr = np.asarray(x)
    if not np.all(np.isfinite(arr)):
        raise DomainError("sinc_safe: non-finite input")
    small = np.abs(arr) < SINC_CROSSOVER
    safe = np.where(small, 1.0, arr)
    out = np.where(small, 1.0 - arr * arr / 6.0, np.sin(safe) / safe)
    if out.ndim == 0:
        return out.item()
    return out


# ---------------------------------------------------------------------------
# supports and sampled spectra


@dataclass(frozen=True)
class BandSupport:
    """Axis-aligned spectral box plus the radius of an origin-centred ball
    containing the support.

    ``ball_radius`` is the enclosing radius of the box unless a tighter
    ``radius_bound`` is known (e.g. after a rotation the box is only a
    bounding box of the true support).
    """

    box: tuple
    radius_bound: Optional[float] = None

    def __post_init__(self):
        box = tuple((float(lo), float(hi)) for lo, hi in self.box)
        if not box:
            raise DimensionError("BandSupport needs at least one axis")
        for lo, hi in box:
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise DomainError("support bounds must be finite")
            if lo > hi:
                raise DomainError(f"empty support interval [{lo}, {hi}]")
        object.__setattr__(self, "box", box)
        if self.radius_bound is not None:
            rb = float(self.radius_bound)
            if rb < 0 or not math.isfinite(rb):
                raise DomainError("radius_bound must be a nonnegative finite number")
            object.__setattr__(self, "radius_bound", rb)

    @property
    def dim(self) -> int:
        return len(self.box)

    @property
    def lower(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.box])

    @property
    def upper(self) -> np.ndarray:
        return np.array([hi for _, hi in self.box])

    @property
    def box_radius(self) -> float:
        return math.sqrt(sum(max(lo * lo, hi * hi) for lo, hi in self.box))

    @property
    def ball_radius(self) -> float:
        r = self.box_radius
        if self.radius_bound is not None:
            r = min(r, self.radius_bound)
        return r

    @property
    def volume(self) -> float:
        return float(np.prod(self.upper - self.lower))


@dataclass(frozen=True)
class Pullback:
    """Records that a density equals ``scale * origin(matrix @ u) * exp(i (phase, u))``.

    Chained affine transforms compose these records so that resampling always
    interpolates the original grid, never an already-interpolated one.
    """

    origin: "SpectralDensity"
    matrix: np.ndarray
    phase: np.ndarray
    scale: float


def trapezoid_weights(lo: float, hi: float, count: int) -> np.ndarray:
    if count == 1:
        return np.ones(1)
    h = (hi - lo) / (count - 1)
    w = np.full(count, h)
    w[0] = w[-1] = h / 2
    return w


@dataclass(frozen=True, eq=False)
class SpectralDensity:
    """Complex density sampled on a uniform tensor grid spanning ``support.box``.

    ``values`` has shape ``counts`` (row-major, first axis = first coordinate).
    Integrals use the tensor trapezoid rule.
    """

    support: BandSupport
    values: np.ndarray
    pullback: Optional[Pullback] = field(default=None, repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.ndim != self.support.dim:
            raise DimensionError(
                f"values have {values.ndim} axes but support has {self.support.dim}"
            )
        for (lo, hi), c in zip(self.support.box, values.shape):
            if c < 1 or (c == 1) != (lo == hi):
                raise DomainError("grid must cover the support box with >= 2 nodes per nondegenerate axis")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_function(cls, support: BandSupport, func: Callable, per_unit=None,
                      counts=None, max_nodes: int = MAX_GRID_NODES) -> "SpectralDensity":
        """Sample ``func`` (maps (P, n) nodes to (P,) values) on a grid over ``support``.

        ``per_unit`` is the number of intervals per unit length on every axis;
        ``counts`` overrides it with explicit node counts.
        """
        if counts is None:
            per_unit = per_unit or default_per_unit(support.dim)
            counts = tuple(
                1 if hi == lo else int(round((hi - lo) * per_unit)) + 1 for lo, hi in support.box
            )
        counts = tuple(int(c) for c in counts)
        check_budget(counts, max_nodes)
        axes = [np.linspace(lo, hi, c) for (lo, hi), c in zip(support.box, counts)]
        nodes = _mesh(axes)
        vals = np.asarray(func(nodes), dtype=complex).reshape(counts)
        return cls(support, vals)

    @property
    def dim(self) -> int:
        return self.support.dim

    @property
    def counts(self) -> tuple:
        return self.values.shape

    @cached_property
    def axes(self) -> list:
        return [np.linspace(lo, hi, c) for (lo, hi), c in zip(self.support.box, self.counts)]

    @property
    def spacing(self) -> np.ndarray:
        return np.array([
            (hi - lo) / (c - 1) if c > 1 else 0.0 for (lo, hi), c in zip(self.support.box, self.counts)
        ])

    @cached_property
    def axis_weights(self) -> list:
        return [trapezoid_weights(lo, hi, c) for (lo, hi), c in zip(self.support.box, self.counts)]

    @property
    def weights(self) -> np.ndarray:
        w = self.axis_weights[0]
        for ws in self.axis_weights[1:]:
            w = np.multiply.outer(w, ws)
        return w

    def nodes(self) -> np.ndarray:
        return _mesh(self.axes)

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(self.weights * np.abs(self.values) ** 2)))

    def l1_norm(self) -> float:
        return float(np.sum(self.weights * np.abs(self.values)))

    def integral(self) -> complex:
        return complex(np.sum(self.weights * self.values))

    def interpolate(self, points) -> np.ndarray:
        """Multilinear interpolation at ``points`` (P, n); zero outside the box.

        Points within 1e-9 grid spacings of the box are clipped onto it so that
        round-off does not drop boundary nodes.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        lo, hi = self.support.lower, self.support.upper
        slack = 1e-9 * np.maximum(self.spacing, 1e-300)
        near = (pts >= lo - slack) & (pts <= hi + slack)
        pts = np.where(near, np.clip(pts, lo, hi), pts)
        if any(c == 1 for c in self.counts):
            raise UnsupportedRepresentationError("cannot interpolate on a degenerate axis")
        interp = RegularGridInterpolator(
            tuple(self.axes), self.values, method="linear", bounds_error=False, fill_value=0.0
        )
        return interp(pts)

    def evaluate(self, t) -> np.ndarray:
        """Trapezoid quadrature of ``g(u) exp(i (u, t))`` at points ``t`` of shape (P, n).

        ``t`` may be complex (entire extension).
        """
        return _tensor_quadrature(self.values, self.axes, self.axis_weights, t)

    def quadrature_error(self, t) -> np.ndarray:
        """Richardson estimate ``|I_h - I_2h| / 3`` of the trapezoid error at ``t``.

        The trapezoid error is O(h^2 (1 + |t|^2)) for smooth spectra. Needs an odd
        node count on every axis; returns NaN otherwise.
        """
        t = np.atleast_2d(t)
        if any(c < 3 or c % 2 == 0 for c in self.counts):
            return np.full(t.shape[0], np.nan)
        fine = self.evaluate(t)
        sub = tuple(slice(None, None, 2) for _ in self.counts)
        axes = [a[::2] for a in self.axes]
        weights = [trapezoid_weights(a[0], a[-1], len(a)) for a in axes]
        coarse = _tensor_quadrature(self.values[sub], axes, weights, t)
        return np.abs(fine - coarse) / 3.0


def default_per_unit(dim: int) -> int:
    return DEFAULT_PER_UNIT.get(dim, 16)


def check_budget(counts, max_nodes=MAX_GRID_NODES):
    total = int(np.prod([int(c) for c in counts], dtype=object))
    if total > max_nodes:
        raise ResourceError(f"grid of {total} nodes exceeds the budget of {max_nodes}")
    return total


def _mesh(axes) -> np.ndarray:
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


def _tensor_quadrature(values, axes, axis_weights, t) -> np.ndarray:
    t = np.atleast_2d(np.asarray(t))
    n = values.ndim
    if t.shape[1] != n:
        raise DimensionError(f"points have dimension {t.shape[1]}, density has {n}")
    npts = t.shape[0]
    out = np.empty(npts, dtype=complex)
    lead = int(np.prod(values.shape[:-1])) if n > 1 else 1
    chunk = max(1, _CHUNK_ELEMENTS // max(lead, max(values.shape)))
    for start in range(0, npts, chunk):
        tt = t[start:start + chunk]
        kern = axis_weights[-1][None, :] * np.exp(1j * tt[:, -1, None] * axes[-1][None, :])
        acc = np.tensordot(values, kern, axes=([-1], [1]))
        for s in range(n - 2, -1, -1):
            kern = axis_weights[s][None, :] * np.exp(1j * tt[:, s, None] * axes[s][None, :])
            acc = np.einsum("...ip,pi->...p", acc, kern)
        out[start:start + chunk] = acc
    return out


# ---------------------------------------------------------------------------
# catalog


_KINDS = ("K", "P", "Q", "F")
_INDEXED = ("P", "Q")

# per-axis factor: box = 1 on [-1, 1], tri = max(1 - |u|/2, 0), step = 1 on [0, 2]
_FACTOR_BOX = {"box": (-1.0, 1.0), "tri": (-2.0, 2.0), "step": (0.0, 2.0)}
_FACTOR_SQNORM = {"box": 2.0, "tri": 4.0 / 3.0, "step": 2.0}


@dataclass(frozen=True)
class CatalogSpec:
    """Closed-form catalog member.

    kinds: ``K`` (box spectrum), ``P`` (triangle on axis j), ``Q`` (box shifted
    to [0, 2] on axis j), ``F`` (triangle on every axis). ``shift`` translates
    the signal in time, ``t -> f(t - shift)``.
    """

    kind: str
    dim: int
    j: Optional[int] = None
    shift: tuple = ()

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise DomainError(f"unknown catalog kind {self.kind!r}; expected one of {_KINDS}")
        if int(self.dim) < 1:
            raise DimensionError("catalog dimension must be >= 1")
        if self.kind in _INDEXED:
            if self.j is None or not (1 <= int(self.j) <= self.dim):
                raise CatalogIndexError(f"axis index j={self.j} out of range 1..{self.dim}")
        elif self.j is not None:
            raise CatalogIndexError(f"catalog kind {self.kind} takes no axis index")
        shift = tuple(float(c) for c in self.shift) if len(self.shift) else (0.0,) * self.dim
        if len(shift) != self.dim:
            raise DimensionError("shift length must equal the dimension")
        object.__setattr__(self, "shift", shift)

    def factors(self) -> list:
        if self.kind == "K":
            return ["box"] * self.dim
        if self.kind == "F":
            return ["tri"] * self.dim
        special = "tri" if self.kind == "P" else "step"
        return [special if s == self.j - 1 else "box" for s in range(self.dim)]

    @property
    def label(self) -> str:
        return self.kind if self.j is None else f"{self.kind}_{self.j}"


def make_catalog(n: int, kind: str, j: Optional[int] = None, shift=None) -> "PWSignal":
    """Build catalog signal ``kind`` in dimension ``n`` (axis ``j`` is 1-based)."""
    kind = kind.upper()
    spec = CatalogSpec(kind, int(n), None if j is None else int(j), tuple(shift) if shift is not None else ())
    return PWSignal(dim=spec.dim, catalog=spec)


def _closed_factor(name, x):
    s = sinc_safe(x)
    if name == "box":
        return 2.0 * s
    if name == "tri":
        return 2.0 * s * s
    return np.exp(1j * x) * 2.0 * s


def _spectrum_factor(name, u):
    if name == "tri":
        return np.maximum(1.0 - np.abs(u) / 2.0, 0.0)
    lo, hi = _FACTOR_BOX[name]
    return ((u >= lo) & (u <= hi)).astype(float)


def catalog_closed_form(spec: CatalogSpec, t) -> np.ndarray:
    """Closed form at points ``t`` of shape (P, n); entire, so complex ``t`` is fine."""
    t = np.atleast_2d(t) - np.asarray(spec.shift)
    out = np.ones(t.shape[0], dtype=complex)
    for s, name in enumerate(spec.factors()):
        out = out * _closed_factor(name, t[:, s])
    return out


def catalog_spectrum(spec: CatalogSpec, u) -> np.ndarray:
    u = np.atleast_2d(u)
    out = np.ones(u.shape[0], dtype=complex)
    for s, name in enumerate(spec.factors()):
        out = out * _spectrum_factor(name, u[:, s])
    if any(spec.shift):
        out = out * np.exp(-1j * (u @ np.asarray(spec.shift)))
    return out


def catalog_support(spec: CatalogSpec) -> BandSupport:
    return BandSupport(tuple(_FACTOR_BOX[name] for name in spec.factors()))


def catalog_closed_form_string(spec: CatalogSpec) -> str:
    names = ["t"] if spec.dim == 1 else [f"t{s + 1}" for s in range(spec.dim)]
    if any(spec.shift):
        names = [f"({v} - {c:g})" if c else v for v, c in zip(names, spec.shift)]
    parts = []
    for v, name in zip(names, spec.factors()):
        if name == "box":
            parts.append(f"2 sin {v} / {v}")
        elif name == "tri":
            parts.append(f"2 sin^2 {v} / {v}^2")
        else:
            parts.append(f"e^(i {v}) 2 sin {v} / {v}")
    return " * ".join(parts)


# ---------------------------------------------------------------------------
# signals


@dataclass(frozen=True, eq=False)
class PWSignal:
    """A bandlimited function on R^dim, given by a catalog closed form or a
    sampled spectral density (or both, after conversion)."""

    dim: int
    catalog: Optional[CatalogSpec] = None
    spectral: Optional[SpectralDensity] = None

    def __post_init__(self):
        if self.catalog is None and self.spectral is None:
            raise UnsupportedRepresentationError("PWSignal needs a catalog or spectral representation")
        for rep in (self.catalog, self.spectral):
            if rep is not None and rep.dim != self.dim:
                raise DimensionError("representation dimension does not match signal dimension")

    @classmethod
    def from_density(cls, density: SpectralDensity) -> "PWSignal":
        return cls(dim=density.dim, spectral=density)

    @property
    def support(self) -> BandSupport:
        if self.catalog is not None:
            return catalog_support(self.catalog)
        return self.spectral.support

    @property
    def band_radius(self) -> float:
        return self.support.ball_radius

    def spectral_rep(self, per_unit=None, max_nodes: int = MAX_GRID_NODES) -> SpectralDensity:
        """Sampled spectrum; catalog signals are sampled with nodes on every
        breakpoint (integer per_unit keeps -2, -1, 0, 1, 2 on the grid)."""
        if self.spectral is not None and per_unit is None:
            return self.spectral
        if self.catalog is None:
            raise UnsupportedRepresentationError("cannot resample a grid-only density")
        spec = self.catalog
        return SpectralDensity.from_function(
            catalog_support(spec), lambda u: catalog_spectrum(spec, u), per_unit=per_unit,
            max_nodes=max_nodes,
        )

    def with_spectral(self, per_unit=None) -> "PWSignal":
        return PWSignal(self.dim, self.catalog, self.spectral_rep(per_unit))

    def spectrum_l2_norm(self) -> float:
        """``||fhat||_2``; exact for catalog signals, discrete otherwise."""
        if self.catalog is not None:
            return math.sqrt(math.prod(_FACTOR_SQNORM[f] for f in self.catalog.factors()))
        return self.spectral.l2_norm()

    def closed_form(self) -> Optional[str]:
        return None if self.catalog is None else catalog_closed_form_string(self.catalog)

    def __call__(self, t):
        return eval_pw(self, t)


def _as_points(dim: int, t):
    """Normalise ``t`` to (P, dim) and remember how to shape the output."""
    arr = np.asarray(t)
    if not np.all(np.isfinite(arr)):
        raise DomainError("evaluation point is not finite")
    if arr.ndim == 0:
        if dim != 1:
            raise DimensionError(f"scalar point given for a {dim}-dimensional signal")
        return arr.reshape(1, 1), True
    if arr.ndim == 1:
        if dim == 1:
            return arr.reshape(-1, 1), False
        if arr.shape[0] != dim:
            raise DimensionError(f"point of length {arr.shape[0]} for a {dim}-dimensional signal")
        return arr.reshape(1, dim), True
    if arr.ndim == 2 and arr.shape[1] == dim:
        return arr, False
    raise DimensionError(f"points of shape {arr.shape} for a {dim}-dimensional signal")


def _evaluate(f: PWSignal, pts) -> np.ndarray:
    if f.catalog is not None:
        return catalog_closed_form(f.catalog, pts)
    return f.spectral.evaluate(pts)


def eval_pw(f: PWSignal, t):
    """Evaluate ``f`` at real points.

    ``t`` is a point of length n (returns a complex scalar) or an array of
    shape (P, n) (returns shape (P,)). For 1-D signals a flat array of P
    abscissas is accepted. Catalog signals use their closed form; spectral
    signals use trapezoid quadrature, see :func:`eval_pw_with_error`.
    """
    pts, scalar = _as_points(f.dim, t)
    out = _evaluate(f, pts)
    return complex(out[0]) if scalar else out


def eval_pw_with_error(f: PWSignal, t):
    """Like :func:`eval_pw` but also returns a per-point quadrature error estimate
    (zero for closed forms)."""
    pts, scalar = _as_points(f.dim, t)
    val = _evaluate(f, pts)
    err = np.zeros(len(pts)) if f.catalog is not None else f.spectral.quadrature_error(pts)
    if scalar:
        return complex(val[0]), float(err[0])
    return val, err


def eval_pw_complex_on_line(f: PWSignal, a, b, z):
    """Entire extension ``F(z)`` of ``x -> f(a + x b)`` at complex ``z``.

    Equivalent to evaluating the spectral integral at the complex point
    ``a + z b``. Catalog closed forms are entire and are used directly.
    """
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    if a.shape != (f.dim,) or b.shape != (f.dim,):
        raise DimensionError("line anchor and direction must have the signal's dimension")
    zz = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(zz)):
        raise DomainError("z must be finite")
    pts = a[None, :] + zz.reshape(-1, 1) * b[None, :]
    out = _evaluate(f, pts)
    return complex(out[0]) if zz.ndim == 0 else out.reshape(zz.shape)


# ---------------------------------------------------------------------------
# catalog identities


def _identity_sides(t, j: int, which: str):
    t = np.asarray(t, dtype=float)
    single = t.ndim <= 1
    t = np.atleast_2d(t.reshape(1, -1) if single else t)
    n = t.shape[1]
    if not 1 <= j <= n:
        raise CatalogIndexError(f"j={j} out of range 1..{n}")
    if not np.all(np.isfinite(t)):
        raise DomainError("identity_residual: non-finite point")
    if which not in ("modulation", "quadratic"):
        raise DomainError(f"unknown identity {which!r}")
    K = catalog_closed_form(CatalogSpec("K", n), t)
    Q = catalog_closed_form(CatalogSpec("Q", n, j), t)
    if which == "modulation":
        lhs, rhs = Q, np.exp(1j * t[:, j - 1]) * K
    else:
        P = catalog_closed_form(CatalogSpec("P", n, j), t)
        lhs, rhs = 2j * P * Q * t[:, j - 1], Q * Q - K * K
    return single, lhs, rhs


def identity_residual(t, j: int, which: str):
    """Residual ``|LHS - RHS|`` of one of the exact catalog identities at ``t``.

    which="modulation":  Q_j(t) = exp(i t_j) K(t)
    which="quadratic":   2i P_j(t) Q_j(t) t_j = Q_j(t)^2 - K(t)^2

    Both sides come from the closed forms. ``t`` is one point (float result)
    or a (P, n) batch (array result).
    """
    single, lhs, rhs = _identity_sides(t, j, which)
    res = np.abs(lhs - rhs)
    return float(res[0]) if single else res


def identity_lhs(t, j: int, which: str):
    single, lhs, _ = _identity_sides(t, j, which)
    return complex(lhs[0]) if single else lhs


def ball_volume(dim: int, r: float) -> float:
    """Volume of the Euclidean ball of radius ``r`` in R^dim (1 for dim 0)."""
    return math.pi ** (dim / 2) * r**dim / math.gamma(dim / 2 + 1)
