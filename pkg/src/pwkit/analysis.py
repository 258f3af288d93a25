"""Numerical checks of when ``f o phi`` stays bandlimited.

* phase profiles: along a line ``l(x)``, ``Q_j(D(x)) / K(D(x)) = exp(i D_j(x))``
  with ``D(x) = phi(l(x)) - phi(l(0))``, so the unwrapped phase recovers
  ``phi_j o l`` and must be affine in ``x`` whenever ``f o phi`` is bandlimited
  for every ``f``;
* the exponential-type growth bound for the entire extension along a line;
* constancy of ``f(A t + b)`` along ``ker A`` (no decay at infinity);
* out-of-band energy of warped signals against a measured leakage floor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from pwkit.affine import kernel_basis
from pwkit.errors import (
    DegenerateLineError,
    DimensionError,
    DomainError,
    PreconditionError,
    ResolutionError,
    WrongRegimeError,
)
from pwkit.maps import AffineMap, AffineWarp, CoordinatePower, CoordinateSine, WarpExpr, affine
from pwkit.pwcore import (
    CatalogSpec,
    PWSignal,
    ball_volume,
    catalog_closed_form,
    eval_pw_complex_on_line,
)
from pwkit.spectra import SampleGrid, dft_spectrum, oob_energy, sample_on_grid

ZERO_GUARD = 1e-8
AFFINE_TOL = 1e-6
NONAFFINE_TOL = 1e-2
MAX_INCREMENT = math.pi / 2


@dataclass(frozen=True, eq=False)
class LineProbe:
    """Samples of the line ``x -> anchor + x * direction`` with ``|direction| = 1``."""

    anchor: np.ndarray
    direction: np.ndarray
    abscissas: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.anchor, dtype=float).reshape(-1)
        d = np.asarray(self.direction, dtype=float).reshape(-1)
        x = np.asarray(self.abscissas, dtype=float).reshape(-1)
        if a.shape != d.shape:
            raise DimensionError("anchor and direction must have the same length")
        if abs(np.linalg.norm(d) - 1.0) > 1e-12:
            raise DomainError("direction must be a unit vector; use LineProbe.through")
        if len(x) < 3 or np.any(np.diff(x) <= 0):
            raise DomainError("abscissas must be strictly increasing (at least 3)")
        for name, v in (("anchor", a), ("direction", d), ("abscissas", x)):
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @classmethod
    def through(cls, anchor, direction, abscissas) -> "LineProbe":
        d = np.asarray(direction, dtype=float).reshape(-1)
        return cls(anchor, d / np.linalg.norm(d), abscissas)

    @property
    def dim(self) -> int:
        return self.anchor.shape[0]

    def points(self) -> np.ndarray:
        return self.anchor[None, :] + self.abscissas[:, None] * self.direction[None, :]

    def to_dict(self) -> dict:
        return {
            "anchor": self.anchor.tolist(),
            "direction": self.direction.tolist(),
            "x_min": float(self.abscissas[0]),
            "x_max": float(self.abscissas[-1]),
            "samples": int(len(self.abscissas)),
        }


def random_line_probes(m: int, count: int, seed: int, half_length: float = 3.0,
                       samples: int = 601, anchor_scale: float = 2.0) -> list:
    rng = np.random.default_rng(seed)
    x = np.linspace(-half_length, half_length, samples)
    probes = []
    for _ in range(count):
        a = rng.uniform(-anchor_scale, anchor_scale, m)
        d = rng.standard_normal(m)
        probes.append(LineProbe.through(a, d, x))
    return probes


@dataclass(frozen=True, eq=False)
class PhaseProfile:
    abscissas: np.ndarray
    phase: np.ndarray
    mask: np.ndarray
    ratio: np.ndarray
    slope: float
    intercept: float
    residual: float
    run_offsets: tuple = ()

    def fitted(self) -> np.ndarray:
        return self.slope * self.abscissas + self.intercept


def _runs(keep: np.ndarray) -> list:
    idx = np.flatnonzero(keep)
    if len(idx) == 0:
        return []
    breaks = np.flatnonzero(np.diff(idx) > 1)
    starts = np.r_[0, breaks + 1]
    ends = np.r_[breaks + 1, len(idx)]
    return [idx[s:e] for s, e in zip(starts, ends)]


def _wrap(x):
    return np.angle(np.exp(1j * x))


def warp_phase_profile(warp: WarpExpr, probe: LineProbe, j: int,
                       zero_guard: float = ZERO_GUARD,
                       max_increment: float = MAX_INCREMENT) -> PhaseProfile:
    """Unwrapped phase of ``Q_j(D(x)) / K(D(x))`` along ``probe``.

    Abscissas where ``|K(D(x))| < zero_guard * K(0)`` are masked. Each unmasked
    run is unwrapped on its own; runs after the longest one are shifted by the
    multiple of 2 pi that best continues its affine fit, then one least-squares
    line is fitted to all unmasked points. ``residual`` is the max deviation.
    """
    pts = probe.points()
    base = warp.apply(probe.anchor[None, :])[0]
    delta = warp.apply(pts) - base
    n = delta.shape[1]
    if not 1 <= j <= n:
        raise DimensionError(f"axis j={j} out of range 1..{n}")
    K = catalog_closed_form(CatalogSpec("K", n), delta)
    Q = catalog_closed_form(CatalogSpec("Q", n, j), delta)
    mask = np.abs(K) < zero_guard * 2.0**n
    if mask.all():
        raise DegenerateLineError("every abscissa falls on a zero of K")
    ratio = np.where(mask, np.nan + 0j, Q / np.where(mask, 1.0, K))
    raw = np.angle(ratio)
    x = probe.abscissas

    phase = np.full(len(x), np.nan)
    runs = _runs(~mask)
    for run in runs:
        inc = _wrap(np.diff(raw[run]))
        if len(inc) and np.max(np.abs(inc)) >= max_increment:
            k = int(np.argmax(np.abs(inc)))
            raise ResolutionError(
                f"phase increment {inc[k]:.3f} rad at x={x[run[k]]:.4g} reaches the "
                f"{max_increment:.3f} rad limit; use denser abscissas"
            )
        phase[run] = raw[run[0]] + np.r_[0.0, np.cumsum(inc)]

    offsets = []
    main = max(runs, key=len)
    if len(runs) > 1 and len(main) >= 2:
        a, b = np.polyfit(x[main], phase[main], 1)
        for run in runs:
            if run is main:
                continue
            k = np.round(np.mean(a * x[run] + b - phase[run]) / (2 * math.pi))
            phase[run] += 2 * math.pi * k
            offsets.append(int(k))

    keep = ~mask
    if keep.sum() >= 2:
        slope, intercept = np.polyfit(x[keep], phase[keep], 1)
    else:
        slope, intercept = 0.0, float(phase[keep][0])
    resid = float(np.max(np.abs(phase[keep] - (slope * x[keep] + intercept))))
    return PhaseProfile(x, phase, mask, ratio, float(slope), float(intercept), resid, tuple(offsets))


@dataclass(frozen=True)
class Verdict:
    verdict: str
    max_residual: float
    witness: Optional[dict]
    residuals: tuple
    tol: float
    nonaffine_tol: float

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "max_residual": self.max_residual,
            "witness": self.witness,
            "tol": self.tol,
            "nonaffine_tol": self.nonaffine_tol,
            "residuals": [list(r) for r in self.residuals],
        }


def affinity_verdict(warp: WarpExpr, probes: Sequence[LineProbe], axes=None,
                     tol: float = AFFINE_TOL, nonaffine_tol: float = NONAFFINE_TOL,
                     **profile_kw) -> Verdict:
    """Classify ``warp`` as ``affine-consistent``, ``non-affine`` or ``inconclusive``.

    A residual above ``nonaffine_tol`` on any (probe, axis) is a witness of
    non-affinity; all residuals at most ``tol`` give ``affine-consistent``
    (evidence from finitely many lines, not a proof).
    """
    probes = list(probes)
    if not probes:
        raise PreconditionError("affinity_verdict needs at least one probe")
    n = warp.apply(probes[0].anchor[None, :]).shape[1]
    axes = range(1, n + 1) if axes is None else axes
    rows = []
    for i, probe in enumerate(probes):
        for j in axes:
            prof = warp_phase_profile(warp, probe, j, **profile_kw)
            rows.append((i, int(j), prof.residual))
    worst = max(rows, key=lambda r: r[2])
    if worst[2] > nonaffine_tol:
        verdict = "non-affine"
    elif worst[2] <= tol:
        verdict = "affine-consistent"
    else:
        verdict = "inconclusive"
    witness = {"probe": worst[0], "axis": worst[1], "residual": worst[2]}
    return Verdict(verdict, worst[2], witness, tuple(rows), tol, nonaffine_tol)


def nonaffine_catalog() -> dict:
    """Reference non-affine warps: name -> (warp, input dimension)."""
    swap = affine([[0.0, 1.0], [1.0, 0.0]])
    return {
        "cube": (CoordinatePower(1, 3), 1),
        "sine-0.3": (CoordinateSine(1, 0.3), 1),
        "sine-0.5": (CoordinateSine(1, 0.5), 1),
        "swap-square": (swap.then(CoordinatePower(2, 2)), 2),
    }


# ---------------------------------------------------------------------------
# growth along complex lines


def growth_bound(f: PWSignal, b, z) -> np.ndarray:
    """``exp(r |b| |z|) |B|^(1/2) ||fhat||_2`` with ``B`` the ball of radius r."""
    r = f.band_radius
    vol = ball_volume(f.dim, r)
    bnorm = float(np.linalg.norm(b))
    return np.exp(r * bnorm * np.abs(np.asarray(z))) * math.sqrt(vol) * f.spectrum_l2_norm()


def exp_type_bound_check(f: PWSignal, a, b, zs) -> np.ndarray:
    """Margins ``bound(z) - |F(z)|`` for the entire extension ``F`` of ``x -> f(a + x b)``."""
    zs = np.asarray(zs, dtype=complex).reshape(-1)
    F = eval_pw_complex_on_line(f, a, b, zs)
    return growth_bound(f, b, zs) - np.abs(F)


# ---------------------------------------------------------------------------
# non-injective maps


@dataclass(frozen=True)
class KernelReport:
    kernel: tuple
    value_at_b: complex
    max_deviation: float
    variance: float
    invariant: bool
    decay_violation: bool
    tail_sup: float

    def to_dict(self) -> dict:
        return {
            "kernel": [list(v) for v in self.kernel],
            "value_at_b": [self.value_at_b.real, self.value_at_b.imag],
            "max_deviation": self.max_deviation,
            "variance": self.variance,
            "invariant": self.invariant,
            "decay_violation": self.decay_violation,
            "tail_sup": self.tail_sup,
        }


def kernel_invariance_check(f: Callable, A, b, shifts, base_points=None,
                            tol: float = 1e-12, zero_tol: float = 1e-12) -> KernelReport:
    """Check that ``F(t) = f(A t + b)`` is constant along ``ker A``.

    Deviations ``|F(t + s v) - F(t)|`` are measured for every kernel vector
    ``v``, shift ``s`` and base point ``t`` (default: the origin). Since
    ``F(s v) = f(b)`` for all ``s``, ``|f(b)| > zero_tol`` means ``F`` does not
    tend to zero at infinity, which no bandlimited function on R^m allows.
    """
    A = np.array(A.A if isinstance(A, AffineMap) else A, dtype=float, ndmin=2)
    n, m = A.shape
    b = np.zeros(n) if b is None else np.asarray(b, dtype=float).reshape(n)
    ker = kernel_basis(A)
    if len(ker) == 0:
        raise WrongRegimeError("A is injective; use compose_affine for this map")
    shifts = np.asarray(shifts, dtype=float).reshape(-1)
    base = np.zeros((1, m)) if base_points is None else np.atleast_2d(base_points)

    def F(t):
        return np.asarray(f(t @ A.T + b), dtype=complex)

    devs, variances = [], []
    for t in base:
        ref = F(t[None, :])[0]
        for v in ker:
            vals = F(t[None, :] + shifts[:, None] * v[None, :])
            devs.append(np.max(np.abs(vals - ref)) if len(vals) else 0.0)
            variances.append(float(np.mean(np.abs(vals - vals.mean()) ** 2)) if len(vals) else 0.0)
    fb = complex(np.asarray(f(b[None, :]))[0])
    tail = F(np.array([s * v for v in ker for s in (1e3, -1e3, 1e6, -1e6)]))
    return KernelReport(
        kernel=tuple(tuple(float(c) for c in v) for v in ker),
        value_at_b=fb,
        max_deviation=float(max(devs)),
        variance=float(max(variances)),
        invariant=bool(max(devs) < tol),
        decay_violation=bool(abs(fb) > zero_tol),
        tail_sup=float(np.max(np.abs(tail))),
    )


# ---------------------------------------------------------------------------
# spreading under warps


def warped(f: Callable, warp) -> Callable:
    """Batch callable ``t -> f(warp(t))``."""
    if isinstance(warp, AffineMap):
        warp = AffineWarp(warp)
    return lambda t: f(warp.apply(np.atleast_2d(t)))


def oob_of(f: Callable, grid: SampleGrid, r: float, window: str = "hann") -> float:
    return oob_energy(dft_spectrum(sample_on_grid(f, grid), grid, window), r)


@dataclass(frozen=True)
class SpreadTable:
    rows: tuple
    baseline: float
    grid: dict
    window: str
    radius: float
    seed: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "grid": self.grid,
            "window": self.window,
            "radius": self.radius,
            "baseline_floor": self.baseline,
            "seed": self.seed,
            "rows": [dict(r) for r in self.rows],
        }


def nonaffine_spread(family: Callable[[float], WarpExpr], eps: Sequence[float], f: Callable,
                     grid: SampleGrid, r: float, window: str = "hann",
                     seed: Optional[int] = None) -> SpreadTable:
    """Out-of-band energy of ``f o phi_eps`` for each ``eps``.

    The ``eps = 0`` member must be affine; its out-of-band fraction is the
    leakage floor of this grid and window. Affine members are measured at the
    rescaled radius ``||A_eps|| r``, non-affine ones at ``||A_0|| r``.
    """
    eps = [float(e) for e in eps]
    if 0.0 not in eps:
        raise PreconditionError("the family must include the eps = 0 control")
    m = grid.dim
    control = family(0.0).as_affine(m)
    if control is None:
        raise PreconditionError("the eps = 0 member must be affine")
    r0 = control.op_norm * r
    baseline = oob_of(warped(f, family(0.0)), grid, r0, window)
    rows = []
    for e in eps:
        warp = family(e)
        aff = warp.as_affine(m)
        radius = aff.op_norm * r if aff is not None else r0
        oob = baseline if e == 0.0 else oob_of(warped(f, warp), grid, radius, window)
        rows.append({
            "eps": e,
            "affine": aff is not None,
            "radius": radius,
            "oob": oob,
            "ratio": oob / baseline if baseline > 0 else math.inf,
        })
    return SpreadTable(tuple(rows), baseline, grid.to_dict(), window, r, seed)


def sine_family(axis: int = 1, frequency: float = 1.0) -> Callable[[float], WarpExpr]:
    return lambda e: CoordinateSine(axis, e, frequency)


def scale_family(dim: int = 1) -> Callable[[float], WarpExpr]:
    return lambda e: affine((1.0 + e) * np.eye(dim))
