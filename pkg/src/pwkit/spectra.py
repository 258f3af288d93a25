"""Sampling on uniform grids, periodograms and out-of-band energy.

Frequencies are angular (radians per unit time) to match the spectral
variable ``u`` of :mod:`pwkit.pwcore`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.signal import get_window
from scipy.stats import qmc

from pwkit.errors import DomainError, ResourceError, UndefinedBandwidthError
from pwkit.pwcore import MAX_GRID_NODES

WINDOWS = ("none", "hann")


@dataclass(frozen=True)
class SampleGrid:
    """``nodes`` equispaced samples per axis over ``[-half_width, half_width]``
    (both ends included)."""

    half_width: float
    nodes: int
    dim: int = 1
    max_nodes: int = MAX_GRID_NODES

    def __post_init__(self):
        if not self.half_width > 0:
            raise DomainError("half_width must be positive")
        if self.nodes < 2:
            raise DomainError("need at least 2 nodes per axis")
        if self.dim < 1:
            raise DomainError("dim must be >= 1")
        if self.nodes**self.dim > self.max_nodes:
            raise ResourceError(
                f"{self.nodes}^{self.dim} samples exceed the budget of {self.max_nodes}"
            )

    @property
    def spacing(self) -> float:
        return 2 * self.half_width / (self.nodes - 1)

    @property
    def nyquist(self) -> float:
        return math.pi / self.spacing

    @property
    def resolution(self) -> float:
        return 2 * math.pi / (self.nodes * self.spacing)

    @property
    def shape(self) -> tuple:
        return (self.nodes,) * self.dim

    def axis(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.nodes)

    def points(self) -> np.ndarray:
        """All sample points, shape (nodes**dim, dim), row-major."""
        ax = self.axis()
        grids = np.meshgrid(*([ax] * self.dim), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    def frequencies(self) -> np.ndarray:
        """Centred angular frequency bins of one axis."""
        return np.fft.fftshift(np.fft.fftfreq(self.nodes, d=self.spacing)) * 2 * math.pi

    def to_dict(self) -> dict:
        return {"half_width": self.half_width, "nodes": self.nodes, "dim": self.dim}


@dataclass(frozen=True, eq=False)
class DiscreteSpectrum:
    """Periodogram on centred frequency bins; ``power`` has one axis per dimension."""

    frequencies: tuple
    power: np.ndarray
    window: str = "none"

    @property
    def dim(self) -> int:
        return len(self.frequencies)

    @property
    def total_energy(self) -> float:
        return float(self.power.sum())

    def radii(self) -> np.ndarray:
        grids = np.meshgrid(*self.frequencies, indexing="ij")
        return np.sqrt(sum(g * g for g in grids))

    def to_csv_rows(self):
        grids = np.meshgrid(*self.frequencies, indexing="ij")
        cols = [g.ravel() for g in grids] + [self.power.ravel()]
        return np.column_stack(cols)


def sample_on_grid(f: Callable, grid: SampleGrid) -> np.ndarray:
    """Evaluate ``f`` (batch callable on (P, dim) arrays) at every grid node.

    Returns a complex array of shape ``grid.shape``.
    """
    pts = grid.points()
    vals = np.asarray(f(pts), dtype=complex)
    return vals.reshape(grid.shape)


def _window(name: Optional[str], grid_shape) -> Optional[np.ndarray]:
    name = "none" if name is None else name
    if name not in WINDOWS:
        raise DomainError(f"unknown window {name!r}; expected one of {WINDOWS}")
    if name == "none":
        return None
    w = None
    for n in grid_shape:
        wa = get_window("hann", n, fftbins=True)
        w = wa if w is None else np.multiply.outer(w, wa)
    return w


def dft_spectrum(samples, grid: SampleGrid, window: Optional[str] = "hann") -> DiscreteSpectrum:
    """Periodogram ``|DFT(w x)|^2 / N`` on the centred bins of ``grid``.

    Without a window the total energy equals the sample energy (Parseval).
    The periodic Hann window puts an on-bin tone into exactly three bins.
    """
    x = np.asarray(samples, dtype=complex)
    w = _window(window, x.shape)
    if w is not None:
        x = x * w
    X = np.fft.fftshift(np.fft.fftn(x))
    power = np.abs(X) ** 2 / x.size
    freqs = tuple(grid.frequencies() for _ in range(x.ndim))
    return DiscreteSpectrum(freqs, power, "none" if window is None else window)


def density_estimate(samples, grid: SampleGrid) -> tuple:
    """Riemann-sum estimate of ``fhat(u) = (2 pi)^-n * integral of f(t) exp(-i (u, t)) dt``
    on the centred bins. Returns ``(frequencies, complex values)``."""
    x = np.asarray(samples, dtype=complex)
    X = np.fft.fftshift(np.fft.fftn(x))
    u = grid.frequencies()
    phase = np.exp(1j * u * grid.half_width)
    for s in range(x.ndim):
        shape = [1] * x.ndim
        shape[s] = -1
        X = X * phase.reshape(shape)
    X = X * (grid.spacing / (2 * math.pi)) ** x.ndim
    return tuple(u for _ in range(x.ndim)), X


def oob_energy(spec: DiscreteSpectrum, r: float) -> float:
    """Fraction of spectral energy at bins with ``|u| > r``; 0 for an empty spectrum."""
    if r < 0:
        raise DomainError("band radius must be nonnegative")
    total = spec.total_energy
    if total == 0:
        return 0.0
    return float(spec.power[spec.radii() > r].sum() / total)


def bandwidth_estimate(spec: DiscreteSpectrum, tol: float) -> float:
    """Smallest bin radius ``r`` with ``oob_energy(spec, r) <= tol``."""
    if not 0 < tol < 1:
        raise DomainError("tol must lie in (0, 1)")
    total = spec.total_energy
    if spec.power.size == 0 or total <= 0:
        raise UndefinedBandwidthError("spectrum carries no energy")
    radii = spec.radii().ravel()
    order = np.argsort(radii, kind="stable")
    rs = radii[order]
    cum = np.cumsum(spec.power.ravel()[order])
    # last index of each distinct radius: energy inside that radius, inclusive
    last = np.flatnonzero(np.r_[rs[1:] != rs[:-1], True])
    outside = (total - cum[last]) / total
    ok = np.flatnonzero(outside <= tol)
    return float(rs[last[ok[0]]])


def shell_probes(dim: int, R: float, count: int, seed: int = 0) -> np.ndarray:
    """Scrambled-Halton points in the shell ``R <= |t| <= 2R`` (deterministic per seed)."""
    sampler = qmc.Halton(d=dim + 1 if dim > 1 else 2, scramble=True, seed=seed)
    q = sampler.random(count)
    radius = R * (1.0 + q[:, 0])
    if dim == 1:
        direction = np.where(q[:, 1] < 0.5, -1.0, 1.0)[:, None]
    else:
        from scipy.special import ndtri

        g = ndtri(np.clip(q[:, 1:], 1e-12, 1 - 1e-12))
        direction = g / np.linalg.norm(g, axis=1, keepdims=True)
    return radius[:, None] * direction


def decay_sup(f: Callable, R: float, probes: int = 256, dim: int = 1,
              directions=None, seed: int = 0) -> float:
    """``max |f(t)|`` over a fixed low-discrepancy probe set with ``R <= |t| <= 2R``.

    ``directions`` (rows) adds probes at radii R, 1.5R and 2R along each given
    direction and its negative, e.g. kernel vectors of a non-injective map.
    """
    if not R > 0:
        raise DomainError("R must be positive")
    pts = shell_probes(dim, R, probes, seed)
    if directions is not None:
        d = np.atleast_2d(np.asarray(directions, dtype=float))
        d = d / np.linalg.norm(d, axis=1, keepdims=True)
        extra = [s * rad * d for rad in (R, 1.5 * R, 2 * R) for s in (1.0, -1.0)]
        pts = np.vstack([pts, *extra])
    return float(np.max(np.abs(f(pts))))
