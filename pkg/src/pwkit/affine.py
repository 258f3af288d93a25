"""Affine changes of variable for bandlimited signals.

For invertible ``A`` and ``phi(t) = A t + b`` the spectrum transforms as::

    (f o phi)^(u) = |det A|^-1 * fhat(A^-T u) * exp(i (A^-T u, b))

Injective but non-square maps are reduced to that case by writing
``A = Kmap^-1 S Q`` (orthogonal ``Kmap``, canonical injection ``S``, invertible
``Q``) and marginalising the spectrum over the coordinates ``S`` drops.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from pwkit.errors import DimensionError, NotInjectiveError, SingularMatrixError
from pwkit.maps import INJECTIVITY_RTOL, AffineMap
from pwkit.pwcore import (
    MAX_GRID_NODES,
    BandSupport,
    Pullback,
    PWSignal,
    SpectralDensity,
    ball_volume,
    check_budget,
    _mesh,
)


def _canonical_sign(v: np.ndarray) -> np.ndarray:
    mag = np.abs(v)
    idx = int(np.flatnonzero(mag >= mag.max() - 1e-12)[0])
    return -v if v[idx] < 0 else v


def kernel_basis(A) -> np.ndarray:
    """Orthonormal basis of ``ker A`` as the rows of a (k, m) array.

    Singular values at or below ``1e-10 * s_max`` count as zero. Each vector is
    signed so that its largest-magnitude entry (lowest index on ties) is positive.
    """
    A = np.array(A, dtype=float, ndmin=2)
    m = A.shape[1]
    if A.size == 0:
        return np.eye(m)
    _, s, vh = np.linalg.svd(A, full_matrices=True)
    smax = s[0] if len(s) else 0.0
    rank = int(np.sum(s > INJECTIVITY_RTOL * smax)) if smax > 0 else 0
    basis = vh[rank:]
    return np.array([_canonical_sign(v) for v in basis]).reshape(-1, m)


def _as_matrix(A) -> np.ndarray:
    if isinstance(A, AffineMap):
        return np.array(A.A)
    return np.array(A, dtype=float, ndmin=2)


# ---------------------------------------------------------------------------
# invertible case


def spectral_transform_invertible(spec: SpectralDensity, A, b=None,
                                  max_nodes: int = MAX_GRID_NODES) -> SpectralDensity:
    """Spectrum of ``t -> f(A t + b)`` given the spectrum of ``f``.

    The result lives on a uniform grid over the bounding box of ``A^T box``;
    values are pulled back by multilinear interpolation of the *original*
    grid (chained transforms are composed first). The grid spacing on each
    axis is chosen so one step moves at most one source cell along every
    source axis.
    """
    A = _as_matrix(A)
    n = spec.dim
    if A.shape != (n, n):
        raise DimensionError(f"expected a {n}x{n} matrix, got {A.shape}")
    b = np.zeros(n) if b is None else np.asarray(b, dtype=float).reshape(n)
    det = float(np.linalg.det(A))
    norm = float(np.linalg.norm(A, 2))
    if not abs(det) > 1e-12 * norm**n:
        raise SingularMatrixError(det)

    M = np.linalg.inv(A).T
    if spec.pullback is None:
        origin, M0, w0, c0 = spec, np.eye(n), np.zeros(n), 1.0
    else:
        pb = spec.pullback
        origin, M0, w0, c0 = pb.origin, pb.matrix, pb.phase, pb.scale
    M_tot = M0 @ M
    w_tot = M.T @ (w0 + b)
    c_tot = c0 / abs(det)

    Minv = np.linalg.inv(M_tot)
    corners = np.array(list(itertools.product(*origin.support.box)))
    image = corners @ Minv.T
    lo = np.round(image.min(axis=0), 12)
    hi = np.round(image.max(axis=0), 12)

    h0 = origin.spacing
    counts = []
    for s in range(n):
        col = np.abs(M_tot[:, s])
        active = col > 1e-14 * max(col.max(), 1e-300)
        step = np.min(h0[active] / col[active])
        extent = hi[s] - lo[s]
        if extent == 0:
            counts.append(1)
            continue
        c = int(math.ceil(extent / step - 1e-9)) + 1
        counts.append(c + 1 if c % 2 == 0 else c)
    check_budget(counts, max_nodes)

    radius = min(
        float(np.linalg.norm(Minv, 2)) * origin.support.ball_radius,
        norm * spec.support.ball_radius,
    )
    support = BandSupport(tuple(zip(lo, hi)), radius_bound=radius)
    axes = [np.linspace(l, h, c) for l, h, c in zip(lo, hi, counts)]
    u = _mesh(axes)
    vals = c_tot * origin.interpolate(u @ M_tot.T) * np.exp(1j * (u @ w_tot))
    return SpectralDensity(
        support, vals.reshape(counts), pullback=Pullback(origin, M_tot, w_tot, c_tot)
    )


# ---------------------------------------------------------------------------
# injective, dimension-raising case


@dataclass(frozen=True, eq=False)
class InjectiveDecomposition:
    """``A = kmap^-1 @ S @ q`` where ``S`` pads R^m with n - m trailing zeros.

    ``kmap`` is orthogonal with determinant +1 when n > m and sends the column
    space of ``A`` onto the span of the first m coordinate axes.
    """

    kmap: np.ndarray
    q: np.ndarray

    @property
    def n(self) -> int:
        return self.kmap.shape[0]

    @property
    def m(self) -> int:
        return self.q.shape[0]

    def injection(self) -> np.ndarray:
        return np.eye(self.n, self.m)

    def reconstruct(self) -> np.ndarray:
        return np.linalg.solve(self.kmap, self.injection() @ self.q)

    def to_dict(self) -> dict:
        return {"n": self.n, "m": self.m, "Kmap": self.kmap.tolist(), "Q": self.q.tolist()}


def complete_to_invertible(A) -> InjectiveDecomposition:
    """Factor an injective ``A`` (n x m, n >= m) as ``Kmap^-1 S Q``.

    The columns of ``A`` are orthonormalised (QR, positive diagonal) and the
    basis is completed with coordinate axes, each time taking the axis whose
    residual against the current basis is largest (lowest index on ties).
    """
    A = _as_matrix(A)
    n, m = A.shape
    ker = kernel_basis(A)
    if len(ker) or n < m:
        raise NotInjectiveError(ker)
    U1, R = np.linalg.qr(A)
    signs = np.where(np.diag(R) < 0, -1.0, 1.0)
    U1 = U1 * signs
    cols = [U1[:, k] for k in range(m)]
    eye = np.eye(n)
    while len(cols) < n:
        B = np.column_stack(cols)
        resid = eye - B @ B.T
        norms = np.linalg.norm(resid, axis=0)
        k = int(np.flatnonzero(norms >= norms.max() - 1e-12)[0])
        v = resid[:, k]
        v = v - B @ (B.T @ v)
        cols.append(v / np.linalg.norm(v))
    U = np.column_stack(cols)
    if n > m and np.linalg.det(U) < 0:
        U[:, -1] = -U[:, -1]
    return InjectiveDecomposition(kmap=U.T, q=U1.T @ A)


def cauchy_constant(r: float, n: int, m: int) -> float:
    """``sqrt(vol of the (n-m)-ball of radius r)``: bounds ``||g||_2 / ||fhat||_2``
    for the marginal ``g`` produced by :func:`project_spectrum`."""
    return math.sqrt(ball_volume(n - m, r))


def project_spectrum(spec: SpectralDensity, m: int) -> SpectralDensity:
    """Marginal ``g(u') = integral of fhat(u', u'') du''`` over ``|u''|^2 <= r^2 - |u'|^2``.

    ``g`` is the spectrum of ``x -> f(x, 0)`` on R^m. Integration runs over the
    support box intersected with the ball slice; ``r`` is the support's ball
    radius.
    """
    n = spec.dim
    if not 1 <= m < n:
        raise DimensionError(f"target dimension must satisfy 1 <= m < n={n}, got {m}")
    r = spec.support.ball_radius
    vals = spec.values
    sq = np.zeros(spec.counts)
    for s, ax in enumerate(spec.axes):
        shape = [1] * n
        shape[s] = -1
        sq = sq + (ax**2).reshape(shape)
    vals = np.where(sq <= r * r * (1 + 1e-12), vals, 0.0)
    w2 = spec.axis_weights[m]
    for ws in spec.axis_weights[m + 1:]:
        w2 = np.multiply.outer(w2, ws)
    g = np.tensordot(vals, w2, axes=(list(range(m, n)), list(range(n - m))))
    support = BandSupport(spec.support.box[:m], radius_bound=r)
    return SpectralDensity(support, g)


def projection_l2_bound(spec: SpectralDensity, m: int) -> float:
    return cauchy_constant(spec.support.ball_radius, spec.dim, m) * spec.l2_norm()


def compose_affine(f: PWSignal, A, b=None, per_unit=None,
                   max_nodes: int = MAX_GRID_NODES) -> PWSignal:
    """``t -> f(A t + b)`` for injective ``A`` (n x m) as a spectral-grid signal.

    Square ``A`` goes straight through :func:`spectral_transform_invertible`;
    otherwise ``A = Kmap^-1 S Q`` and the spectrum is rotated, marginalised and
    transformed by ``Q``.
    """
    if isinstance(A, AffineMap) and b is None:
        b = A.b
    A = _as_matrix(A)
    n, m = A.shape
    if n != f.dim:
        raise DimensionError(f"A has {n} rows but the signal lives on R^{f.dim}")
    b = np.zeros(n) if b is None else np.asarray(b, dtype=float).reshape(n)
    ker = kernel_basis(A)
    if len(ker) or n < m:
        raise NotInjectiveError(ker)
    spec = f.spectral_rep(per_unit) if per_unit else f.spectral_rep()
    if n == m:
        out = spectral_transform_invertible(spec, A, b, max_nodes=max_nodes)
    else:
        dec = complete_to_invertible(A)
        rotated = spectral_transform_invertible(spec, np.linalg.inv(dec.kmap), b, max_nodes=max_nodes)
        marginal = project_spectrum(rotated, m)
        out = spectral_transform_invertible(marginal, dec.q, None, max_nodes=max_nodes)
    return PWSignal.from_density(out)
