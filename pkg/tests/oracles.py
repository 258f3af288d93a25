"""Independent reference computations shared by the test modules."""

import math

import numpy as np

from pwkit.analysis import warped
from pwkit.maps import affine
from pwkit.pwcore import catalog_spectrum, make_catalog
from pwkit.spectra import SampleGrid, density_estimate, sample_on_grid


def random_invertible(rng, n, max_cond=10.0):
    """Seeded invertible matrix with operator norm in [0.8, 1.5] (1D: |a| in [0.5, 2])."""
    if n == 1:
        return np.array([[rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 2.0)]])
    U, _ = np.linalg.qr(rng.standard_normal((n, n)))
    V, _ = np.linalg.qr(rng.standard_normal((n, n)))
    smax = rng.uniform(0.8, 1.5)
    s = np.linspace(smax, smax / rng.uniform(1.0, max_cond), n)
    return U @ np.diag(s) @ V.T


def random_injective(rng, n, m):
    while True:
        A = rng.standard_normal((n, m)) * rng.uniform(0.1, 10.0)
        s = np.linalg.svd(A, compute_uv=False)
        if s[-1] > 1e-3 * s[0]:
            return A


def null_space_2x2_elimination(row):
    """Kernel of the 1x2 matrix [p q] by hand: (q, -p) normalised."""
    p, q = row
    v = np.array([q, -p], dtype=float)
    return v / np.hypot(p, q)


def spectrum_magnitude_error(kind, n, A, b, nodes, oversample=1.25):
    """Relative L2 error between the DFT density estimate of sampled f(A t + b)
    and the change-of-variables magnitude |det A|^-1 |fhat(A^-T u)|.

    The sample spacing puts the Nyquist frequency ``oversample`` times past the
    per-axis band of the warped signal.
    """
    f = make_catalog(n, kind)
    box = np.array(f.support.box)
    band = np.abs(A.T) @ np.max(np.abs(box), axis=1)
    dt = math.pi / (oversample * band.max())
    grid = SampleGrid(dt * (nodes - 1) / 2, nodes, n)
    x = sample_on_grid(warped(f, affine(A, b)), grid)
    freqs, est = density_estimate(x, grid)
    U = np.stack([g.ravel() for g in np.meshgrid(*freqs, indexing="ij")], -1)
    M = np.linalg.inv(A).T
    true = np.abs(catalog_spectrum(f.catalog, U @ M.T)) / abs(np.linalg.det(A))
    return float(np.linalg.norm(np.abs(est).ravel() - true) / np.linalg.norm(true))
