import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import null_space_2x2_elimination, random_injective, random_invertible
from pwkit.affine import (
    cauchy_constant,
    complete_to_invertible,
    compose_affine,
    kernel_basis,
    project_spectrum,
    projection_l2_bound,
    spectral_transform_invertible,
)
from pwkit.errors import DimensionError, NotInjectiveError, SingularMatrixError
from pwkit.pwcore import (
    BandSupport,
    PWSignal,
    SpectralDensity,
    ball_volume,
    eval_pw,
    eval_pw_with_error,
    make_catalog,
)
from pwkit.spectra import (
    SampleGrid,
    bandwidth_estimate,
    density_estimate,
    dft_spectrum,
    sample_on_grid,
)


def unit_box(n=1, per_unit=None):
    sup = BandSupport(((-1.0, 1.0),) * n)
    return SpectralDensity.from_function(sup, lambda u: np.ones(len(u)), per_unit=per_unit)


# --- kernel_basis -----------------------------------------------------------


def test_kernel_of_identity_is_empty():
    assert kernel_basis(np.eye(2)).shape == (0, 2)


def test_kernel_of_row_vector_matches_elimination():
    v = kernel_basis([[1.0, 1.0]])
    assert v.shape == (1, 2)
    oracle = null_space_2x2_elimination([1.0, 1.0])
    assert abs(abs(v[0] @ oracle) - 1) < 1e-14


def test_kernel_of_zero_map_spans_everything():
    v = kernel_basis(np.zeros((2, 2)))
    assert v.shape == (2, 2)
    np.testing.assert_allclose(v @ v.T, np.eye(2), atol=1e-14)


@settings(max_examples=80, deadline=None)
@given(st.integers(1, 5), st.integers(1, 5), st.data())
def test_kernel_rank_nullity(n, m, data):
    rank = data.draw(st.integers(0, min(n, m)))
    seed = data.draw(st.integers(0, 2**31))
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, rank)) @ rng.standard_normal((rank, m))
    K = kernel_basis(A)
    assert len(K) == m - rank
    if len(K):
        np.testing.assert_allclose(K @ K.T, np.eye(len(K)), atol=1e-12)
        norm = np.linalg.norm(A, 2)
        assert np.all(np.linalg.norm(K @ A.T, axis=1) <= 1e-10 * max(norm, 1.0))


# --- spectral_transform_invertible ------------------------------------------


def test_identity_transform_leaves_spectrum_unchanged():
    d = make_catalog(2, "P", 1).spectral_rep(32)
    out = spectral_transform_invertible(d, np.eye(2))
    assert out.counts == d.counts
    np.testing.assert_allclose(out.values, d.values, atol=1e-15)


def test_scale_two_halves_magnitude_and_doubles_support():
    out = spectral_transform_invertible(unit_box(1, 256), [[2.0]])
    assert out.support.box == ((-2.0, 2.0),)
    np.testing.assert_allclose(np.abs(out.values), 0.5, atol=1e-14)


def test_scale_two_against_dft_of_samples():
    # oracle: Riemann-sum Fourier transform of t -> 2 sin(2t)/(2t) sampled densely
    grid = SampleGrid(256 * math.pi, 2**15)
    f = make_catalog(1, "K")
    samples = sample_on_grid(lambda t: eval_pw(f, 2 * t), grid)
    (u,), est = density_estimate(samples, grid)
    out = spectral_transform_invertible(unit_box(1, 256), [[2.0]])
    inner = np.abs(u) < 1.8
    model = out.interpolate(u[inner][:, None])
    rel = np.abs(np.abs(est[inner]) - np.abs(model)) / np.abs(model)
    assert np.median(rel) < 1e-2
    assert np.max(np.abs(est[np.abs(u) > 2.5])) < 0.01


def test_translation_changes_phase_only():
    d = make_catalog(2, "K").spectral_rep(32)
    out = spectral_transform_invertible(d, np.eye(2), [0.7, -2.0])
    np.testing.assert_allclose(np.abs(out.values), np.abs(d.values), atol=1e-14)
    u = out.nodes()
    np.testing.assert_allclose(out.values.ravel(), np.exp(1j * u @ [0.7, -2.0]) * d.values.ravel(), atol=1e-13)


def test_singular_matrix_rejected_with_determinant():
    with pytest.raises(SingularMatrixError) as exc:
        spectral_transform_invertible(unit_box(2, 16), [[1.0, 1.0], [1.0, 1.0]])
    assert exc.value.det == 0


def test_transform_dimension_mismatch():
    with pytest.raises(DimensionError):
        spectral_transform_invertible(unit_box(1, 16), np.eye(2))


def test_transformed_spectrum_evaluates_warped_signal():
    rng = np.random.default_rng(3)
    f = make_catalog(2, "F")
    for _ in range(3):
        A = random_invertible(rng, 2)
        b = rng.uniform(-1, 1, 2)
        out = PWSignal.from_density(spectral_transform_invertible(f.spectral_rep(32), A, b))
        t = rng.uniform(-3, 3, (10, 2))
        np.testing.assert_allclose(eval_pw(out, t), eval_pw(f, t @ A.T + b), atol=2e-3)


def test_energy_law_twenty_random_maps():
    rng = np.random.default_rng(20)
    f = make_catalog(2, "F")
    d = f.spectral_rep(64)
    ref = d.l2_norm() ** 2
    for _ in range(20):
        A = random_invertible(rng, 2, max_cond=10)
        out = spectral_transform_invertible(d, A)
        assert out.l2_norm() ** 2 * abs(np.linalg.det(A)) == pytest.approx(ref, rel=1e-2)


def test_energy_law_from_samples_1d():
    # signal-side check: sum |f(a t)|^2 dt * |a| = sum |f(t)|^2 dt
    grid = SampleGrid(512 * math.pi, 2**16)
    f = make_catalog(1, "F")
    base = np.sum(np.abs(sample_on_grid(f, grid)) ** 2)
    for a in (0.5, 1.7, -1.3):
        warped_energy = np.sum(np.abs(sample_on_grid(lambda t: eval_pw(f, a * t), grid)) ** 2)
        assert warped_energy * abs(a) == pytest.approx(base, rel=1e-2)


@pytest.mark.parametrize("kind", ["K", "F", "P"])
def test_round_trip_is_exact(kind):
    rng = np.random.default_rng(7)
    f = make_catalog(2, kind, 1 if kind == "P" else None)
    d = f.spectral_rep(32)
    for _ in range(5):
        A = random_invertible(rng, 2)
        b = rng.uniform(-2, 2, 2)
        fwd = spectral_transform_invertible(d, A, b)
        # undo t -> A t + b with s -> A^-1 s - A^-1 b
        Ai = np.linalg.inv(A)
        back = spectral_transform_invertible(fwd, Ai, -Ai @ b)
        ref = d.values if back.counts == d.counts else d.interpolate(back.nodes()).reshape(back.counts)
        err = np.linalg.norm(back.values - ref) / np.linalg.norm(ref)
        assert err < 1e-10


# --- decomposition ----------------------------------------------------------


def test_decomposition_of_canonical_injection():
    dec = complete_to_invertible(np.eye(3, 2))
    np.testing.assert_allclose(dec.kmap, np.eye(3), atol=1e-15)
    np.testing.assert_allclose(dec.q, np.eye(2), atol=1e-15)


def test_decomposition_of_diagonal_column():
    dec = complete_to_invertible([[1.0], [1.0]])
    c = math.cos(-math.pi / 4)
    s = math.sin(-math.pi / 4)
    np.testing.assert_allclose(dec.kmap, [[c, -s], [s, c]], atol=1e-15)
    np.testing.assert_allclose(dec.q, [[math.sqrt(2)]], atol=1e-15)
    np.testing.assert_allclose(dec.reconstruct(), [[1.0], [1.0]], atol=1e-15)


def test_decomposition_rejects_kernel():
    with pytest.raises(NotInjectiveError) as exc:
        complete_to_invertible([[1.0, 1.0], [1.0, 1.0]])
    assert exc.value.kernel.shape == (1, 2)


def test_decomposition_exact_for_random_injective_maps():
    rng = np.random.default_rng(55)
    for _ in range(100):
        n = int(rng.integers(1, 6))
        m = int(rng.integers(1, n + 1))
        A = random_injective(rng, n, m)
        dec = complete_to_invertible(A)
        assert np.max(np.abs(dec.reconstruct() - A)) <= 1e-12 * np.linalg.norm(A, 2)
        np.testing.assert_allclose(dec.kmap @ dec.kmap.T, np.eye(n), atol=1e-12)
        # Kmap sends im A into the first m coordinates
        assert np.max(np.abs((dec.kmap @ A)[m:]), initial=0.0) <= 1e-12 * np.linalg.norm(A, 2)
        if n > m:
            assert np.linalg.det(dec.kmap) == pytest.approx(1.0)


def test_decomposition_is_deterministic():
    A = np.array([[1.0, 2.0], [0.0, 1.0], [3.0, -1.0]])
    a, b = complete_to_invertible(A), complete_to_invertible(A.copy())
    np.testing.assert_array_equal(a.kmap, b.kmap)
    np.testing.assert_array_equal(a.q, b.q)


# --- projection -------------------------------------------------------------


def test_projection_of_unit_square():
    g = project_spectrum(unit_box(2, 64), 1)
    assert g.support.box == ((-1.0, 1.0),)
    np.testing.assert_allclose(g.values, 2.0, atol=1e-12)
    x = np.linspace(-20, 20, 50)
    sig = PWSignal.from_density(g)
    val, err = eval_pw_with_error(sig, x)
    np.testing.assert_array_less(np.abs(val - 2 * 2 * np.sin(x) / x), 1.5 * err + 1e-12)


def test_projection_even_real_is_real():
    sup = BandSupport(((-1.0, 1.0), (-1.0, 1.0)))
    d = SpectralDensity.from_function(sup, lambda u: np.cos(u[:, 0]) * (1 + u[:, 1] ** 2), per_unit=32)
    g = project_spectrum(d, 1)
    assert np.max(np.abs(g.values.imag)) == 0


def test_projection_support_containment():
    sup = BandSupport(((-2.0, 2.0), (-2.0, 2.0)))
    r = sup.ball_radius

    def ring(u):
        return (np.abs(u[:, 0]) > 0.9 * r).astype(float)

    g = project_spectrum(SpectralDensity.from_function(sup, ring, per_unit=32), 1)
    u = g.axes[0]
    assert np.all(g.values[np.abs(u) <= 0.8 * r] == 0)


def test_projection_outside_ball_slice_is_cut():
    # radius bound 1 on a 2x2 box: corners of the box beyond the ball do not count
    sup = BandSupport(((-1.0, 1.0), (-1.0, 1.0)), radius_bound=1.0)
    d = SpectralDensity.from_function(sup, lambda u: np.ones(len(u)), per_unit=256)
    g = project_spectrum(d, 1)
    u = g.axes[0]
    np.testing.assert_allclose(g.values.real, 2 * np.sqrt(np.clip(1 - u**2, 0, None)), atol=2e-2)


def test_projection_dimension_error():
    with pytest.raises(DimensionError):
        project_spectrum(unit_box(2, 16), 2)


def test_projection_norm_bound():
    for n, m in [(2, 1), (3, 1), (3, 2)]:
        d = make_catalog(n, "F").spectral_rep(16)
        g = project_spectrum(d, m)
        assert g.l2_norm() <= projection_l2_bound(d, m) * (1 + 1e-12)
    assert cauchy_constant(1.0, 3, 1) == pytest.approx(math.sqrt(math.pi))
    assert ball_volume(3, 2.0) == pytest.approx(4 / 3 * math.pi * 8)


@pytest.mark.parametrize("n, m", [(2, 1), (3, 1), (3, 2)])
@pytest.mark.parametrize("kind", ["K", "P"])
def test_projection_consistency(n, m, kind):
    f = make_catalog(n, kind, 1 if kind == "P" else None)
    g = PWSignal.from_density(project_spectrum(f.spectral_rep(16 if n == 3 else 64), m))
    x = np.random.default_rng(n * 10 + m).uniform(-5, 5, (50, m))
    val, err = eval_pw_with_error(g, x)
    ref = eval_pw(f, np.hstack([x, np.zeros((50, n - m))]))
    # the per-point Richardson estimate can dip near sign changes of the error
    np.testing.assert_array_less(np.abs(val - ref), 3 * err + 0.05 * err.max() + 1e-10)


# --- compose_affine ---------------------------------------------------------


def test_compose_identity():
    f = make_catalog(1, "K")
    g = compose_affine(f, [[1.0]], per_unit=256)
    x = np.linspace(-10, 10, 21)
    np.testing.assert_allclose(eval_pw(g, x), eval_pw(f, x), atol=1e-4)


def test_compose_with_coordinate_injection():
    f = make_catalog(2, "K")
    g = compose_affine(f, [[1.0], [0.0]], per_unit=64)
    x = np.linspace(-10, 10, 40)
    val, err = eval_pw_with_error(g, x)
    np.testing.assert_array_less(np.abs(val - 4 * np.sin(x) / x), 1.5 * err + 1e-12)
    proj = PWSignal.from_density(project_spectrum(f.spectral_rep(64), 1))
    np.testing.assert_allclose(val, eval_pw(proj, x), atol=1e-12)


def test_compose_scale_and_shift_1d():
    f = make_catalog(1, "K")
    g = compose_affine(f, [[2.0]], [1.0])
    assert g.band_radius == pytest.approx(2.0)
    x = np.array([-3.0, 0.1, 0.7, 4.2])
    s = 2 * x + 1
    np.testing.assert_allclose(eval_pw(g, x), 2 * np.sin(s) / s, atol=1e-4)


def test_compose_rejects_non_injective():
    with pytest.raises(NotInjectiveError):
        compose_affine(make_catalog(1, "K"), [[1.0, 1.0]])


def test_compose_dimension_mismatch():
    with pytest.raises(DimensionError):
        compose_affine(make_catalog(2, "K"), [[1.0]])


def test_compose_oblique_injection_pointwise():
    rng = np.random.default_rng(9)
    f = make_catalog(3, "F")
    A = random_injective(rng, 3, 2)
    A = A / np.linalg.norm(A, 2)
    b = rng.uniform(-1, 1, 3)
    g = compose_affine(f, A, b, per_unit=16)
    assert g.band_radius <= np.linalg.norm(A, 2) * f.band_radius * (1 + 1e-12)
    t = rng.uniform(-3, 3, (20, 2))
    np.testing.assert_allclose(eval_pw(g, t), eval_pw(f, t @ A.T + b), atol=5e-3)


@pytest.mark.parametrize("A", [[[0.5]], [[1.7]], [[-1.2]], [[0.6], [0.8]], [[1.0], [-1.0]]])
def test_support_law(A):
    A = np.array(A)
    n = A.shape[0]
    f = make_catalog(n, "K")
    g = compose_affine(f, A, per_unit=128 if n == 1 else 64)
    grid = SampleGrid(64 * math.pi, 4096)
    spec = dft_spectrum(sample_on_grid(g, grid), grid, "hann")
    est = bandwidth_estimate(spec, 1e-3)
    assert est <= np.linalg.norm(A, 2) * f.band_radius * 1.05
    assert g.band_radius <= np.linalg.norm(A, 2) * f.band_radius * (1 + 1e-12)


def test_rotated_box_marginal_converges_first_order():
    # f(t, t) = K(t)^2 has spectrum 2 - |u| on [-2, 2]; total mass 4 = f(0, 0)
    f = make_catalog(2, "K")
    errs = []
    for pu in (32, 64, 128):
        d = compose_affine(f, [[1.0], [1.0]], per_unit=pu).spectral
        errs.append(abs(d.integral() - 4.0))
    for a, b in zip(errs, errs[1:]):
        assert 1.8 < a / b < 2.2
    assert errs[-1] < 0.05
