import numpy as np
import pytest

from models import Basis, SpectralField, StateVector
from resources.problems import initial_data
from resources.spectral_core import (
    apply_abs_A_power,
    apply_A,
    field_from_samples,
    field_to_samples,
    from_grid,
    grid,
    parity_leakage,
    pointwise_multiply,
    project,
    restrict_to_basis,
    scale_norm,
    sobolev_norm,
    to_grid,
)


def _periodic(values):
    return SpectralField(from_grid(values))


def test_cosine_mode_has_expected_sobolev_norms():
    x = grid(64)
    field = _periodic(np.cos(2 * x))

    assert sobolev_norm(field, 0) == pytest.approx(np.sqrt(np.pi))
    assert sobolev_norm(field, 1) == pytest.approx(2 * np.sqrt(np.pi))
    assert sobolev_norm(field, 1.5) == pytest.approx(2 ** 1.5 * np.sqrt(np.pi))


def test_constant_mode_is_weighted_by_one():
    field = _periodic(np.full(16, 3.0))
    assert sobolev_norm(field, 0) == pytest.approx(sobolev_norm(field, 4))


def test_negative_sobolev_index_is_rejected():
    with pytest.raises(ValueError):
        sobolev_norm(_periodic(np.zeros(8)), -1)


def test_grid_transforms_invert_each_other():
    values = np.exp(np.sin(grid(32)))
    assert np.allclose(to_grid(from_grid(values)).real, values)


def test_sine_field_lives_on_half_interval():
    x = grid(64, Basis.SINE)
    field = field_from_samples(np.sin(3 * x), Basis.SINE)

    assert x.size == 33
    assert sobolev_norm(field, 0) == pytest.approx(np.sqrt(np.pi / 2))
    assert np.allclose(field_to_samples(field), np.sin(3 * x), atol = 1e-12)
    assert parity_leakage(field.coeffs, Basis.SINE) < 1e-14


def test_product_of_sine_fields_is_a_cosine_field():
    x = grid(64, Basis.SINE)
    u = field_from_samples(np.sin(x), Basis.SINE)
    v = field_from_samples(np.sin(2 * x), Basis.SINE)

    product = pointwise_multiply(u, v)

    assert product.basis is Basis.COSINE
    assert np.allclose(field_to_samples(product), np.sin(x) * np.sin(2 * x), atol = 1e-12)


def test_mixing_periodic_and_sine_fields_fails():
    with pytest.raises(ValueError):
        pointwise_multiply(SpectralField(np.zeros(8)), SpectralField(np.zeros(8), Basis.SINE))


def test_restrict_to_basis_removes_the_even_part():
    coeffs = from_grid(np.cos(grid(16)) + np.sin(grid(16)))
    odd = restrict_to_basis(coeffs, Basis.SINE)
    assert np.allclose(to_grid(odd).real, np.sin(grid(16)))


def test_projections_split_the_state(smooth_data):
    low = project(smooth_data, 4, "P")
    high = project(smooth_data, 4, "Q")

    assert np.allclose((low + high).coeffs, smooth_data.coeffs)
    assert np.all(low.coeffs[:, np.abs(np.fft.fftfreq(32, 1 / 32)) > 4] == 0)
    with pytest.raises(ValueError):
        project(smooth_data, 4, "R")


def test_abs_A_power_scales_high_modes_only():
    coeffs = np.zeros((2, 16), dtype = complex)
    coeffs[:, 1] = 1.0
    coeffs[:, 3] = 1.0
    state = StateVector(coeffs, Basis.EXPONENTIAL, (1.0, 0.0))

    scaled = apply_abs_A_power(state, 2.0)

    assert np.allclose(scaled.coeffs[:, 1], 1.0)
    assert np.allclose(scaled.coeffs[:, 3], 9.0)


def test_scale_norm_shifts_the_first_wave_component():
    coeffs = np.zeros((2, 16), dtype = complex)
    coeffs[0, 2] = 1.0
    coeffs[1, 2] = 1.0
    state = StateVector(coeffs, Basis.EXPONENTIAL, (1.0, 0.0))

    # Y_1 = H^2 x H^1: weights 4 and 2 on mode 2
    assert scale_norm(state, 1.0) == pytest.approx(np.sqrt(16 + 4))


def test_apply_A_differentiates_the_wave_state(wave):
    x = grid(32)
    state = StateVector(np.stack([from_grid(np.sin(x)), from_grid(np.cos(x))]), Basis.EXPONENTIAL, (1.0, 0.0))

    image = apply_A(wave, state)

    # A(u, v) = (v, u_xx)
    assert np.allclose(to_grid(image.coeffs[0]).real, np.cos(x))
    assert np.allclose(to_grid(image.coeffs[1]).real, -np.sin(x))


def _random_real_field(rng, n_grid, band):
    # Real field with modes |k| < band only
    coeffs = from_grid(rng.standard_normal(n_grid))
    coeffs[np.abs(np.fft.fftfreq(n_grid, 1 / n_grid)) >= band] = 0.0
    return SpectralField(coeffs)


def test_parseval_on_random_band_limited_fields():
    rng = np.random.default_rng(7)
    for n_grid in (16, 64, 256):
        field = _random_real_field(rng, n_grid, n_grid // 2)
        values = field_to_samples(field)

        integral = 2 * np.pi / n_grid * np.sum(values ** 2)
        assert sobolev_norm(field, 0) ** 2 == pytest.approx(integral, rel = 1e-10)


def test_field_wavenumbers_are_in_fft_order():
    field = _periodic(np.zeros(8))

    assert field.K == 4
    assert list(field.wavenumbers) == [0, 1, 2, 3, -4, -3, -2, -1]


def test_square_of_sin_is_the_cosine_identity():
    x = grid(32)
    u = _periodic(np.sin(x))

    product = pointwise_multiply(u, u)

    assert np.allclose(product.coeffs, from_grid((1 - np.cos(2 * x)) / 2), rtol = 0, atol = 1e-14)
    assert np.allclose(pointwise_multiply(_periodic(np.ones(32)), u).coeffs, u.coeffs, rtol = 0, atol = 1e-14)


def test_h1_products_stay_bounded_by_the_factors():
    rng = np.random.default_rng(11)
    ratios = []
    for _ in range(200):
        # Band below N/4 so the product is resolved on the grid
        u = _random_real_field(rng, 64, 16)
        v = _random_real_field(rng, 64, 16)
        ratios.append(sobolev_norm(pointwise_multiply(u, v), 1) / (sobolev_norm(u, 1) * sobolev_norm(v, 1)))

    assert 0 < max(ratios) < 3


@pytest.mark.parametrize("ell", [0.5, 1.0, 2.0])
def test_high_modes_decay_with_the_smoothness(wave, nls, ell):
    for problem in (wave, nls):
        U = initial_data(problem, ell)
        for m in (1, 2, 4, 8, 16):
            assert scale_norm(project(U, m, "Q"), 0) <= m ** -ell * (1 + 1e-12)


@pytest.mark.parametrize("ell", [0.5, 1.0, 2.0])
def test_low_modes_gain_at_most_m_per_scale_step(wave, nls, ell):
    for problem in (wave, nls):
        U = initial_data(problem, ell)
        for m in (1, 2, 4, 8):
            low = project(U, m, "P")
            for k in (1, 2):
                assert scale_norm(low, ell + k) <= m ** k * scale_norm(U, ell) * (1 + 1e-12)


def test_state_splits_into_and_joins_from_components(smooth_data):
    components = smooth_data.components

    assert [component.K for component in components] == [16, 16]
    rebuilt = StateVector.from_components(components, smooth_data.offset_shifts)
    assert np.array_equal(rebuilt.coeffs, smooth_data.coeffs)
    with pytest.raises(ValueError):
        StateVector.from_components([components[0], SpectralField(np.zeros(8))], (1.0, 0.0))
