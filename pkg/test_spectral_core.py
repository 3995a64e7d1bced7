"""
Tests for the Fourier representation and multiplier operators.
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose
from pydantic import ValidationError

from conftest import commutator_oracle, few_mode_corpus
from errors import ConfigError, DomainError, UsageError
from spectral_core import (
    FourierGrid,
    SpectralField,
    commutator_h,
    dealias,
    deriv,
    hilbert,
    inverse_helmholtz,
    inverse_lambda,
    lambda_pow,
    make_grid,
    product,
    random_field,
)


def sin_field(grid, k=1, amplitude=1.0):
    return SpectralField.from_physical(grid, amplitude * np.sin(k * grid.points))


def cos_field(grid, k=1, amplitude=1.0):
    return SpectralField.from_physical(grid, amplitude * np.cos(k * grid.points))


class TestFourierGrid:
    def test_power_of_two_required(self):
        with pytest.raises(ValidationError):
            FourierGrid(n_points=100)
        with pytest.raises(ConfigError) as info:
            make_grid(100)
        assert info.value.field == "n_points"

    def test_too_small(self):
        with pytest.raises(ConfigError):
            make_grid(4)

    def test_ladder_and_points(self):
        grid = make_grid(16)
        assert grid.index[:3].tolist() == [0, 1, 2]
        assert grid.index[8] == -8
        assert grid.points[0] == pytest.approx(-np.pi)
        assert grid.band_limit == 5
        assert grid.dealias_keep.sum() == 11

    def test_immutable(self):
        grid = make_grid(16)
        with pytest.raises(ValidationError):
            grid.n_points = 32

    def test_custom_period(self):
        grid = make_grid(32, period=4 * np.pi)
        f = SpectralField.from_physical(grid, np.sin(grid.points / 2))
        assert_allclose(deriv(f).values, 0.5 * np.cos(grid.points / 2), atol=1e-13)


class TestSpectralField:
    def test_coefficient_convention(self, grid64):
        f = cos_field(grid64)
        assert f.coefficients[1] == pytest.approx(0.5)
        assert f.coefficients[-1] == pytest.approx(0.5)
        assert f.mean == pytest.approx(0.0, abs=1e-15)

    def test_from_terms_matches_samples(self, grid64):
        f = SpectralField.from_terms(grid64, [("sine", 3, 2.0), ("cosine", 0, 0.5), ("cosine", 2, -1.0)])
        x = grid64.points
        assert_allclose(f.values, 2 * np.sin(3 * x) + 0.5 - np.cos(2 * x), atol=1e-13)

    def test_from_terms_rejects_bad_terms(self, grid64):
        with pytest.raises(ConfigError):
            SpectralField.from_terms(grid64, [("sine", 32, 1.0)])
        with pytest.raises(ConfigError):
            SpectralField.from_terms(grid64, [("tangent", 1, 1.0)])

    def test_non_hermitian_is_not_real(self, grid64):
        c = np.zeros(64, dtype=complex)
        c[1] = 1.0
        assert not SpectralField(grid64, c).is_real()
        c[-1] = 1.0
        assert SpectralField(grid64, c).is_real()

    def test_grid_mismatch(self, grid64, grid256):
        with pytest.raises(UsageError):
            sin_field(grid64) + sin_field(grid256)

    def test_support_radius(self, grid64):
        f = SpectralField.from_terms(grid64, [("sine", 1, 1.0), ("cosine", 7, 1e-3)])
        assert f.support_radius() == 7
        assert SpectralField.zeros(grid64).support_radius() == 0

    def test_random_field(self, grid64):
        a = random_field(grid64, 8, seed=3)
        b = random_field(grid64, 8, seed=3)
        assert np.array_equal(a.coefficients, b.coefficients)
        assert a.is_real()
        assert a.mean == 0.0
        assert a.support_radius() == 8
        with pytest.raises(ConfigError):
            random_field(grid64, 30)


class TestOperators:
    def test_hilbert_of_sine(self, grid256):
        assert_allclose(hilbert(sin_field(grid256)).values, -np.cos(grid256.points), atol=1e-12)

    def test_hilbert_of_cosine_and_constant(self, grid256):
        assert_allclose(hilbert(cos_field(grid256)).values, np.sin(grid256.points), atol=1e-12)
        one = SpectralField.from_terms(grid256, [("cosine", 0, 1.0)])
        assert np.all(hilbert(one).coefficients == 0)

    @pytest.mark.parametrize("seed", range(5))
    def test_hilbert_is_skew_and_lambda_symmetric(self, grid64, seed):
        f = random_field(grid64, 12, seed=seed, mean_zero=False)
        g = random_field(grid64, 12, seed=50 + seed, mean_zero=False)
        h = grid64.spacing

        def pairing(a, b):
            return np.sum(a.values * b.values) * h

        skew = pairing(f, hilbert(g)) + pairing(g, hilbert(f))
        assert abs(skew) < 1e-11 * (1 + np.sum(np.abs(f.values * hilbert(g).values)) * h)
        sym = pairing(f, lambda_pow(g, 1)) - pairing(g, lambda_pow(f, 1))
        assert abs(sym) < 1e-11 * (1 + np.sum(np.abs(f.values * lambda_pow(g, 1).values)) * h)

    def test_hilbert_squared_is_minus_identity(self, grid256):
        f = random_field(grid256, 40, seed=1)
        assert_allclose(hilbert(hilbert(f)).values, -f.values, atol=1e-12)

    def test_lambda_is_hilbert_of_derivative(self, grid256):
        f = random_field(grid256, 40, seed=2)
        assert_allclose(lambda_pow(f, 1).values, hilbert(deriv(f)).values, atol=1e-12)

    def test_lambda_power_validation(self, grid64):
        with pytest.raises(DomainError):
            lambda_pow(sin_field(grid64), -0.5)

    def test_inverse_lambda(self, grid64):
        f = random_field(grid64, 10, seed=4)
        assert_allclose(inverse_lambda(lambda_pow(f, 1)).coefficients, f.coefficients, atol=1e-14)
        with pytest.raises(DomainError):
            inverse_lambda(f + SpectralField.from_terms(grid64, [("cosine", 0, 1.0)]))

    def test_derivatives(self, grid64):
        f = sin_field(grid64, 3)
        assert_allclose(deriv(f).values, 3 * np.cos(3 * grid64.points), atol=1e-12)
        assert_allclose(deriv(f, 2).values, -9 * np.sin(3 * grid64.points), atol=1e-11)
        with pytest.raises(UsageError):
            deriv(f, 0)

    def test_inverse_helmholtz(self, grid64):
        f = cos_field(grid64, 2)
        assert_allclose(inverse_helmholtz(f, 2.0, 1.0).values, np.cos(2 * grid64.points) / 4, atol=1e-14)
        with pytest.raises(ConfigError):
            inverse_helmholtz(f, 0.0, 1.0)
        with pytest.raises(ConfigError):
            inverse_helmholtz(f, 1.0, -1.0)

    def test_nyquist_mode_removed(self, grid64):
        x = grid64.points
        f = SpectralField.from_physical(grid64, np.cos(32 * x))
        assert np.max(np.abs(dealias(f).coefficients)) < 1e-14
        assert np.max(np.abs(hilbert(f).coefficients)) < 1e-14

    def test_dealiased_product_has_no_spurious_modes(self, grid64):
        k = grid64.band_limit
        f = cos_field(grid64, k)
        p = product(f, f)
        expected = np.zeros(64, dtype=complex)
        expected[0] = 0.5
        assert_allclose(p.coefficients, expected, atol=1e-14)

    def test_product_of_low_modes_is_exact(self, grid64):
        x = grid64.points
        p = product(sin_field(grid64, 2), cos_field(grid64, 3))
        assert_allclose(p.values, np.sin(2 * x) * np.cos(3 * x), atol=1e-13)

    def test_commutator_example(self, grid64):
        c = commutator_h(cos_field(grid64), sin_field(grid64))
        assert_allclose(c.values, 0.5, atol=1e-13)

    def test_commutator_matches_convolution_oracle(self, grid64):
        corpus = few_mode_corpus(grid64)
        for f in corpus:
            for g in corpus[:4]:
                expected = commutator_oracle(f, g)
                assert_allclose(commutator_h(f, g).coefficients, expected.coefficients, atol=1e-11)
