"""Tests for matrix values, spectral calculus, norms and sampling."""

import math

import numpy as np
import pytest

from spdgeo.core.errors import DimensionMismatchError, DomainError
from spdgeo.core.matcore import (
    HermitianMatrix,
    ScalarMap,
    SpdMatrix,
    apply_scalar_function,
    divided_difference,
    frechet_derivative,
    geometric_mean_pair,
    hs_inner,
    pinch,
    random_hermitian,
    random_spd,
    random_unitary,
    spectral_decompose,
    spd_function,
    ui_norm,
)
from spdgeo.models.schemas import NormSpec

SWAP = np.array([[0.0, 1.0], [1.0, 0.0]])


class TestValueTypes:
    def test_rejects_non_hermitian(self):
        with pytest.raises(DomainError):
            HermitianMatrix(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_rejects_non_square(self):
        with pytest.raises(DomainError):
            HermitianMatrix(np.ones((2, 3)))

    def test_rejects_indefinite(self):
        with pytest.raises(DomainError) as excinfo:
            SpdMatrix(np.diag([1.0, -2.0]))
        assert excinfo.value.details["eigenvalue"] == pytest.approx(-2.0)

    def test_data_is_read_only(self):
        A = SpdMatrix(np.eye(2))
        with pytest.raises(ValueError):
            A.data[0, 0] = 5.0

    def test_caches_spectrum(self):
        A = SpdMatrix(np.diag([1.0, 3.0]))
        assert A.min_eigenvalue == pytest.approx(1.0)
        assert A.max_eigenvalue == pytest.approx(3.0)


class TestSpectralDecompose:
    def test_identity_is_one_cluster(self):
        spectrum = spectral_decompose(np.eye(3), cluster_tol=1e-8)
        np.testing.assert_allclose(spectrum.eigenvalues, [1.0, 1.0, 1.0])
        assert spectrum.clusters == ((0, 1, 2),)

    def test_diagonal_has_singleton_clusters(self):
        spectrum = spectral_decompose(np.diag([1.0, 2.0, 3.0]), cluster_tol=1e-8)
        np.testing.assert_allclose(spectrum.eigenvalues, [1.0, 2.0, 3.0])
        assert spectrum.clusters == ((0,), (1,), (2,))
        np.testing.assert_allclose(np.abs(spectrum.frame), np.eye(3), atol=1e-12)

    def test_two_by_two(self):
        spectrum = spectral_decompose(np.array([[2.0, 1.0], [1.0, 2.0]]))
        np.testing.assert_allclose(spectrum.eigenvalues, [1.0, 3.0], atol=1e-12)
        first = spectrum.frame[:, 0] * np.sqrt(2)
        np.testing.assert_allclose(np.abs(first), [1.0, 1.0], atol=1e-12)
        assert abs(first[0] + first[1]) < 1e-12
        np.testing.assert_allclose(spectrum.reconstruct(), [[2.0, 1.0], [1.0, 2.0]], atol=1e-12)

    def test_rejects_nonpositive_tolerance(self):
        with pytest.raises(DomainError):
            spectral_decompose(np.eye(2), cluster_tol=0.0)

    def test_projectors_sum_to_identity(self):
        spectrum = spectral_decompose(np.diag([1.0, 1.0, 2.0]))
        total = sum(spectrum.projector(i) for i in range(len(spectrum.clusters)))
        np.testing.assert_allclose(total, np.eye(3), atol=1e-12)


class TestFunctionalCalculus:
    def test_square_root_of_diagonal(self):
        result = apply_scalar_function(np.diag([1.0, 4.0]), ScalarMap.power(0.5))
        np.testing.assert_allclose(result.data, np.diag([1.0, 2.0]), atol=1e-12)

    def test_log_of_diagonal(self):
        result = apply_scalar_function(np.diag([math.e, math.e**2]), ScalarMap.log())
        np.testing.assert_allclose(result.data, np.diag([1.0, 2.0]), atol=1e-12)

    def test_square(self):
        result = apply_scalar_function(np.array([[2.0, 1.0], [1.0, 2.0]]), ScalarMap.power(2))
        np.testing.assert_allclose(result.data, [[5.0, 4.0], [4.0, 5.0]], atol=1e-12)

    def test_log_outside_domain(self):
        with pytest.raises(DomainError):
            apply_scalar_function(np.diag([1.0, -1.0]), ScalarMap.log())

    def test_exp_accepts_negative_eigenvalues(self):
        result = spd_function(np.diag([-1.0, 1.0]), ScalarMap.exp())
        np.testing.assert_allclose(result.data, np.diag([math.exp(-1), math.e]), atol=1e-12)


class TestDividedDifference:
    @pytest.mark.parametrize(
        "f, x, y, expected",
        [
            (ScalarMap.log(), 2.0, 2.0, 0.5),
            (ScalarMap.power(2), 1.0, 3.0, 4.0),
            (ScalarMap.log(), 1.0, math.e, 1 / (math.e - 1)),
        ],
    )
    def test_values(self, f, x, y, expected):
        assert divided_difference(f, x, y) == pytest.approx(expected, rel=1e-12)

    @pytest.mark.parametrize("gap", [0.9e-6, 1.1e-6, 1e-9])
    def test_accurate_near_switch(self, gap):
        exact = math.log1p(gap) / gap
        assert divided_difference(ScalarMap.log(), 1.0, 1.0 + gap) == pytest.approx(exact, rel=1e-9)


class TestFrechetDerivative:
    def test_square_in_identity_direction(self):
        A = random_spd(3, 5, 1.0)
        result = frechet_derivative(ScalarMap.power(2), A, np.eye(3))
        np.testing.assert_allclose(result.data, 2 * A.data, atol=1e-10)

    def test_log_off_diagonal(self):
        result = frechet_derivative(ScalarMap.log(), np.diag([1.0, math.e]), SWAP)
        c = 1 / (math.e - 1)
        np.testing.assert_allclose(result.data, [[0.0, c], [c, 0.0]], atol=1e-12)

    def test_identity_map(self):
        A = random_spd(3, 1, 1.0)
        H = random_hermitian(3, 2)
        result = frechet_derivative(ScalarMap.power(1), A, H)
        np.testing.assert_allclose(result.data, H.data, atol=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            frechet_derivative(ScalarMap.log(), np.eye(2), np.eye(3))

    @pytest.mark.parametrize("f", [ScalarMap.log(), ScalarMap.power(0.5), ScalarMap.power(-1)])
    def test_matches_central_difference(self, f):
        A, H = random_spd(3, 5, 1.0), random_hermitian(3, 6)
        h = 1e-4
        plus = apply_scalar_function(A.data + h * H.data, f).data
        minus = apply_scalar_function(A.data - h * H.data, f).data
        np.testing.assert_allclose(frechet_derivative(f, A, H).data, (plus - minus) / (2 * h), atol=1e-6)


class TestNorms:
    def test_hilbert_schmidt(self):
        assert ui_norm(np.diag([3.0, -4.0]), NormSpec.hs()) == pytest.approx(5.0)

    def test_operator(self):
        assert ui_norm(np.diag([3.0, -4.0]), NormSpec.operator()) == pytest.approx(4.0)

    def test_trace_norm(self):
        assert ui_norm(np.eye(3), NormSpec.schatten(1)) == pytest.approx(3.0)

    def test_ky_fan(self):
        assert ui_norm(np.diag([1.0, -5.0, 2.0]), NormSpec.kyfan(2)) == pytest.approx(7.0)

    def test_ky_fan_exceeds_dimension(self):
        with pytest.raises(DomainError):
            ui_norm(np.eye(2), NormSpec.kyfan(3))

    def test_non_hermitian_uses_singular_values(self):
        assert ui_norm(np.array([[0.0, 2.0], [0.0, 0.0]]), NormSpec.operator()) == pytest.approx(2.0)

    @pytest.mark.parametrize(
        "X, Y, expected",
        [(np.eye(2), np.eye(2), 2.0), (np.diag([1.0, -1.0]), np.eye(2), 0.0), (SWAP, SWAP, 2.0)],
    )
    def test_hs_inner(self, X, Y, expected):
        assert hs_inner(X, Y) == pytest.approx(expected)

    @pytest.mark.parametrize("spec", [NormSpec.hs(), NormSpec.schatten(1), NormSpec.schatten(3), NormSpec.kyfan(2)])
    def test_unitary_invariance(self, spec):
        X = random_hermitian(3, 11).data
        U, V = random_unitary(3, 12), random_unitary(3, 13)
        assert ui_norm(U @ X @ V, spec) == pytest.approx(ui_norm(X, spec), rel=1e-12)

    @pytest.mark.parametrize("spec", [NormSpec.schatten(1), NormSpec.schatten(3), NormSpec.kyfan(2), NormSpec.operator()])
    def test_triangle_inequality(self, spec):
        for seed in range(5):
            X, Y = random_hermitian(3, 2 * seed), random_hermitian(3, 2 * seed + 1)
            assert ui_norm(X.data + Y.data, spec) <= ui_norm(X, spec) + ui_norm(Y, spec) + 1e-12


class TestPinch:
    def test_identity_spectrum_keeps_everything(self):
        X = random_hermitian(3, 4)
        np.testing.assert_allclose(pinch(spectral_decompose(np.eye(3)), X).data, X.data, atol=1e-12)

    def test_diagonal_part(self):
        X = np.array([[1.0, 2.0 + 1.0j], [2.0 - 1.0j, 3.0]])
        result = pinch(spectral_decompose(np.diag([1.0, 2.0])), X)
        np.testing.assert_allclose(result.data, np.diag([1.0, 3.0]), atol=1e-12)

    def test_block_diagonal(self):
        X = random_hermitian(3, 9).data
        result = pinch(spectral_decompose(np.diag([1.0, 1.0, 2.0])), X)
        expected = np.zeros_like(X)
        expected[:2, :2] = X[:2, :2]
        expected[2, 2] = X[2, 2]
        np.testing.assert_allclose(result.data, expected, atol=1e-12)

    def test_projection_properties(self):
        spectrum = spectral_decompose(random_spd(3, 7, 1.0))
        X = random_hermitian(3, 8)
        pinched = pinch(spectrum, X)
        np.testing.assert_allclose(pinch(spectrum, pinched).data, pinched.data, atol=1e-12)
        assert ui_norm(pinched, NormSpec.hs()) <= ui_norm(X, NormSpec.hs()) + 1e-12
        assert hs_inner(X.data - pinched.data, pinched.data) == pytest.approx(0.0, abs=1e-12)


class TestSampling:
    def test_zero_spread_gives_identity(self):
        np.testing.assert_array_equal(random_spd(1, 123, 0.0).data, [[1.0]])

    def test_deterministic(self):
        first, second = random_spd(3, 42, 1.0), random_spd(3, 42, 1.0)
        np.testing.assert_array_equal(first.data, second.data)

    def test_eigenvalues_within_spread(self):
        A = random_spd(4, 7, 2.0)
        eigenvalues = spectral_decompose(A).eigenvalues
        assert np.all(eigenvalues >= math.exp(-2) * (1 - 1e-12))
        assert np.all(eigenvalues <= math.exp(2) * (1 + 1e-12))

    def test_real_entries(self):
        assert random_spd(3, 1, 1.0, complex_entries=False).is_real

    def test_rejects_negative_spread(self):
        with pytest.raises(DomainError):
            random_spd(2, 0, -1.0)


def test_geometric_mean_of_commuting_pair():
    result = geometric_mean_pair(np.eye(2), np.diag([4.0, 9.0]))
    np.testing.assert_allclose(result.data, np.diag([2.0, 3.0]), atol=1e-12)
