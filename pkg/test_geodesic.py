"""Tests for closed-form geodesics, lengths, the shortest-path search and matrix means."""

import math

import numpy as np
import pytest

from spdgeo.core.errors import DimensionMismatchError, DomainError, NonConvergenceError
from spdgeo.core.matcore import ScalarMap, SpdMatrix, geometric_mean_pair, random_spd, spd_function
from spdgeo.models.schemas import GeodesicFamily, KernelSpec, MeanSpec, NormSpec, PathSearchConfig
from spdgeo.services.geodesic_service import (
    Curve,
    alm_3mean,
    closed_form_distance,
    curve_length,
    directional_distance_slope,
    family_kernel,
    fisher_rao_distance,
    geodesic_point,
    karcher_mean,
    numeric_shortest_distance,
    power_mean_multi,
)

FISHER = KernelSpec.of(MeanSpec.geometric(), 2.0)
SMALL_SEARCH = PathSearchConfig(segments=4, refinements=3, max_iterations=100, step_tol=1e-8)


def noncommuting_pair(seed: int, n: int = 3, spread: float = 1.0):
    rng = np.random.default_rng(seed)
    return random_spd(n, rng, spread), random_spd(n, rng, spread)


class TestGeodesicPoint:
    @pytest.mark.parametrize(
        "family", [GeodesicFamily.theta(-1.0), GeodesicFamily.theta(2.0), GeodesicFamily.alpha(0.5), GeodesicFamily.fisher_rao()]
    )
    def test_endpoints(self, family):
        A, B = noncommuting_pair(1)
        np.testing.assert_array_equal(geodesic_point(family, A, B, 0.0).data, A.data)
        np.testing.assert_array_equal(geodesic_point(family, A, B, 1.0).data, B.data)

    def test_fisher_rao_midpoint(self):
        point = geodesic_point(GeodesicFamily.fisher_rao(), np.eye(2), np.diag([1.0, 4.0]), 0.5)
        np.testing.assert_allclose(point.data, np.diag([1.0, 2.0]), atol=1e-12)

    def test_root_mean_midpoint(self):
        point = geodesic_point(GeodesicFamily.theta(1.0), np.array([[1.0]]), np.array([[9.0]]), 0.5)
        np.testing.assert_allclose(point.data, [[4.0]], atol=1e-12)

    def test_parameter_out_of_range(self):
        with pytest.raises(DomainError):
            geodesic_point(GeodesicFamily.theta(2.0), np.eye(2), np.eye(2), 1.5)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            geodesic_point(GeodesicFamily.theta(2.0), np.eye(2), np.eye(3), 0.5)

    def test_alpha_one_is_fisher_rao(self):
        A, B = noncommuting_pair(2)
        expected = geometric_mean_pair(A, B, 0.3)
        np.testing.assert_allclose(geodesic_point(GeodesicFamily.alpha(1.0), A, B, 0.3).data, expected.data, atol=1e-10)


class TestClosedFormDistance:
    def test_euclidean_case(self):
        A, B = noncommuting_pair(3)
        expected = np.linalg.norm(A.data - B.data)
        assert closed_form_distance(GeodesicFamily.theta(0.0), NormSpec.hs(), A, B) == pytest.approx(expected, rel=1e-12)

    def test_log_euclidean_to_identity(self):
        value = closed_form_distance(GeodesicFamily.theta(2.0), NormSpec.hs(), np.diag([math.e, math.e]), np.eye(2))
        assert value == pytest.approx(math.sqrt(2), rel=1e-12)

    def test_fisher_rao_commuting(self):
        value = closed_form_distance(GeodesicFamily.alpha(1.0), NormSpec.hs(), np.diag([1.0, 4.0]), np.eye(2))
        assert value == pytest.approx(math.log(4), rel=1e-12)

    def test_root_mean_distance(self):
        A, B = noncommuting_pair(4)
        root = ScalarMap.power(0.5)
        expected = 2 * np.linalg.norm(spd_function(A, root).data - spd_function(B, root).data)
        assert closed_form_distance(GeodesicFamily.theta(1.0), NormSpec.hs(), A, B) == pytest.approx(expected, rel=1e-12)

    def test_same_point(self):
        A = random_spd(2, 5, 1.0)
        assert closed_form_distance(GeodesicFamily.theta(2.0), NormSpec.hs(), A, A) == 0.0

    @pytest.mark.parametrize("norm", [NormSpec.hs(), NormSpec.operator(), NormSpec.schatten(1.0), NormSpec.kyfan(2)])
    def test_symmetric(self, norm):
        A, B = noncommuting_pair(6)
        for family in (GeodesicFamily.theta(3.0), GeodesicFamily.alpha(0.5)):
            assert closed_form_distance(family, norm, A, B) == pytest.approx(closed_form_distance(family, norm, B, A), rel=1e-9)

    def test_fisher_rao_is_congruence_invariant(self):
        A, B = noncommuting_pair(7)
        X = np.random.default_rng(8).standard_normal((3, 3)) + 3 * np.eye(3)
        moved_a, moved_b = SpdMatrix.symmetrized(X @ A.data @ X.T), SpdMatrix.symmetrized(X @ B.data @ X.T)
        assert fisher_rao_distance(moved_a, moved_b) == pytest.approx(fisher_rao_distance(A, B), rel=1e-9)


class TestCurveLength:
    def test_constant_polyline(self):
        A = random_spd(2, 9, 1.0)
        assert curve_length(FISHER, Curve.polyline([A, A, A])) == 0.0

    def test_log_euclidean_geodesic(self):
        curve = Curve.closed_form(GeodesicFamily.theta(2.0), np.diag([1.0, math.e**2]), np.eye(2))
        assert curve_length(KernelSpec.stolarsky(2.0), curve, quadrature_points=256) == pytest.approx(2.0, rel=1e-8)

    @pytest.mark.parametrize("theta", [-2.0, 0.0, 1.0, 2.0, 3.0, 4.0])
    def test_geodesic_length_is_distance(self, theta):
        A, B = noncommuting_pair(10 + int(theta))
        family = GeodesicFamily.theta(theta)
        length = curve_length(family_kernel(family), Curve.closed_form(family, A, B), quadrature_points=256)
        assert length == pytest.approx(closed_form_distance(family, NormSpec.hs(), A, B), rel=1e-7)

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0])
    def test_alpha_geodesic_length_is_distance(self, alpha):
        A, B = noncommuting_pair(20)
        family = GeodesicFamily.alpha(alpha)
        length = curve_length(family_kernel(family), Curve.closed_form(family, A, B), quadrature_points=256)
        assert length == pytest.approx(closed_form_distance(family, NormSpec.hs(), A, B), rel=1e-7)

    def test_polyline_nodes_must_be_positive(self):
        with pytest.raises(DomainError):
            Curve.polyline([np.eye(2), -np.eye(2)])


class TestShortestPath:
    def test_same_endpoints(self):
        A = random_spd(2, 1, 1.0)
        result = numeric_shortest_distance(FISHER, A, A, SMALL_SEARCH)
        assert result.distance == 0.0
        assert result.converged

    def test_commuting_endpoints(self):
        A, B = SpdMatrix(np.diag([1.5, 0.8])), SpdMatrix(np.diag([0.7, 1.2]))
        root = ScalarMap.power(0.5)
        exact = 2 * np.linalg.norm(spd_function(A, root).data - spd_function(B, root).data)
        result = numeric_shortest_distance(KernelSpec.stolarsky(1.0), A, B, SMALL_SEARCH)
        assert exact - 1e-9 <= result.distance <= exact * (1 + 1e-3)

    def test_fisher_rao_upper_bound(self):
        A, B = noncommuting_pair(30, n=2, spread=0.5)
        exact = fisher_rao_distance(A, B)
        result = numeric_shortest_distance(FISHER, A, B, SMALL_SEARCH)
        assert exact - 1e-9 <= result.distance <= exact * (1 + 1e-3)
        assert result.history[-1] <= result.history[0]
        assert result.path.segments == 32


class TestSlope:
    def test_zero_direction(self):
        assert directional_distance_slope(FISHER, np.eye(2), np.zeros((2, 2))) == 0.0

    def test_identity_foot_point(self):
        H = np.array([[0.3, 0.1], [0.1, -0.2]])
        slope = directional_distance_slope(FISHER, np.eye(2), H)
        assert slope == pytest.approx(np.linalg.norm(H), rel=1e-3)

    def test_off_diagonal_direction(self):
        slope = directional_distance_slope(FISHER, np.diag([1.0, 4.0]), np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert slope == pytest.approx(math.sqrt(0.5), rel=1e-3)

    def test_schedule_must_decrease(self):
        with pytest.raises(DomainError):
            directional_distance_slope(FISHER, np.eye(2), np.eye(2), eps_schedule=(1e-3, 1e-2))


class TestPowerMean:
    def test_arithmetic(self):
        A, B = noncommuting_pair(40)
        np.testing.assert_allclose(power_mean_multi(0.0, [A, B]).data, (A.data + B.data) / 2, atol=1e-12)

    def test_log_euclidean(self):
        result = power_mean_multi(2.0, [np.eye(2), np.diag([math.e**2, math.e**2])])
        np.testing.assert_allclose(result.data, np.diag([math.e, math.e]), atol=1e-12)

    @pytest.mark.parametrize("theta, expected", [(3.0, 16 / 9), (4.0, 1.6)])
    def test_scalar_power_means(self, theta, expected):
        result = power_mean_multi(theta, [np.array([[1.0]]), np.array([[4.0]])])
        assert result.data[0, 0].real == pytest.approx(expected, rel=1e-12)

    def test_single_input(self):
        A = random_spd(3, 41, 1.0)
        assert power_mean_multi(1.0, [A]) is A

    def test_empty(self):
        with pytest.raises(DomainError):
            power_mean_multi(1.0, [])

    def test_weights_must_sum_to_one(self):
        with pytest.raises(DomainError):
            power_mean_multi(1.0, [np.eye(2), np.eye(2)], weights=[0.5, 0.6])


class TestKarcherMean:
    def test_single_input(self):
        A = random_spd(3, 50, 1.0)
        np.testing.assert_array_equal(karcher_mean([A]).data, A.data)

    def test_commuting_midpoint(self):
        result = karcher_mean([np.eye(2), np.diag([4.0, 9.0])])
        np.testing.assert_allclose(result.data, np.diag([2.0, 3.0]), atol=1e-10)

    def test_commuting_triple(self):
        matrices = [np.diag([1.0, 2.0]), np.diag([8.0, 3.0]), np.diag([27.0, 5.0])]
        expected = np.diag([(1 * 8 * 27) ** (1 / 3), (2 * 3 * 5) ** (1 / 3)])
        np.testing.assert_allclose(karcher_mean(matrices).data, expected, atol=1e-9)

    def test_two_matrices_give_geometric_mean(self):
        A, B = noncommuting_pair(51)
        np.testing.assert_allclose(karcher_mean([A, B]).data, geometric_mean_pair(A, B).data, atol=1e-9)

    def test_alpha_out_of_range(self):
        with pytest.raises(DomainError):
            karcher_mean([np.eye(2)], alpha=2.5)

    def test_non_convergence(self):
        A, B = noncommuting_pair(52)
        with pytest.raises(NonConvergenceError) as excinfo:
            karcher_mean([A, B, np.eye(3)], tol=1e-300, max_iter=1)
        assert excinfo.value.iterations == 1
        assert excinfo.value.residual > 0


class TestAlmMean:
    def test_equal_inputs(self):
        A = random_spd(2, 60, 1.0)
        np.testing.assert_allclose(alm_3mean(A, A, A).data, A.data, atol=1e-12)

    def test_scalars(self):
        result = alm_3mean(np.array([[1.0]]), np.array([[8.0]]), np.array([[64.0]]))
        assert result.data[0, 0].real == pytest.approx(8.0, rel=1e-9)

    def test_agrees_with_karcher_for_commuting_inputs(self):
        matrices = [np.diag([1.0, 2.0]), np.diag([3.0, 0.5]), np.diag([0.25, 7.0])]
        np.testing.assert_allclose(alm_3mean(*matrices).data, karcher_mean(matrices).data, atol=1e-8)

    def test_one_step_halves_the_diameter(self):
        rng = np.random.default_rng(61)
        A, B, C = (random_spd(3, rng, 1.0) for _ in range(3))

        def diameter(X, Y, Z):
            return max(fisher_rao_distance(X, Y), fisher_rao_distance(Y, Z), fisher_rao_distance(Z, X))

        before = diameter(A, B, C)
        after = diameter(geometric_mean_pair(B, C), geometric_mean_pair(C, A), geometric_mean_pair(A, B))
        assert after <= 0.5 * before + 1e-12

    def test_rejects_nonpositive_tolerance(self):
        with pytest.raises(DomainError):
            alm_3mean(np.eye(2), np.eye(2), np.eye(2), tol=0.0)
