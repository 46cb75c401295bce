"""
Test cases for LICQ and T-stationarity certification.
"""

import numpy as np
from django.test import SimpleTestCase
from numpy.testing import assert_allclose

from mpoc.catalog import catalog, instability_perturbed
from mpoc.exceptions import RejectedInput
from mpoc.problems import (
    MpocProblem,
    Tolerances,
    active_sets,
    affine_map,
    coordinate_map,
    quadratic_function,
)
from mpoc.stationarity import (
    Condition,
    MultiplierSet,
    active_constraint_jacobian,
    licq_check,
    sign_violations,
    solve_multipliers,
    t_stationarity_check,
)


def shifted_norm(a, b):
    """(x1 - a)^2 + (x2 - b)^2 with the planar orthogonality pair x1 * x2 = 0, x2 >= 0."""
    return MpocProblem.build(
        2,
        quadratic_function(2.0 * np.eye(2), [-2.0 * a, -2.0 * b], a * a + b * b),
        F1=coordinate_map(2, [0]),
        F2=coordinate_map(2, [1]),
        name=f'shifted({a}, {b})',
    )


class LicqTest(SimpleTestCase):
    """Test cases for the LICQ check."""

    def setUp(self):
        """Set up test data."""
        self.tol = Tolerances()

    def test_biactive_origin_satisfies_licq(self):
        """Test both unit gradients at the origin are independent."""
        problem = catalog('saddle').problem
        pattern = active_sets(problem, (0.0, 0.0), self.tol)
        report = licq_check(problem, (0.0, 0.0), pattern, self.tol)
        self.assertTrue(report.holds)
        self.assertEqual(report.active_gradient_count, 2)
        self.assertAlmostEqual(report.min_singular_value, 1.0)

    def test_stack_order(self):
        """Test active gradients are stacked F1 before F2 for biactive pairs."""
        problem = catalog('saddle').problem
        pattern = active_sets(problem, (0.0, 0.0), self.tol)
        assert_allclose(active_constraint_jacobian(problem, (0.0, 0.0), pattern), np.eye(2))

    def test_no_active_constraints(self):
        """Test LICQ holds vacuously without active constraints."""
        problem = MpocProblem.build(2, quadratic_function(np.eye(2)))
        pattern = active_sets(problem, (1.0, 1.0), self.tol)
        report = licq_check(problem, (1.0, 1.0), pattern, self.tol)
        self.assertTrue(report.holds)
        self.assertEqual(report.min_singular_value, float('inf'))

    def test_dependent_equalities_fail(self):
        """Test parallel equality gradients break LICQ."""
        problem = MpocProblem.build(
            2, quadratic_function(np.eye(2)), h=affine_map([[1.0, 0.0], [2.0, 0.0]])
        )
        pattern = active_sets(problem, (0.0, 0.0), self.tol)
        report = licq_check(problem, (0.0, 0.0), pattern, self.tol)
        self.assertFalse(report.holds)
        self.assertLess(report.min_singular_value, 1e-12)

    def test_too_many_gradients_fail(self):
        """Test more active gradients than the dimension cannot satisfy LICQ."""
        problem = MpocProblem.build(
            1, quadratic_function(np.eye(1)), g=affine_map([[1.0], [2.0]])
        )
        pattern = active_sets(problem, (0.0,), self.tol)
        report = licq_check(problem, (0.0,), pattern, self.tol)
        self.assertFalse(report.holds)
        self.assertEqual(report.active_gradient_count, 2)


class MultiplierTest(SimpleTestCase):
    """Test cases for solve_multipliers."""

    def setUp(self):
        """Set up test data."""
        self.tol = Tolerances()

    def test_saddle_origin_multipliers(self):
        """Test the saddle origin decomposes with rho = (2, -2)."""
        problem = catalog('saddle').problem
        pattern = active_sets(problem, (0.0, 0.0), self.tol)
        multipliers = solve_multipliers(problem, (0.0, 0.0), pattern, self.tol)
        assert_allclose(multipliers.rho1, [2.0], atol=1e-12)
        assert_allclose(multipliers.rho2, [-2.0], atol=1e-12)
        self.assertLess(multipliers.residual_norm, 1e-12)
        self.assertTrue(multipliers.unique)

    def test_branch_multipliers(self):
        """Test sigma multipliers on the two branches of the saddle fixture."""
        problem = catalog('saddle').problem
        pattern = active_sets(problem, (-1.0, 0.0), self.tol)
        multipliers = solve_multipliers(problem, (-1.0, 0.0), pattern, self.tol)
        assert_allclose(multipliers.sigma2, [-2.0], atol=1e-12)

        pattern = active_sets(problem, (0.0, 1.0), self.tol)
        multipliers = solve_multipliers(problem, (0.0, 1.0), pattern, self.tol)
        assert_allclose(multipliers.sigma1, [2.0], atol=1e-12)

    def test_reconstruction(self):
        """Test A'w reproduces the gradient under LICQ."""
        problem = instability_perturbed(0.3).problem
        x = (0.0, 0.0)
        pattern = active_sets(problem, x, self.tol)
        multipliers = solve_multipliers(problem, x, pattern, self.tol)
        A = active_constraint_jacobian(problem, x, pattern)
        assert_allclose(A.T @ multipliers.stacked(), problem.gradient(x), atol=1e-10)

    def test_stacked_round_trip(self):
        """Test from_stacked splits in stack order and rejects wrong sizes."""
        problem = catalog('saddle').problem
        pattern = active_sets(problem, (0.0, 0.0), self.tol)
        multipliers = MultiplierSet.from_stacked(pattern, [1.0, 2.0], 0.0)
        self.assertEqual((multipliers.rho1[0], multipliers.rho2[0]), (1.0, 2.0))
        with self.assertRaises(ValueError):
            MultiplierSet.from_stacked(pattern, [1.0], 0.0)

    def test_dependent_gradients_flagged(self):
        """Test minimum-norm multipliers are flagged as not unique when LICQ fails."""
        problem = MpocProblem.build(
            2, affine_map([[1.0, 0.0]]), h=affine_map([[1.0, 0.0], [2.0, 0.0]])
        )
        pattern = active_sets(problem, (0.0, 0.0), self.tol)
        multipliers = solve_multipliers(problem, (0.0, 0.0), pattern, self.tol)
        self.assertFalse(multipliers.unique)
        # minimum-norm solution of lam1 + 2 lam2 = 1
        assert_allclose(multipliers.lam, [0.2, 0.4], atol=1e-12)


class TStationarityTest(SimpleTestCase):
    """Test cases for t_stationarity_check."""

    def setUp(self):
        """Set up test data."""
        self.tol = Tolerances()

    def test_documented_points_are_t_stationary(self):
        """Test every documented point of the built-in fixtures passes."""
        for name in ('saddle', 'instability', 'instability_perturbed(0.1)'):
            entry = catalog(name)
            for point in entry.stationary_points:
                certificate = t_stationarity_check(entry.problem, point.x, self.tol)
                self.assertTrue(certificate.is_t_stationary, f"{name} at {point.x}")
                self.assertEqual(certificate.violated_conditions, ())

    def test_gradient_residual_violation(self):
        """Test a branch point off the minimizer leaves a gradient residual."""
        certificate = t_stationarity_check(catalog('saddle').problem, (0.5, 0.0), self.tol)
        self.assertFalse(certificate.is_t_stationary)
        self.assertEqual(certificate.violated_conditions, (Condition.GRAD_RESIDUAL,))
        self.assertAlmostEqual(certificate.multipliers.residual_norm, 3.0)

    def test_rho_sign_violation(self):
        """Test rho1 != 0 with rho2 > 0 at a biactive point violates T-stationarity."""
        certificate = t_stationarity_check(shifted_norm(-1.0, -1.0), (0.0, 0.0), self.tol)
        self.assertFalse(certificate.is_t_stationary)
        self.assertIn(Condition.RHO_SIGN, certificate.violated_conditions)
        assert_allclose(certificate.multipliers.rho2, [2.0], atol=1e-12)

    def test_rho_sign_allows_zero_rho1(self):
        """Test rho2 > 0 is acceptable when rho1 vanishes."""
        certificate = t_stationarity_check(shifted_norm(0.0, -1.0), (0.0, 0.0), self.tol)
        self.assertTrue(certificate.is_t_stationary)
        assert_allclose(certificate.multipliers.rho1, [0.0], atol=1e-12)

    def test_mu_sign_violation(self):
        """Test a negative inequality multiplier is reported."""
        problem = MpocProblem.build(1, affine_map([[-1.0]]), g=affine_map([[1.0]]))
        certificate = t_stationarity_check(problem, (0.0,), self.tol)
        self.assertEqual(certificate.violated_conditions, (Condition.MU_SIGN,))
        assert_allclose(certificate.multipliers.mu, [-1.0])

    def test_sign_violations_uses_tolerance(self):
        """Test multipliers within multiplier_zero of zero count as zero."""
        problem = MpocProblem.build(1, affine_map([[-1e-9]]), g=affine_map([[1.0]]))
        pattern = active_sets(problem, (0.0,), self.tol)
        multipliers = solve_multipliers(problem, (0.0,), pattern, self.tol)
        self.assertEqual(sign_violations(multipliers, self.tol), ())

    def test_infeasible_point_rejected(self):
        """Test infeasible points are rejected before any decomposition."""
        with self.assertRaises(RejectedInput):
            t_stationarity_check(catalog('saddle').problem, (1.0, 1.0), self.tol)

    def test_objective_scaling(self):
        """Test scaling f by c > 0 scales every multiplier by c and keeps the verdict."""
        base = catalog('saddle').problem
        scaled = MpocProblem.build(
            2,
            quadratic_function(6.0 * np.eye(2), [6.0, -6.0], 6.0),
            F1=coordinate_map(2, [0]),
            F2=coordinate_map(2, [1]),
        )
        for x in ((-1.0, 0.0), (0.0, 1.0), (0.0, 0.0)):
            original = t_stationarity_check(base, x, self.tol)
            tripled = t_stationarity_check(scaled, x, self.tol)
            self.assertEqual(original.is_t_stationary, tripled.is_t_stationary)
            assert_allclose(
                tripled.multipliers.stacked(), 3.0 * original.multipliers.stacked(), atol=1e-12
            )
        origin = t_stationarity_check(scaled, (0.0, 0.0), self.tol)
        assert_allclose(origin.multipliers.rho1, [6.0], atol=1e-12)
        assert_allclose(origin.multipliers.rho2, [-6.0], atol=1e-12)

    def test_unconstrained_gradient_norm(self):
        """Test without constraints the verdict is the gradient norm against the tolerance."""
        problem = MpocProblem.build(3, quadratic_function(np.eye(3), [1.0, 0.0, 0.0]))
        cases = (
            ((-1.0, 0.0, 0.0), True),
            ((-1.0, 1e-9, 0.0), True),
            ((-1.0, 1e-6, 0.0), False),
            ((0.0, 0.0, 0.0), False),
        )
        for x, expected in cases:
            certificate = t_stationarity_check(problem, x, self.tol)
            self.assertEqual(certificate.is_t_stationary, expected, x)
            self.assertAlmostEqual(
                certificate.multipliers.residual_norm, np.linalg.norm(problem.gradient(x))
            )

    def test_licq_failure_still_certified(self):
        """Test a certificate is issued with the LICQ flag when gradients are dependent."""
        problem = MpocProblem.build(
            2, quadratic_function(np.eye(2)), h=affine_map([[1.0, 0.0], [2.0, 0.0]])
        )
        certificate = t_stationarity_check(problem, (0.0, 0.0), self.tol)
        self.assertTrue(certificate.is_t_stationary)
        self.assertFalse(certificate.licq.holds)
        self.assertFalse(certificate.multipliers.unique)
