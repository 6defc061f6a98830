import math

import numpy as np
import pytest
import sympy as sp

from toric_bounds import calabi
from toric_bounds.bounds import theorem2_bound
from toric_bounds.polytope import builtin_polytope
from toric_bounds.utils import ParameterRangeError

R = sp.Rational


class TestExplicitMetric:
    def test_scalar_curvature_coefficients(self):
        assert calabi.alpha_exact(1) == R(12, 11)
        assert calabi.beta_exact(1) == R(42, 11)

    def test_profile_values(self):
        assert calabi.z_profile(1, 0) == pytest.approx(21 / 88)
        assert calabi.z_profile(1, 1) == pytest.approx(0.0, abs=1e-15)
        assert calabi.z_profile(R(1, 2), R(-1, 2)) == pytest.approx(0.0, abs=1e-15)

    def test_profile_range(self):
        with pytest.raises(ParameterRangeError):
            calabi.z_profile(1, 1.5)
        with pytest.raises(ParameterRangeError):
            calabi.CalabiMetric(2)

    @pytest.mark.parametrize("a", [-0.9, 0, 1, 1.9])
    def test_profile_solves_ode(self, a):
        metric = calabi.CalabiMetric(a)
        for t in np.linspace(-metric.a, 1.0, 9)[1:-1]:
            assert abs(metric.ode_residual(round(float(t), 9))) < 1e-10

    @pytest.mark.parametrize("a", np.linspace(-0.99, 1.99, 15))
    def test_metric_is_positive_on_the_interior(self, a):
        metric = calabi.CalabiMetric(round(float(a), 6))
        ts = np.linspace(-metric.a, 1.0, 202)[1:-1]
        assert min(metric.z_profile(t) for t in ts) > 0
        points, _ = calabi.trapezoid_rule(metric.a, 40)
        assert np.linalg.eigvalsh(metric.inverse_hessian_field(points)).min() > 0

    def test_hessian_at_origin(self):
        h = calabi.hessian_u(1, (0.0, 0.0))
        np.testing.assert_allclose(h, [[109 / 84, 67 / 84], [67 / 84, 109 / 84]])

    def test_inverse_hessian(self):
        x = (0.3, -0.4)
        np.testing.assert_allclose(calabi.inverse_hessian(0.5, x) @ calabi.hessian_u(0.5, x), np.eye(2), atol=1e-12)

    def test_outside_point_rejected(self):
        with pytest.raises(ParameterRangeError):
            calabi.hessian_u(1, (1.0, 1.0))

    @pytest.mark.parametrize("a, x", [(1, (0.0, 0.0)), (0, (-0.2, 0.3)), (-0.5, (0.3, 0.4))])
    def test_abreu_equation(self, a, x):
        assert abs(calabi.scalar_curvature_check(a, x, 1e-3)) < 1e-5

    def test_abreu_check_needs_room(self):
        with pytest.raises(ParameterRangeError):
            calabi.scalar_curvature_check(1, (0.0, 0.999), 0.01)

    def test_normalization_and_volume(self):
        assert calabi.normalization(1) == pytest.approx(1.0)
        assert calabi.riemannian_volume(1) == pytest.approx(16 * math.pi ** 2)


class TestClosedForm:
    def test_quotient_coefficients(self):
        coefficients = calabi.quotient_coefficients(1)
        assert coefficients.A == pytest.approx(206 / 55)
        assert coefficients.discriminant == pytest.approx(calabi.discriminant(1))
        assert calabi.discriminant(1) == pytest.approx(-0.4902, abs=1e-4)

    @pytest.mark.parametrize("a", [R(-95 + 12 * k, 100) for k in range(25)])
    def test_quotient_coefficients_match_moment_matrices(self, a):
        result = theorem2_bound(builtin_polytope("trapezoid", a))
        numerator = np.array(result.numerator_matrix, dtype=float)
        denominator = np.array(result.denominator_matrix, dtype=float)
        coefficients = calabi.quotient_coefficients(a)
        assert coefficients.A == pytest.approx(numerator[0, 0], abs=1e-9)
        assert coefficients.B == pytest.approx(2 * numerator[0, 1], abs=1e-9)
        assert coefficients.C == pytest.approx(denominator[0, 0], abs=1e-9)
        assert coefficients.D == pytest.approx(2 * denominator[0, 1], abs=1e-9)

    def test_critical_parameter(self):
        critical = calabi.find_critical_a()
        assert critical == pytest.approx(1.2877, abs=5e-5)
        assert abs(calabi.critical_polynomial(critical)) < 1e-8
        assert abs(calabi.discriminant(critical)) < 1e-8

    def test_branches(self):
        assert calabi.closed_form_bound(1) == (pytest.approx(8192 / 4400), calabi.ANTI_INVARIANT)
        assert calabi.closed_form_bound(1.5)[1] == calabi.INVARIANT

    @pytest.mark.parametrize("a", [-0.8, 0.0, 1.0, 1.25, 1.3, 1.9])
    def test_closed_form_is_smaller_branch(self, a):
        value, _ = calabi.closed_form_bound(a)
        assert value == pytest.approx(min(calabi.branch_bounds(a)), rel=1e-10)

    @pytest.mark.parametrize("a", [R(-1, 2), R(0), R(1), R(3, 2)])
    def test_moment_pipeline_matches(self, a):
        result = theorem2_bound(builtin_polytope("trapezoid", a))
        value, _ = calabi.closed_form_bound(a)
        assert result.value / calabi.normalization(a) == pytest.approx(value, abs=1e-9)

    def test_kahler_einstein_limit(self):
        gamma, limit = calabi.kahler_einstein_limit()
        assert gamma == pytest.approx(2 * math.sqrt(2) / 3)
        assert calabi.closed_form_bound(1.999)[0] == pytest.approx(limit, abs=1e-2)


class TestRayleighRitz:
    @pytest.fixture(scope="class")
    def gram(self):
        return calabi.gram_matrices(0.5, 24)

    def test_mass_matrix(self, gram):
        np.testing.assert_allclose(gram.M, gram.M.T)
        assert np.all(np.linalg.eigvalsh(gram.M) > 0)
        assert gram.M[0, 0] == pytest.approx(1.5 * 4.5 / 2)

    def test_stiffness_matrix(self, gram):
        assert gram.converged
        np.testing.assert_allclose(gram.Mtilde[0], 0.0, atol=1e-14)
        exact = np.array(calabi.exact_linear_gradient_block(0.5), dtype=float)
        np.testing.assert_allclose(gram.Mtilde[1:3, 1:3], exact, rtol=1e-8)

    def test_schemes_agree(self):
        collapsed = calabi.gram_matrices(0.5, 32).Mtilde
        triangles = calabi.gram_matrices(0.5, 64, scheme="triangles").Mtilde
        np.testing.assert_allclose(triangles, collapsed, rtol=1e-6, atol=1e-10)

    def test_unknown_scheme(self):
        with pytest.raises(ParameterRangeError):
            calabi.trapezoid_rule(0.5, 8, "spiral")

    def test_order_range(self):
        with pytest.raises(ParameterRangeError):
            calabi.gram_matrices(0.5, 4)

    @pytest.mark.parametrize("a", [-0.5, 0.5, 1.5])
    def test_below_closed_form(self, a):
        value = calabi.rayleigh_ritz(a, 24)
        assert 0 < value <= calabi.closed_form_bound(a)[0] + 1e-8

    def test_parity_split(self, gram):
        parity = calabi.rayleigh_ritz_by_parity(0.5, gram=gram)
        assert set(parity) == {calabi.INVARIANT, calabi.ANTI_INVARIANT}
        assert min(parity.values()) == pytest.approx(calabi.rayleigh_ritz(0.5, gram=gram), rel=1e-9)


class TestSweep:
    def test_grid(self):
        grid = calabi.parameter_grid(R(-1, 2), R(3, 2), 5)
        assert grid == [R(-1, 2), R(0), R(1, 2), R(1), R(3, 2)]
        with pytest.raises(ParameterRangeError):
            calabi.parameter_grid(-1, 1, 5)
        with pytest.raises(ParameterRangeError):
            calabi.parameter_grid(0, 1, 1)

    def test_small_sweep(self):
        records = calabi.sweep(-0.5, 1.9, 4, order=16, workers=2)
        assert [r.a for r in records] == pytest.approx([-0.5, 0.3, 1.1, 1.9])
        assert all(r.error is None for r in records)
        assert all(r.gap >= -1e-8 for r in records)
        assert records[0].branch == calabi.ANTI_INVARIANT
        assert records[-1].branch == calabi.INVARIANT

        summary = calabi.summarize_sweep(records)
        assert summary.count == 4
        assert summary.switch_bracket == (pytest.approx(1.1), pytest.approx(1.9))
        assert summary.bounded_by_kahler_einstein

    def test_failed_point_recorded(self, monkeypatch):
        original = calabi.sweep_point

        def flaky(a, order=None):
            if a == 0:
                raise ValueError("boom")
            return original(a, order)

        monkeypatch.setattr(calabi, "sweep_point", flaky)
        records = calabi.sweep(-0.5, 0.5, 3, order=16, workers=1)
        assert records[1].error == "boom"
        assert math.isnan(records[1].bound)
        assert calabi.summarize_sweep(records).errors == 1


class TestSupplementary:
    @pytest.mark.parametrize("a", [-0.5, 0.5, 1.5])
    def test_quotient_extremised_at_unit_b2(self, a):
        ends = sorted([calabi.quotient_value(a, -1.0), calabi.quotient_value(a, 1.0)])
        for b2 in np.linspace(-5.0, 5.0, 41):
            value = calabi.quotient_value(a, float(b2))
            assert ends[0] - 1e-12 <= value <= ends[1] + 1e-12

    @pytest.mark.parametrize("a", [-0.5, 0.5, 1.5])
    def test_normalized_volume_is_fixed(self, a):
        assert calabi.normalization(a) ** 2 * calabi.riemannian_volume(a) == pytest.approx(16 * math.pi ** 2)

    def test_fubini_study_value(self, cpn2):
        gamma, limit = calabi.kahler_einstein_limit()
        assert theorem2_bound(cpn2).value / gamma == pytest.approx(limit)
        assert calabi.normalization(1.9999) == pytest.approx(gamma, rel=1e-4)
