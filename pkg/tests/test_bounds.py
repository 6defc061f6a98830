import numpy as np
import pytest
import sympy as sp

from toric_bounds.bounds import (
    CURVATURE_CAVEAT,
    centered_second_moments,
    first_nonzero,
    pencil_minimum,
    product_sphere_spectrum,
    quotient,
    rescale_bound,
    solve_extremal_S,
    theorem1_bound,
    theorem2_bound,
)
from toric_bounds.integrate import moments_up_to
from toric_bounds.polytope import builtin_polytope, dilate
from toric_bounds.utils import ParameterRangeError

R = sp.Rational


class TestNonNegativeCurvatureBound:
    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_cpn_gives_n_plus_two(self, n):
        result = theorem1_bound(builtin_polytope("cpn_simplex", n))
        assert result.value == pytest.approx(n + 2, abs=1e-10)

    def test_cpn_minimizer_along_first_axis(self):
        result = theorem1_bound(builtin_polytope("cpn_simplex", 3))
        assert result.minimizer_b[0] == pytest.approx(1.0)
        np.testing.assert_allclose(result.minimizer_b[1:], 0.0, atol=1e-8)

    def test_square(self, square):
        result = theorem1_bound(square)
        assert result.value == pytest.approx(4.0)
        np.testing.assert_allclose(result.minimizer_b, [1.0, 0.0], atol=1e-12)

    def test_caveat_attached(self, cpn2):
        assert CURVATURE_CAVEAT in theorem1_bound(cpn2).warnings

    def test_minimizer_attains_value(self, trapezoid1):
        result = theorem1_bound(trapezoid1)
        assert quotient(result, result.minimizer_b) == pytest.approx(result.value)
        assert quotient(result, [1.0, 0.3]) >= result.value - 1e-12

    def test_dilation_scales_bound(self, trapezoid1):
        t = R(5, 3)
        reference = theorem1_bound(trapezoid1)
        scaled = theorem1_bound(dilate(trapezoid1, t))
        assert sp.Matrix(scaled.denominator_matrix) == t ** 4 * sp.Matrix(reference.denominator_matrix)
        assert scaled.value * float(t) == pytest.approx(reference.value)

    def test_centered_moments_are_symmetric(self, trapezoid1):
        d = sp.Matrix(centered_second_moments(moments_up_to(trapezoid1, 2)))
        assert d == d.T
        assert d[0, 0] > 0


class TestExtremalScalarCurvature:
    @pytest.mark.parametrize("a", [1, R(3, 2), 2, 3])
    def test_rectangle(self, a):
        scalar = solve_extremal_S(builtin_polytope("rectangle", a))
        assert scalar.a0 == 2 * a + R(2) / a
        assert scalar.is_constant

    def test_trapezoid(self, trapezoid1):
        scalar = solve_extremal_S(trapezoid1)
        assert (scalar.a0, scalar.grad) == (R(42, 11), (R(12, 11), R(12, 11)))

    def test_cpn_is_constant(self, cpn2):
        scalar = solve_extremal_S(cpn2)
        assert scalar.a0 == 4
        assert scalar.grad == (0, 0)


class TestExtremalBound:
    @pytest.mark.parametrize("a", [1, R(3, 2), 2, 3])
    def test_tight_on_sphere_products(self, a):
        value = theorem2_bound(builtin_polytope("rectangle", a)).value
        assert value == pytest.approx(float(2 / a), abs=1e-12)
        assert first_nonzero(product_sphere_spectrum(a, 3)) == pytest.approx(float(2 / a))

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_kahler_einstein_simplex(self, n):
        assert theorem2_bound(builtin_polytope("cpn_simplex", n)).value == pytest.approx(2.0, abs=1e-10)

    @pytest.mark.parametrize("p", [builtin_polytope("cpn_simplex", 2), builtin_polytope("rectangle", R(3, 2))])
    def test_dropping_non_negative_curvature_enlarges_bound(self, p):
        assert theorem1_bound(p).value >= theorem2_bound(p).value - 1e-12

    def test_no_caveat(self, cpn2):
        assert CURVATURE_CAVEAT not in theorem2_bound(cpn2).warnings

    def test_rescale(self, square):
        result = rescale_bound(theorem2_bound(square), 4.0)
        assert result.value == pytest.approx(0.5)
        assert result.scale == 4.0
        with pytest.raises(ParameterRangeError):
            rescale_bound(result, 0)


class TestSpectrum:
    def test_unit_product(self):
        assert product_sphere_spectrum(1, 2) == [0.0, 2.0, 4.0, 6.0, 8.0, 12.0]

    def test_ranges(self):
        with pytest.raises(ParameterRangeError):
            product_sphere_spectrum(R(1, 2), 2)
        with pytest.raises(ParameterRangeError):
            product_sphere_spectrum(1, 0)

    def test_first_nonzero(self):
        assert first_nonzero([0.0, 1e-15, 3.0, 2.0]) == 2.0
        with pytest.raises(ParameterRangeError):
            first_nonzero([0.0])


def test_pencil_scale_invariance(trapezoid1):
    result = theorem1_bound(trapezoid1)
    scaled = pencil_minimum(
        tuple(tuple(3 * v for v in row) for row in result.numerator_matrix),
        tuple(tuple(3 * v for v in row) for row in result.denominator_matrix),
    )
    assert scaled.value == pytest.approx(result.value)
    np.testing.assert_allclose(scaled.minimizer_b, result.minimizer_b, atol=1e-10)
