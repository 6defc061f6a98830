import numpy as np
import pytest
import sympy as sp

from toric_bounds.numerics import (
    SymMatrix,
    bisect_root,
    duffy_rule,
    duffy_triangle,
    format_rational,
    gauss_legendre,
    generalized_symmetric_eigen,
    lowest_eigenvector,
    parse_rational,
    second_partial,
    solve_exact,
    to_rational,
)
from toric_bounds.utils import (
    BracketError,
    CholeskyError,
    InputFormatError,
    NumericsError,
    ParameterRangeError,
    SingularSystemError,
)


class TestRationals:
    def test_parse(self):
        assert parse_rational("3/2") == sp.Rational(3, 2)
        assert parse_rational(" -7 ") == -7
        assert parse_rational("4 / 6") == sp.Rational(2, 3)

    @pytest.mark.parametrize("text", ["0.5", "1/0", "abc", "1/2/3", ""])
    def test_parse_rejects(self, text):
        with pytest.raises(InputFormatError):
            parse_rational(text)

    def test_to_rational_reads_floats_by_shortest_repr(self):
        assert to_rational(0.5) == sp.Rational(1, 2)
        assert to_rational(1.99) == sp.Rational(199, 100)
        assert to_rational("1.25") == sp.Rational(5, 4)

    def test_format(self):
        assert format_rational(sp.Rational(6, 4)) == "3/2"
        assert format_rational(5) == "5"

    def test_parse_then_format_is_canonical(self, rng):
        assert format_rational(parse_rational("6/4")) == "3/2"
        assert format_rational(parse_rational("-10/5")) == "-2"
        for p, q in rng.integers(-500, 500, size=(40, 2)):
            p, q = int(p), abs(int(q)) or 1
            value = sp.Rational(p, q)
            assert parse_rational(format_rational(value)) == value
            assert parse_rational(f"{p}/{q}") == value


def test_solve_exact():
    assert solve_exact([[2, 1], [1, 3]], [3, 5]) == (sp.Rational(4, 5), sp.Rational(7, 5))
    with pytest.raises(SingularSystemError):
        solve_exact([[1, 2], [2, 4]], [1, 1])


class TestSymMatrix:
    def test_packed_round_trip(self):
        dense = np.array([[2.0, 1.0], [1.0, 3.0]])
        packed = SymMatrix.from_dense(dense)
        assert packed.packed.tolist() == [2.0, 1.0, 3.0]
        np.testing.assert_array_equal(packed.dense(), dense)

    def test_rejects_asymmetric(self):
        with pytest.raises(NumericsError):
            SymMatrix.from_dense([[1.0, 2.0], [0.0, 1.0]])
        with pytest.raises(NumericsError):
            SymMatrix.from_exact([[1, sp.Rational(1, 2)], [0, 1]])


class TestGeneralizedEigen:
    def test_diagonal_pencil(self):
        pairs = generalized_symmetric_eigen(np.diag([2.0, 6.0]), np.diag([1.0, 2.0]))
        np.testing.assert_allclose(pairs.eigenvalues, [2.0, 3.0])
        np.testing.assert_allclose(np.abs(pairs.eigenvectors), np.eye(2), atol=1e-14)

    @pytest.mark.parametrize("order", range(2, 9))
    def test_full_pencil_satisfies_equation(self, rng, order):
        x = rng.normal(size=(order, order))
        a = x + x.T
        y = rng.normal(size=(order, order))
        b = y @ y.T + order * np.eye(order)
        pairs = generalized_symmetric_eigen(a, b)
        assert np.all(np.diff(pairs.eigenvalues) >= 0)
        np.testing.assert_allclose(a @ pairs.eigenvectors, b @ pairs.eigenvectors * pairs.eigenvalues, atol=1e-10)
        np.testing.assert_allclose(np.linalg.norm(pairs.eigenvectors, axis=0), 1.0)

    def test_indefinite_mass_raises(self):
        with pytest.raises(CholeskyError) as excinfo:
            generalized_symmetric_eigen(np.eye(2), np.diag([1.0, -1.0]))
        assert excinfo.value.pivot == 2

    def test_multiple_eigenvalue_prefers_first_axis(self):
        pairs = generalized_symmetric_eigen(np.eye(3), np.eye(3))
        np.testing.assert_allclose(lowest_eigenvector(pairs), [1.0, 0.0, 0.0], atol=1e-12)

    def test_tie_break_falls_back_to_second_axis(self):
        pairs = generalized_symmetric_eigen(np.diag([5.0, 1.0, 1.0]), np.eye(3))
        np.testing.assert_allclose(lowest_eigenvector(pairs), [0.0, 1.0, 0.0], atol=1e-12)


class TestQuadrature:
    def test_two_point_nodes(self):
        nodes, weights = gauss_legendre(2)
        np.testing.assert_allclose(nodes, [-1 / np.sqrt(3), 1 / np.sqrt(3)])
        np.testing.assert_allclose(weights, [1.0, 1.0])

    def test_order_range(self):
        with pytest.raises(ParameterRangeError):
            gauss_legendre(0)

    def test_triangle_weights_sum_to_area(self):
        points, weights = duffy_triangle(6, [(0.0, 0.0), (2.0, 0.0), (0.0, 3.0)])
        assert points.shape == (36, 2)
        assert weights.sum() == pytest.approx(3.0)

    def test_triangle_integrates_polynomial(self):
        points, weights = duffy_triangle(5, [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)])
        assert weights @ (points[:, 0] * points[:, 1]) == pytest.approx(1 / 24)

    def test_truncated_rule_covers_slab(self):
        # slab of the triangle (0,0),(1,0),(0,1) with 1/2 <= x + y <= 1
        _, weights = duffy_rule(4, (0.0, 0.0), (1.0, 0.0), (0.0, 1.0), radial=(0.5, 1.0))
        assert weights.sum() == pytest.approx(0.375)

    def test_bad_radial_interval(self):
        with pytest.raises(ParameterRangeError):
            duffy_rule(4, (0.0, 0.0), (1.0, 0.0), (0.0, 1.0), radial=(0.5, 0.2))


def test_bisect_root():
    assert bisect_root(lambda x: x * x - 2, 0.0, 2.0) == pytest.approx(np.sqrt(2.0), abs=1e-11)
    with pytest.raises(BracketError):
        bisect_root(lambda x: x * x + 1, -1.0, 1.0)


def test_second_partial():
    f = lambda x: x[0] ** 2 * x[1] + np.sin(x[1])
    x = np.array([0.3, 0.7])
    assert second_partial(f, x, 0, 1, 1e-3) == pytest.approx(0.6, abs=1e-6)
    assert second_partial(f, x, 0, 0, 1e-3) == pytest.approx(1.4, abs=1e-6)
