"""The Calabi family of extremal metrics on the one-point blow-up of CP^2.

The polytope is trapezoid(a), a in (-1, 2). The metric g(a) is U(2)-invariant,
so its symplectic potential is governed by one profile z(t), t = x1 + x2,
solving a linear second-order ODE. Everything here is explicit: the profile,
the scalar curvature S = alpha (x1 + x2) + beta, the Hessian of the potential,
and the linear-test-function quotient coefficients A, B, C, D. Bounds are
reported for the normalized family g_a = c(a) g(a), which has fixed volume.

Integrals over the torus fibres contribute a factor (2 pi)^2 to every L^2
inner product. It is left out of both Gram matrices and cancels in every
Rayleigh quotient.
"""
from concurrent.futures import ThreadPoolExecutor
from functools import cached_property, lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy as sp

from toric_bounds.bounds import theorem2_bound
from toric_bounds.integrate import moments_up_to
from toric_bounds.numerics import (
    bisect_root,
    duffy_rule,
    duffy_triangle,
    generalized_symmetric_eigen,
    second_partial,
    to_rational,
)
from toric_bounds.polytope import builtin_polytope
from toric_bounds.settings import settings
from toric_bounds.types import GramPair, QuotientCoefficients, SweepRecord, SweepSummary
from toric_bounds.utils import CholeskyError, ParameterRangeError, QuadratureError, logger

a_sym, t_sym = sp.symbols("a t")

_SHARED = a_sym ** 2 - 16 * a_sym + 37  # no real root in (-1, 2)

ALPHA = 48 * (2 - a_sym) / ((a_sym + 1) * _SHARED)
BETA = 12 * (4 * a_sym - 3 * a_sym ** 2 + 13) / ((a_sym + 1) * _SHARED)

PROFILE = (
    (t_sym - 1) * (a_sym + t_sym)
    * (a_sym ** 2 * t_sym - 4 * a_sym ** 2 + 2 * a_sym * t_sym ** 2 + 10 * a_sym * t_sym + 36 * a_sym
       - 4 * t_sym ** 2 - 33 * t_sym - 74)
    / ((t_sym + 2) ** 2 * (a_sym + 1) * _SHARED)
)

QUOTIENT_A = (a_sym + 1) * (a_sym ** 4 - 14 * a_sym ** 3 + 132 * a_sym ** 2 - 590 * a_sym + 883) / (10 * _SHARED)
QUOTIENT_B = -(a_sym + 1) * (7 * a_sym ** 4 - 188 * a_sym ** 3 + 1284 * a_sym ** 2 - 3860 * a_sym + 4381) / (30 * _SHARED)
QUOTIENT_C = -(a_sym + 1) * (a_sym ** 4 - 14 * a_sym ** 3 + 60 * a_sym ** 2 - 158 * a_sym + 253) / (36 * (a_sym - 5))
QUOTIENT_D = (a_sym + 1) * (a_sym ** 4 - 14 * a_sym ** 3 + 114 * a_sym ** 2 - 374 * a_sym + 469) / (36 * (a_sym - 5))

CRITICAL_POLY = 2 * a_sym ** 4 - 85 * a_sym ** 3 + 777 * a_sym ** 2 - 2233 * a_sym + 1763

DISCRIMINANT = -(
    (a_sym - 2) * (a_sym ** 2 - 7 * a_sym + 19) * CRITICAL_POLY * (a_sym + 1) ** 3
    / (540 * (a_sym - 5) * _SHARED)
)

# normalized bounds on either side of the critical parameter
ANTI_INVARIANT_BOUND = (
    sp.sqrt(2 * (a_sym + 1)) * (13 * a_sym ** 4 - 272 * a_sym ** 3 + 2076 * a_sym ** 2 - 7400 * a_sym + 9679)
    / (10 * sp.sqrt(5 - a_sym) * (a_sym ** 2 - 4 * a_sym + 13) * _SHARED)
)
INVARIANT_BOUND = (
    -3 * sp.sqrt(2) * (5 - a_sym) ** sp.Rational(3, 2) * (a_sym ** 3 - 105 * a_sym ** 2 + 597 * a_sym - 917)
    / (10 * sp.sqrt(a_sym + 1) * _SHARED ** 2)
)

NORMALIZATION = 2 * sp.sqrt(2) / sp.sqrt((a_sym + 1) * (5 - a_sym))

_quotient = sp.lambdify(a_sym, (QUOTIENT_A, QUOTIENT_B, QUOTIENT_C, QUOTIENT_D), "math")
_discriminant = sp.lambdify(a_sym, DISCRIMINANT, "math")
_critical_poly = sp.lambdify(a_sym, CRITICAL_POLY, "math")
_anti_invariant_bound = sp.lambdify(a_sym, ANTI_INVARIANT_BOUND, "math")
_invariant_bound = sp.lambdify(a_sym, INVARIANT_BOUND, "math")
_normalization = sp.lambdify(a_sym, NORMALIZATION, "math")

# test functions 1, x1, x2, x1^2, x2^2, x1 x2
TEST_EXPONENTS: Tuple[Tuple[int, int], ...] = ((0, 0), (1, 0), (0, 1), (2, 0), (0, 2), (1, 1))

# Z2 (x1 <-> x2) adapted combinations of the test functions
INVARIANT_SPAN = np.array([
    [1, 0, 0, 0, 0, 0],
    [0, 1, 1, 0, 0, 0],
    [0, 0, 0, 1, 1, 0],
    [0, 0, 0, 0, 0, 1],
], dtype=float).T
ANTI_INVARIANT_SPAN = np.array([
    [0, 1, -1, 0, 0, 0],
    [0, 0, 0, 1, -1, 0],
], dtype=float).T

ANTI_INVARIANT = "anti-invariant"
INVARIANT = "invariant"


def _check_parameter(a) -> None:
    if not -1 < float(a) < 2:
        raise ParameterRangeError("a", a, "(-1, 2)")


def alpha_exact(a) -> sp.Rational:
    return ALPHA.subs(a_sym, to_rational(a))


def beta_exact(a) -> sp.Rational:
    return BETA.subs(a_sym, to_rational(a))


def normalization(a) -> float:
    """c(a) with g_a = c(a) g(a)"""
    _check_parameter(a)
    return float(_normalization(float(a)))


class CalabiMetric:
    """The extremal metric g(a) on trapezoid(a)"""

    def __init__(self, a):
        _check_parameter(a)
        self.a_exact = to_rational(a)
        self.a = float(self.a_exact)
        self.alpha = float(alpha_exact(self.a_exact))
        self.beta = float(beta_exact(self.a_exact))
        self.c = normalization(self.a)

        profile = PROFILE.subs(a_sym, self.a_exact)
        self.profile = profile
        self.profile_d1 = sp.diff(profile, t_sym)
        self.profile_d2 = sp.diff(profile, t_sym, 2)
        self._z = sp.lambdify(t_sym, profile, "numpy")

    def __repr__(self) -> str:
        return f"CalabiMetric(a={self.a_exact})"

    def z_profile(self, t) -> float:
        if not -self.a <= float(t) <= 1:
            raise ParameterRangeError("t", t, f"[{-self.a}, 1]")
        return float(self._z(float(t)))

    def ode_residual(self, t) -> float:
        """Left side of z'' + 4z'/(2+t) - 2(1-z)/(t+2)^2 + (alpha t + beta)/(2(2+t)), evaluated exactly"""
        t = to_rational(t)
        if not -self.a_exact < t < 1:
            raise ParameterRangeError("t", t, f"({-self.a_exact}, 1)")
        return float(self.ode_left_side.subs(t_sym, t))

    @cached_property
    def ode_left_side(self) -> sp.Expr:
        """The ODE left side as one reduced rational function of t"""
        z, dz, d2z = self.profile, self.profile_d1, self.profile_d2
        alpha, beta = alpha_exact(self.a_exact), beta_exact(self.a_exact)
        t = t_sym
        return sp.cancel(d2z + 4 * dz / (2 + t) - 2 * (1 - z) / (t + 2) ** 2 + (alpha * t + beta) / (2 * (2 + t)))

    def facet_values(self, x) -> np.ndarray:
        """(psi_1, .., psi_4) at x or at each row of an (m, 2) array"""
        x = np.asarray(x, dtype=float)
        x1, x2 = x[..., 0], x[..., 1]
        return np.stack([1 + x1, 1 + x2, self.a + x1 + x2, 1 - x1 - x2], axis=-1)

    def _require_interior(self, x, margin: float = 0.0) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (2,):
            raise ParameterRangeError("x", x.tolist(), "a point of R^2")
        if np.any(self.facet_values(x) <= margin):
            raise ParameterRangeError("x", tuple(x), f"interior of trapezoid({self.a_exact}) with margin {margin}")
        return x

    def _hessian_entries(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        x1, x2 = points[..., 0], points[..., 1]
        t = x1 + x2
        w = (1.0 / self._z(t) - 1.0) / (2.0 + t)
        return 0.5 * (1.0 / (x1 + 1.0) + w), 0.5 * w, 0.5 * (1.0 / (x2 + 1.0) + w)

    def _inverse_entries(self, points: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        h11, h12, h22 = self._hessian_entries(points)
        det = h11 * h22 - h12 * h12
        return h22 / det, -h12 / det, h11 / det

    def hessian_u(self, x) -> np.ndarray:
        """Euclidean Hessian of the symplectic potential at an interior point"""
        x = self._require_interior(x)
        h11, h12, h22 = (float(v) for v in self._hessian_entries(x))
        return np.array([[h11, h12], [h12, h22]])

    def inverse_hessian(self, x) -> np.ndarray:
        """u^ij by adjugate over determinant"""
        x = self._require_interior(x)
        u11, u12, u22 = (float(v) for v in self._inverse_entries(x))
        return np.array([[u11, u12], [u12, u22]])

    def inverse_hessian_field(self, points: np.ndarray) -> np.ndarray:
        """u^ij at every row of an (m, 2) array of interior points, shape (m, 2, 2)"""
        points = np.asarray(points, dtype=float)
        if np.any(self.facet_values(points) <= 0):
            raise QuadratureError(f"quadrature node outside the open trapezoid({self.a_exact})")
        u11, u12, u22 = self._inverse_entries(points)
        return np.stack([np.stack([u11, u12], axis=-1), np.stack([u12, u22], axis=-1)], axis=-2)

    def scalar_curvature(self, x) -> float:
        return self.alpha * (float(x[0]) + float(x[1])) + self.beta

    def scalar_curvature_check(self, x, h: float) -> float:
        """-sum_ij d_i d_j u^ij by central differences, minus alpha (x1 + x2) + beta"""
        if not h > 0:
            raise ParameterRangeError("h", h, "(0, oo)")
        x = self._require_interior(x, margin=2 * h)

        def entry(i: int, j: int):
            return lambda y: self.inverse_hessian(y)[i, j]

        abreu = -sum(second_partial(entry(i, j), x, i, j, h) for i in range(2) for j in range(2))
        return float(abreu) - self.scalar_curvature(x)


def z_profile(a, t) -> float:
    return CalabiMetric(a).z_profile(t)


def ode_residual(a, t) -> float:
    return CalabiMetric(a).ode_residual(t)


def hessian_u(a, x) -> np.ndarray:
    return CalabiMetric(a).hessian_u(x)


def inverse_hessian(a, x) -> np.ndarray:
    return CalabiMetric(a).inverse_hessian(x)


def scalar_curvature_check(a, x, h: float) -> float:
    return CalabiMetric(a).scalar_curvature_check(x, h)


def quotient_coefficients(a) -> QuotientCoefficients:
    """A, B, C, D of the unnormalized quotient (A(1 + b2^2) + b2 B) / (C(1 + b2^2) + b2 D)"""
    _check_parameter(a)
    A, B, C, D = (float(v) for v in _quotient(float(a)))
    return QuotientCoefficients(a=float(a), A=A, B=B, C=C, D=D)


def quotient_value(a, b2: float) -> float:
    return quotient_coefficients(a).value(b2)


def discriminant(a) -> float:
    """AD - BC from its factorized closed form"""
    _check_parameter(a)
    return float(_discriminant(float(a)))


def critical_polynomial(a: float) -> float:
    return float(_critical_poly(float(a)))


@lru_cache(maxsize=1)
def find_critical_a() -> float:
    """The unique zero of the critical quartic on [-1, 2]: where the minimizing parity switches"""
    root = bisect_root(critical_polynomial, -1.0, 2.0, settings.BISECTION_TOL)
    logger.debug(f"Critical parameter a_c = {root:.12f}")
    return root


def closed_form_bound(a) -> Tuple[float, str]:
    """Normalized bound from the closed forms, with the branch that attains it"""
    _check_parameter(a)
    a = float(a)
    if a < find_critical_a():
        return float(_anti_invariant_bound(a)), ANTI_INVARIANT
    return float(_invariant_bound(a)), INVARIANT


def branch_bounds(a) -> Tuple[float, float]:
    """Normalized quotient at b2 = -1 and b2 = +1"""
    coefficients = quotient_coefficients(a)
    c = normalization(a)
    return coefficients.value(-1.0) / c, coefficients.value(1.0) / c


def kahler_einstein_limit() -> Tuple[float, float]:
    """(gamma, 2/gamma): as a -> 2 the normalized metrics tend to gamma g_FS on CP^2, whose first eigenvalue is 2"""
    gamma = 2.0 * np.sqrt(2.0) / 3.0
    return float(gamma), float(2.0 / gamma)


def riemannian_volume(a) -> float:
    """Volume of g(a): the torus fibres contribute (2 pi)^2 times the polytope volume"""
    _check_parameter(a)
    volume = moments_up_to(builtin_polytope("trapezoid", to_rational(a)), 0).volume
    return float((2 * sp.pi) ** 2 * volume)


def exact_linear_gradient_block(a) -> Tuple[Tuple[sp.Rational, ...], ...]:
    """int_P u^ij dmu for i, j in {1, 2}, exactly, by integration by parts"""
    _check_parameter(a)
    return theorem2_bound(builtin_polytope("trapezoid", to_rational(a))).numerator_matrix


def _exact_gram(a) -> np.ndarray:
    table = moments_up_to(builtin_polytope("trapezoid", to_rational(a)), 4)
    return np.array(
        [[float(table.m((p[0] + q[0], p[1] + q[1]))) for q in TEST_EXPONENTS] for p in TEST_EXPONENTS]
    )


def _test_gradients(points: np.ndarray) -> np.ndarray:
    """Gradients of the six test functions, shape (6, m, 2)"""
    x1, x2 = points[:, 0], points[:, 1]
    zero, one = np.zeros_like(x1), np.ones_like(x1)
    return np.stack([
        np.stack([zero, zero], axis=-1),
        np.stack([one, zero], axis=-1),
        np.stack([zero, one], axis=-1),
        np.stack([2 * x1, zero], axis=-1),
        np.stack([zero, 2 * x2], axis=-1),
        np.stack([x2, x1], axis=-1),
    ])


def trapezoid_rule(a: float, order: int, scheme: str = "collapsed") -> Tuple[np.ndarray, np.ndarray]:
    """Quadrature nodes and weights on trapezoid(a).

    "collapsed": one Duffy rule collapsed at (-1, -1), the corner shared by
    the first two facets, truncated to t in [-a, 1]. Its radial coordinate is
    (t + 2) / 3, so the gradient Gram integrand becomes a polynomial.
    "triangles": two Duffy rules, one per triangle of the fan from (-1, 2).
    """
    if scheme == "collapsed":
        return duffy_rule(order, (-1.0, -1.0), (2.0, -1.0), (-1.0, 2.0), radial=((2.0 - a) / 3.0, 1.0))
    if scheme == "triangles":
        first = duffy_triangle(order, [(-1.0, 2.0), (2.0, -1.0), (1.0 - a, -1.0)])
        second = duffy_triangle(order, [(-1.0, 2.0), (1.0 - a, -1.0), (-1.0, 1.0 - a)])
        return np.vstack([first[0], second[0]]), np.concatenate([first[1], second[1]])
    raise ParameterRangeError("scheme", scheme, "'collapsed' or 'triangles'")


def _gradient_gram(metric: CalabiMetric, order: int, scheme: str) -> np.ndarray:
    points, weights = trapezoid_rule(metric.a, order, scheme)
    u = metric.inverse_hessian_field(points)
    grads = _test_gradients(points)
    # Mtilde_ij = sum_q w_q grad_i(q) . u(q) grad_j(q)
    gram = np.einsum("q,iqk,qkl,jql->ij", weights, grads, u, grads)
    return 0.5 * (gram + gram.T)


def gram_matrices(a, order: Optional[int] = None, scheme: str = "collapsed") -> GramPair:
    """M exactly from moments, Mtilde by quadrature, checked against a doubled (or halved) order"""
    _check_parameter(a)
    order = settings.QUADRATURE_ORDER if order is None else order
    if not 8 <= order <= 256:
        raise ParameterRangeError("order", order, "[8, 256]")
    metric = CalabiMetric(a)

    mtilde = _gradient_gram(metric, order, scheme)
    reference_order = 2 * order if 2 * order <= 256 else order // 2
    reference = _gradient_gram(metric, reference_order, scheme)
    change = float(np.max(np.abs(mtilde - reference)) / max(np.max(np.abs(mtilde)), 1e-300))

    notes = []
    converged = change <= settings.QUADRATURE_RTOL
    if not converged:
        message = (
            f"gradient Gram matrix at a={metric.a_exact} changed by {change:.2e} between orders "
            f"{order} and {reference_order}"
        )
        logger.warning(message)
        notes.append(message)

    return GramPair(a=metric.a, M=_exact_gram(metric.a_exact), Mtilde=mtilde, order=order,
                    converged=converged, warnings=tuple(notes))


def _smallest_positive(stiffness: np.ndarray, mass: np.ndarray) -> float:
    try:
        pairs = generalized_symmetric_eigen(stiffness, mass)
    except CholeskyError as error:
        raise QuadratureError(f"mass matrix is not positive definite: {error}") from error
    values = pairs.eigenvalues
    threshold = settings.ZERO_EIGEN_RTOL * max(float(np.max(np.abs(values))), 1e-300)
    positive = values[values > threshold]
    if positive.size == 0:
        raise QuadratureError("pencil has no positive eigenvalue")
    return float(positive[0])


def rayleigh_ritz(a, order: Optional[int] = None, gram: Optional[GramPair] = None) -> float:
    """Smallest positive eigenvalue of Mtilde v = lambda M v, for the normalized metric g_a"""
    gram = gram_matrices(a, order) if gram is None else gram
    return _smallest_positive(gram.Mtilde, gram.M) / normalization(a)


def rayleigh_ritz_by_parity(a, order: Optional[int] = None, gram: Optional[GramPair] = None) -> Dict[str, float]:
    """Rayleigh-Ritz restricted to the swap-invariant and swap-anti-invariant test spans"""
    gram = gram_matrices(a, order) if gram is None else gram
    c = normalization(a)
    values = {}
    for label, span in ((INVARIANT, INVARIANT_SPAN), (ANTI_INVARIANT, ANTI_INVARIANT_SPAN)):
        values[label] = _smallest_positive(span.T @ gram.Mtilde @ span, span.T @ gram.M @ span) / c
    return values


def parameter_grid(a_min, a_max, count: int) -> List[sp.Rational]:
    """count equally spaced exact rationals from a_min to a_max"""
    lo, hi = to_rational(a_min), to_rational(a_max)
    if not -1 < lo < hi < 2:
        raise ParameterRangeError("grid", (float(lo), float(hi)), "-1 < a_min < a_max < 2")
    if count < 2:
        raise ParameterRangeError("count", count, ">= 2")
    step = (hi - lo) / (count - 1)
    return [lo + k * step for k in range(count)]


def sweep_point(a, order: Optional[int] = None) -> SweepRecord:
    anti, inv = branch_bounds(a)
    bound, branch = (anti, ANTI_INVARIANT) if anti <= inv else (inv, INVARIANT)
    gram = gram_matrices(a, order)
    parity = rayleigh_ritz_by_parity(a, gram=gram)
    rr = rayleigh_ritz(a, gram=gram)
    return SweepRecord(
        a=float(a),
        bound_antiinvariant=anti,
        bound_invariant=inv,
        bound=bound,
        branch=branch,
        rayleigh_ritz=rr,
        gap=bound - rr,
        rr_branch=min(parity, key=parity.get),
    )


def _safe_sweep_point(a, order: Optional[int]) -> SweepRecord:
    try:
        return sweep_point(a, order)
    except Exception as error:
        logger.error(f"Sweep point a={float(a):.6g} failed: {error}")
        nan = float("nan")
        return SweepRecord(a=float(a), bound_antiinvariant=nan, bound_invariant=nan, bound=nan,
                           branch="error", rayleigh_ritz=nan, gap=nan, error=str(error))


def sweep(a_min=None, a_max=None, count: Optional[int] = None, order: Optional[int] = None,
          workers: Optional[int] = None) -> List[SweepRecord]:
    """Bounds and Rayleigh-Ritz values on an equally spaced grid; records come back in grid order"""
    a_min = settings.SWEEP_AMIN if a_min is None else a_min
    a_max = settings.SWEEP_AMAX if a_max is None else a_max
    count = settings.SWEEP_COUNT if count is None else count
    workers = settings.SWEEP_WORKERS if workers is None else workers
    grid = parameter_grid(a_min, a_max, count)
    logger.info(f"Sweeping {count} values of a on [{float(grid[0])}, {float(grid[-1])}] with {workers} workers")

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(lambda a: _safe_sweep_point(a, order), grid))
    else:
        records = [_safe_sweep_point(a, order) for a in grid]

    failed = sum(1 for r in records if r.error)
    if failed:
        logger.warning(f"{failed} of {count} sweep points failed")
    return records


def _switch_bracket(records: Sequence[SweepRecord], attribute: str) -> Optional[Tuple[float, float]]:
    for previous, current in zip(records, records[1:]):
        if getattr(previous, attribute) != getattr(current, attribute):
            return previous.a, current.a
    return None


def summarize_sweep(records: Sequence[SweepRecord]) -> SweepSummary:
    good = [r for r in records if r.error is None]
    if not good:
        raise QuadratureError("every sweep point failed")
    _, limit = kahler_einstein_limit()
    bounded = all(r.bound <= limit + 1e-6 for r in good)
    if not bounded:
        worst = max(good, key=lambda r: r.bound)
        logger.warning(f"bound {worst.bound:.8f} at a={worst.a:.6g} exceeds the Kahler-Einstein value {limit:.8f}")
    gaps = [r.gap for r in good]
    return SweepSummary(
        count=len(records),
        critical_a=find_critical_a(),
        switch_bracket=_switch_bracket(good, "branch"),
        rr_switch_bracket=_switch_bracket(good, "rr_branch"),
        max_gap=max(gaps),
        min_gap=min(gaps),
        limit_bound=good[-1].bound,
        bounded_by_kahler_einstein=bounded,
        errors=len(records) - len(good),
    )
