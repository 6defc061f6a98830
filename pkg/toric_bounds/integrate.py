"""Exact integration of polynomials over polytopes and their boundaries.

Interior integrals use Lebesgue measure; boundary integrals use the integral
Lebesgue measure carried by each facet simplex's `measure_scale`.
"""
import itertools
from functools import lru_cache
from math import factorial
from typing import Dict, Iterable, List, Sequence, Tuple, Union

import numpy as np
import sympy as sp

from toric_bounds.polytope import facet_decomposition, triangulate_interior
from toric_bounds.settings import settings
from toric_bounds.types import DelzantPolytope, MomentTable, MonteCarloEstimate, MultiIndex, Simplex
from toric_bounds.utils import NumericsError, ParameterRangeError, logger

PolynomialLike = Union[sp.Poly, sp.Expr, int]


@lru_cache(maxsize=16)
def coordinate_symbols(n: int) -> Tuple[sp.Symbol, ...]:
    return tuple(sp.symbols(f"x1:{n + 1}"))


def as_polynomial(f: PolynomialLike, n: int) -> sp.Poly:
    """Polynomial in x1..xn with exact rational coefficients"""
    gens = coordinate_symbols(n)
    if isinstance(f, sp.Poly):
        if f.gens != gens:
            f = sp.Poly(f.as_expr(), *gens)
        return f.set_domain(sp.QQ)
    return sp.Poly(sp.sympify(f), *gens, domain=sp.QQ)


def monomial(alpha: MultiIndex) -> sp.Poly:
    gens = coordinate_symbols(len(alpha))
    return sp.Poly(sp.Mul(*(g ** e for g, e in zip(gens, alpha))), *gens, domain=sp.QQ)


def multi_indices(n: int, degree: int) -> List[MultiIndex]:
    """All exponents with |alpha| <= degree, ordered by degree then lexicographically"""
    indices = [alpha for alpha in itertools.product(range(degree + 1), repeat=n) if sum(alpha) <= degree]
    return sorted(indices, key=lambda alpha: (sum(alpha), tuple(-e for e in alpha)))


def evaluate(f: sp.Poly, point: Sequence) -> sp.Rational:
    total = sp.Integer(0)
    for alpha, coeff in f.terms():
        term = sp.Rational(coeff)
        for x, e in zip(point, alpha):
            if e:
                term *= x ** e
        total += term
    return total


def translate(f: PolynomialLike, shift: Sequence, n: int) -> sp.Poly:
    """The polynomial x -> f(x - shift), by coefficient shifting"""
    poly = as_polynomial(f, n)
    gens = coordinate_symbols(n)
    substituted = poly.as_expr().subs({g: g - sp.Rational(c) for g, c in zip(gens, shift)}, simultaneous=True)
    return as_polynomial(sp.expand(substituted), n)


class _BarycentricExpander:
    """x = sum_i lambda_i s_i on one simplex, with cached powers of each coordinate form"""

    def __init__(self, simplex: Simplex):
        self.simplex = simplex
        self.d = simplex.dim
        self.lambdas = sp.symbols(f"l0:{self.d + 1}")
        self.forms = [
            sp.Poly(sum(v[j] * lam for v, lam in zip(simplex.vertices, self.lambdas)), *self.lambdas, domain=sp.QQ)
            for j in range(simplex.ambient_dim)
        ]
        self.one = sp.Poly(1, *self.lambdas, domain=sp.QQ)
        self._powers: Dict[Tuple[int, int], sp.Poly] = {}

    def _power(self, j: int, e: int) -> sp.Poly:
        key = (j, e)
        if key not in self._powers:
            self._powers[key] = self.forms[j] ** e
        return self._powers[key]

    def _dirichlet(self, term: sp.Poly) -> sp.Rational:
        # int_simplex lambda^k = vol * d! prod(k_i!) / (d + |k|)!
        total = sp.Integer(0)
        for k, coeff in term.terms():
            numerator = factorial(self.d)
            for e in k:
                numerator *= factorial(e)
            total += sp.Rational(coeff) * sp.Rational(numerator, factorial(self.d + sum(k)))
        return total

    def integrate(self, f: sp.Poly) -> sp.Rational:
        degree = f.total_degree()
        if degree > settings.DEGREE_CAP:
            raise ParameterRangeError("degree", degree, f"<= {settings.DEGREE_CAP} (DEGREE_CAP)")
        total = sp.Integer(0)
        for alpha, coeff in f.terms():
            if coeff == 0:
                continue
            term = self.one
            for j, e in enumerate(alpha):
                if e:
                    term = term * self._power(j, e)
            total += sp.Rational(coeff) * self._dirichlet(term)
        return total * self.simplex.measure_scale


def integrate_polynomial_simplex(s: Simplex, f: PolynomialLike) -> sp.Rational:
    return _BarycentricExpander(s).integrate(as_polynomial(f, s.ambient_dim))


def integrate_monomial_simplex(s: Simplex, alpha: MultiIndex) -> sp.Rational:
    """Exact int_s x^alpha under the simplex's measure (barycentric / Dirichlet formula)"""
    if len(alpha) != s.ambient_dim:
        raise ParameterRangeError("alpha", alpha, f"multi-index of length {s.ambient_dim}")
    return _BarycentricExpander(s).integrate(monomial(alpha))


def brion_linear_power(s: Simplex, phi: PolynomialLike, q: int) -> sp.Rational:
    """int_s phi^q for an affine phi, summing products of vertex values.

    vol(s) * d! q! / (q + d)! * sum_{|k| = q} prod_i phi(s_i)^{k_i}
    """
    poly = as_polynomial(phi, s.ambient_dim)
    if poly.total_degree() > 1:
        raise ParameterRangeError("phi", poly.as_expr(), "affine (degree <= 1)")
    if q < 0:
        raise ParameterRangeError("q", q, "q >= 0")
    values = [evaluate(poly, v) for v in s.vertices]
    complete_sum = sp.Integer(0)
    for combo in itertools.combinations_with_replacement(range(len(values)), q):
        product = sp.Integer(1)
        for i in combo:
            product *= values[i]
        complete_sum += product
    d = s.dim
    return s.measure_scale * sp.Rational(factorial(d) * factorial(q), factorial(q + d)) * complete_sum


def integrate_over_polytope(p: DelzantPolytope, f: PolynomialLike) -> sp.Rational:
    poly = as_polynomial(f, p.dim)
    return sum((_BarycentricExpander(s).integrate(poly) for s in triangulate_interior(p)), sp.Integer(0))


def integrate_over_boundary(p: DelzantPolytope, f: PolynomialLike) -> sp.Rational:
    poly = as_polynomial(f, p.dim)
    total = sp.Integer(0)
    for facet in facet_decomposition(p):
        for s in facet.simplices:
            total += _BarycentricExpander(s).integrate(poly)
    return total


def _moments(simplices: Iterable[Simplex], indices: List[MultiIndex]) -> Dict[MultiIndex, sp.Rational]:
    moments = {alpha: sp.Integer(0) for alpha in indices}
    for s in simplices:
        expander = _BarycentricExpander(s)
        for alpha in indices:
            moments[alpha] += expander.integrate(monomial(alpha))
    return moments


@lru_cache(maxsize=256)
def _moment_table(p: DelzantPolytope, degree: int) -> MomentTable:
    indices = multi_indices(p.dim, degree)
    interior = _moments(triangulate_interior(p), indices)
    boundary_simplices = [s for facet in facet_decomposition(p) for s in facet.simplices]
    boundary = _moments(boundary_simplices, indices)
    logger.debug(f"Moments of {p.name} to degree {degree}: {len(indices)} monomials")
    return MomentTable(polytope=p.name, degree=degree, interior=interior, boundary=boundary)


def moments_up_to(p: DelzantPolytope, degree: int) -> MomentTable:
    """Interior and boundary moments of every monomial with |alpha| <= degree.

    Planar tables are computed once to degree 4 (the Gram matrices need it)
    and restricted for smaller requests.
    """
    if not 0 <= degree <= settings.DEGREE_CAP:
        raise ParameterRangeError("degree", degree, f"[0, {settings.DEGREE_CAP}] (DEGREE_CAP)")
    shared = min(4, settings.DEGREE_CAP) if p.dim <= 2 else degree
    full = _moment_table(p, max(degree, shared))
    if full.degree == degree:
        return full
    return MomentTable(
        polytope=full.polytope,
        degree=degree,
        interior={alpha: v for alpha, v in full.interior.items() if sum(alpha) <= degree},
        boundary={alpha: v for alpha, v in full.boundary.items() if sum(alpha) <= degree},
    )


def centroid(p: DelzantPolytope) -> Tuple[sp.Rational, ...]:
    table = moments_up_to(p, 1)
    unit = [tuple(int(i == j) for j in range(p.dim)) for i in range(p.dim)]
    return tuple(table.m(e) / table.volume for e in unit)


def cpn_reference_moments(n: int) -> Dict[str, sp.Rational]:
    """Closed forms for the simplex with vertices (-1,..,n,..,-1) and (-1,..,-1)"""
    if n < 1:
        raise ParameterRangeError("n", n, "n >= 1")
    volume = sp.Rational((n + 1) ** n, factorial(n))
    return {
        "volume": volume,
        "first_moment": sp.Integer(0),
        "second_moment": volume * sp.Rational(n, n + 2),
        "complete_sum": sp.Rational(n * (n + 1), 2),
        "facet_volume": sp.Rational((n + 1) ** (n - 1), factorial(n - 1)),
        "boundary_second_moment": sp.Rational(n * (n + 1) ** (n + 1), factorial(n + 1)),
    }


def monte_carlo_estimate(p: DelzantPolytope, f: PolynomialLike, samples: int, seed: int) -> MonteCarloEstimate:
    """Rejection-sampling estimate of int_P f dmu inside the bounding box"""
    if samples < 1000:
        raise ParameterRangeError("samples", samples, ">= 1000")
    poly = as_polynomial(f, p.dim)
    rng = np.random.default_rng(seed)

    vertices = p.vertices_float()
    lo, hi = vertices.min(axis=0), vertices.max(axis=0)
    box_volume = float(np.prod(hi - lo))
    points = rng.uniform(lo, hi, size=(samples, p.dim))

    normals = np.array([f_.normal for f_ in p.facets], dtype=float)
    offsets = np.array([float(f_.offset) for f_ in p.facets])
    inside = np.all(points @ normals.T + offsets >= 0.0, axis=1)
    accepted = int(inside.sum())
    if accepted == 0:
        raise NumericsError(f"no sample of {samples} landed inside {p.name}")

    integrand = sp.lambdify(coordinate_symbols(p.dim), poly.as_expr(), "numpy")
    values = np.broadcast_to(np.asarray(integrand(*points.T), dtype=float), (samples,))
    contributions = np.where(inside, values, 0.0) * box_volume

    estimate = float(contributions.mean())
    stderr = float(contributions.std(ddof=1) / np.sqrt(samples))
    logger.debug(f"Monte Carlo on {p.name}: {accepted}/{samples} accepted, estimate {estimate:.6g} +- {stderr:.2g}")
    return MonteCarloEstimate(value=estimate, stderr=stderr, accepted=accepted, samples=samples, seed=seed)
