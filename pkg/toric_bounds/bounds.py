"""Upper bounds on the first torus-invariant eigenvalue from polytope moments.

Both pipelines test the Rayleigh quotient on centered linear functions
phi = sum b_i (x_i - c_i). The Dirichlet energy comes from integrating
F = (b.x)^2 / 2 by parts, so only polytope moments are needed:

    int_P u^ij F_ij dmu = int_dP 2F dsigma - int_P S F dmu
"""
from typing import List, Optional, Sequence, Tuple

import numpy as np
import sympy as sp

from toric_bounds.integrate import moments_up_to
from toric_bounds.numerics import SymMatrix, generalized_symmetric_eigen, lowest_eigenvector, solve_exact, to_rational
from toric_bounds.types import BoundResult, DelzantPolytope, MomentTable, RationalMatrix, ScalarAffine
from toric_bounds.utils import ParameterRangeError, logger

CURVATURE_CAVEAT = (
    "valid only if the metric has non-negative scalar curvature; "
    "this cannot be checked from the polytope alone"
)


def _unit(n: int, i: int) -> Tuple[int, ...]:
    return tuple(int(i == j) for j in range(n))


def _plus(*alphas: Sequence[int]) -> Tuple[int, ...]:
    return tuple(sum(parts) for parts in zip(*alphas))


def centered_second_moments(table: MomentTable) -> RationalMatrix:
    """D_ij = int_P (x_i - c_i)(x_j - c_j) dmu with c the centroid"""
    n = table.dim
    m0 = table.volume
    first = [table.m(_unit(n, i)) for i in range(n)]
    return tuple(
        tuple(table.m(_plus(_unit(n, i), _unit(n, j))) - first[i] * first[j] / m0 for j in range(n))
        for i in range(n)
    )


def boundary_second_moments(table: MomentTable) -> RationalMatrix:
    """N_ij = int_dP x_i x_j dsigma, uncentered"""
    n = table.dim
    return tuple(tuple(table.b(_plus(_unit(n, i), _unit(n, j))) for j in range(n)) for i in range(n))


def pencil_minimum(numerator: RationalMatrix, denominator: RationalMatrix,
                   warnings: Sequence[str] = ()) -> BoundResult:
    """Smallest generalized eigenvalue of (N, D) and its deterministic eigenvector"""
    pairs = generalized_symmetric_eigen(SymMatrix.from_exact(numerator), SymMatrix.from_exact(denominator))
    b = lowest_eigenvector(pairs)
    return BoundResult(
        value=float(pairs.eigenvalues[0]),
        minimizer_b=tuple(float(v) for v in b),
        numerator_matrix=numerator,
        denominator_matrix=denominator,
        eigenvalues=tuple(float(v) for v in pairs.eigenvalues),
        warnings=tuple(warnings),
    )


def theorem1_bound(p: DelzantPolytope) -> BoundResult:
    """Bound for metrics of non-negative scalar curvature: drop the S term"""
    table = moments_up_to(p, 2)
    result = pencil_minimum(
        boundary_second_moments(table),
        centered_second_moments(table),
        warnings=tuple(p.warnings) + (CURVATURE_CAVEAT,),
    )
    logger.info(f"Non-negative curvature bound on {p.name}: {result.value:.12g}")
    return result


def solve_extremal_S(p: DelzantPolytope) -> ScalarAffine:
    """Affine S(x) = a0 + sum a_k x_k with int_P S {1, x_j} dmu = 2 int_dP {1, x_j} dsigma"""
    table = moments_up_to(p, 2)
    n = p.dim
    basis = [(0,) * n] + [_unit(n, i) for i in range(n)]
    gram = [[table.m(_plus(r, c)) for c in basis] for r in basis]
    rhs = [2 * table.b(r) for r in basis]
    coefficients = solve_exact(gram, rhs)
    scalar = ScalarAffine(a0=coefficients[0], grad=tuple(coefficients[1:]))
    logger.debug(f"Extremal scalar curvature on {p.name}: a0={scalar.a0}, grad={scalar.grad}")
    return scalar


def extremal_numerator(table: MomentTable, scalar: ScalarAffine) -> RationalMatrix:
    """N_ij = int_dP x_i x_j dsigma - 1/2 int_P S x_i x_j dmu"""
    n = table.dim
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            ij = _plus(_unit(n, i), _unit(n, j))
            curvature = scalar.a0 * table.m(ij) + sum(
                (scalar.grad[k] * table.m(_plus(ij, _unit(n, k))) for k in range(n)), sp.Integer(0)
            )
            row.append(table.b(ij) - curvature / 2)
        rows.append(tuple(row))
    return tuple(rows)


def theorem2_bound(p: DelzantPolytope, scalar: Optional[ScalarAffine] = None) -> BoundResult:
    """Bound for an extremal metric, whose scalar curvature is the affine S solved from moments"""
    scalar = solve_extremal_S(p) if scalar is None else scalar
    table = moments_up_to(p, 3)
    notes = list(p.warnings)
    result = pencil_minimum(extremal_numerator(table, scalar), centered_second_moments(table))
    if result.value <= 0:
        message = f"extremal bound {result.value:.6g} is not positive: no extremal metric in this class satisfies it"
        logger.warning(message)
        notes.append(message)
    logger.info(f"Extremal bound on {p.name}: {result.value:.12g}")
    return result.model_copy(update={"warnings": tuple(notes)})


def rescale_bound(result: BoundResult, c) -> BoundResult:
    """Bound for the metric c*g: eigenvalues scale by 1/c"""
    c = float(c)
    if not c > 0:
        raise ParameterRangeError("c", c, "(0, oo)")
    return result.model_copy(update={
        "value": result.value / c,
        "eigenvalues": tuple(v / c for v in result.eigenvalues),
        "scale": result.scale * c,
    })


def product_sphere_spectrum(a, cutoff: int) -> List[float]:
    """Invariant spectrum of the product of spheres: k(k+1)/a + a l(l+1), k, l <= cutoff"""
    a = to_rational(a)
    if a < 1:
        raise ParameterRangeError("a", a, "[1, oo)")
    if cutoff < 1:
        raise ParameterRangeError("cutoff", cutoff, ">= 1")
    values = {k * (k + 1) / a + a * l * (l + 1) for k in range(cutoff + 1) for l in range(cutoff + 1)}
    return [float(v) for v in sorted(values)]


def first_nonzero(values: Sequence[float], atol: float = 1e-12) -> float:
    positive = [v for v in values if v > atol]
    if not positive:
        raise ParameterRangeError("values", list(values), "at least one positive entry")
    return min(positive)


def quotient(result: BoundResult, b: Sequence[float]) -> float:
    """b^T N b / b^T D b"""
    b = np.asarray(b, dtype=float)
    numerator = np.array(result.numerator_matrix, dtype=float)
    denominator = np.array(result.denominator_matrix, dtype=float)
    return float(b @ numerator @ b) / float(b @ denominator @ b)
