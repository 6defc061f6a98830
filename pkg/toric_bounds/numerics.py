"""Numerical kernels: exact rationals, generalized symmetric eigenproblems,
Gauss-Legendre / Duffy quadrature, bisection and finite-difference stencils.

Exact arithmetic is sympy's; floating-point linear algebra goes through
scipy's LAPACK bindings.
"""
import re
from functools import lru_cache
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
import sympy as sp
from scipy import linalg, optimize
from scipy.linalg import lapack

from toric_bounds.settings import settings
from toric_bounds.types import EigenPairs, _as_rational
from toric_bounds.utils import (
    BracketError,
    CholeskyError,
    InputFormatError,
    NumericsError,
    ParameterRangeError,
    SingularSystemError,
    logger,
)

Rational = sp.Rational

_RATIONAL_PATTERN = re.compile(r"^\s*([+-]?\d+)(?:\s*/\s*(\d+))?\s*$")


def parse_rational(text: str) -> sp.Rational:
    """Parse a decimal-free "p/q" (or integer) string"""
    match = _RATIONAL_PATTERN.match(text)
    if not match:
        raise InputFormatError(f"'{text}' is not a decimal-free p/q rational")
    numerator = int(match.group(1))
    denominator = int(match.group(2)) if match.group(2) is not None else 1
    if denominator == 0:
        raise InputFormatError(f"'{text}' has a zero denominator")
    return sp.Rational(numerator, denominator)


def format_rational(value) -> str:
    r = sp.Rational(value)
    return f"{r.p}" if r.q == 1 else f"{r.p}/{r.q}"


def to_rational(value) -> sp.Rational:
    """Exact rational from int, str, Fraction, sympy number or float.

    Floats are read through their shortest decimal representation.
    """
    if isinstance(value, str):
        return parse_rational(value) if "/" in value or "." not in value else sp.Rational(value)
    return _as_rational(value)


def solve_exact(matrix: Sequence[Sequence], rhs: Sequence) -> Tuple[sp.Rational, ...]:
    """Exact solution of a square rational linear system"""
    m = sp.Matrix(matrix)
    if m.det() == 0:
        raise SingularSystemError(f"singular {m.rows}x{m.cols} system")
    solution = m.LUsolve(sp.Matrix(rhs))
    return tuple(sp.Rational(v) for v in solution)


class SymMatrix:
    """Symmetric float matrix stored as its packed upper triangle"""

    def __init__(self, order: int, packed: np.ndarray):
        packed = np.asarray(packed, dtype=float)
        if packed.shape != (order * (order + 1) // 2,):
            raise NumericsError(f"packed storage of order {order} needs {order * (order + 1) // 2} entries")
        self.order = order
        self.packed = packed

    @classmethod
    def from_dense(cls, matrix, atol: float = 1e-12) -> "SymMatrix":
        dense = np.asarray(matrix, dtype=float)
        if dense.ndim != 2 or dense.shape[0] != dense.shape[1]:
            raise NumericsError(f"expected a square matrix, got shape {dense.shape}")
        scale = max(1.0, float(np.max(np.abs(dense))) if dense.size else 1.0)
        if not np.allclose(dense, dense.T, rtol=0.0, atol=atol * scale):
            raise NumericsError("matrix is not symmetric")
        order = dense.shape[0]
        return cls(order, dense[np.triu_indices(order)])

    @classmethod
    def from_exact(cls, rows) -> "SymMatrix":
        exact = sp.Matrix(rows)
        if exact != exact.T:
            raise NumericsError("exact matrix is not symmetric")
        return cls.from_dense(np.array(exact.tolist(), dtype=float), atol=0.0)

    def dense(self) -> np.ndarray:
        out = np.zeros((self.order, self.order))
        out[np.triu_indices(self.order)] = self.packed
        return out + np.triu(out, 1).T


MatrixLike = Union[SymMatrix, np.ndarray, Sequence[Sequence[float]]]


def _dense(matrix: MatrixLike) -> np.ndarray:
    if isinstance(matrix, SymMatrix):
        return matrix.dense()
    return SymMatrix.from_dense(matrix).dense()


def _leading_sign(vectors: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Flip columns so the first non-negligible component is positive"""
    out = vectors.copy()
    for j in range(out.shape[1]):
        column = out[:, j]
        significant = np.flatnonzero(np.abs(column) > tol * max(1.0, np.max(np.abs(column))))
        if significant.size and column[significant[0]] < 0:
            out[:, j] = -column
    return out


def generalized_symmetric_eigen(A: MatrixLike, B: MatrixLike) -> EigenPairs:
    """Solve A v = lambda B v for symmetric A and positive definite B.

    Cholesky factor B = L L^T, diagonalize L^-1 A L^-T, back-substitute.
    Eigenvalues ascending; eigenvectors unit length with positive leading
    component.
    """
    a = _dense(A)
    b = _dense(B)
    if a.shape != b.shape:
        raise NumericsError(f"pencil shapes differ: {a.shape} vs {b.shape}")
    order = a.shape[0]

    factor, info = lapack.dpotrf(b, lower=1, clean=1)
    if info > 0:
        logger.error(f"Cholesky failed at pivot {info} of {order}")
        raise CholeskyError(pivot=int(info), order=order)
    if info < 0:
        raise NumericsError(f"LAPACK dpotrf rejected argument {-info}")
    lower = np.tril(factor)

    reduced = linalg.solve_triangular(lower, a, lower=True)
    reduced = linalg.solve_triangular(lower, reduced.T, lower=True).T
    reduced = 0.5 * (reduced + reduced.T)

    eigenvalues, y = linalg.eigh(reduced)
    vectors = linalg.solve_triangular(lower.T, y, lower=False)
    vectors = vectors / np.linalg.norm(vectors, axis=0)
    vectors = _leading_sign(vectors)

    residuals = np.linalg.norm(a @ vectors - (b @ vectors) * eigenvalues, axis=0)
    bound = settings.EIGEN_RESIDUAL_TOL * max(np.linalg.norm(a), np.max(np.abs(eigenvalues)) * np.linalg.norm(b), 1e-300)
    if np.any(residuals > bound):
        logger.warning(f"Eigen residual {residuals.max():.3e} exceeds {bound:.3e}")

    return EigenPairs(eigenvalues=eigenvalues, eigenvectors=vectors, residuals=residuals)


def lowest_eigenvector(pairs: EigenPairs, rtol: Optional[float] = None) -> np.ndarray:
    """Deterministic eigenvector for the smallest eigenvalue.

    When the smallest eigenvalue is multiple, returns the unit vector of its
    eigenspace with the largest absolute first component (the normalized
    projection of e_1), falling back to e_2, e_3, ... when that projection
    vanishes.
    """
    rtol = settings.TIE_RTOL if rtol is None else rtol
    values = pairs.eigenvalues
    spread = max(1.0, float(np.max(np.abs(values))))
    cluster = np.flatnonzero(values <= values[0] + rtol * spread)
    if cluster.size == 1:
        return pairs.eigenvectors[:, 0]

    basis, _ = np.linalg.qr(pairs.eigenvectors[:, cluster])
    for k in range(basis.shape[0]):
        projection = basis @ basis[k, :]
        norm = np.linalg.norm(projection)
        if norm > 1e-8:
            vector = projection / norm
            return _leading_sign(vector[:, None])[:, 0]
    return pairs.eigenvectors[:, 0]


@lru_cache(maxsize=64)
def gauss_legendre(order: int) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [-1, 1]"""
    if not 1 <= order <= 256:
        raise ParameterRangeError("order", order, "[1, 256]")
    nodes, weights = np.polynomial.legendre.leggauss(order)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def duffy_rule(order: int, apex, p1, p2, radial: Tuple[float, float] = (0.0, 1.0)) -> Tuple[np.ndarray, np.ndarray]:
    """Collapsed tensor Gauss rule x = apex + u ((1 - v)(p1 - apex) + v (p2 - apex)).

    v runs over [0, 1] and u over `radial`. radial=(0, 1) is the whole
    triangle; a sub-interval is the slab of it between two lines parallel to
    p1p2. The Jacobian u |det(p1 - apex, p2 - apex)| is folded into the weights.
    """
    u0, u1 = radial
    if not 0.0 <= u0 < u1 <= 1.0:
        raise ParameterRangeError("radial", radial, "0 <= u0 < u1 <= 1")
    apex, d1, d2 = (np.asarray(p, dtype=float) for p in (apex, p1, p2))
    d1, d2 = d1 - apex, d2 - apex
    nodes, weights = gauss_legendre(order)

    u = u0 + 0.5 * (u1 - u0) * (nodes + 1.0)
    wu = 0.5 * (u1 - u0) * weights
    v = 0.5 * (nodes + 1.0)
    wv = 0.5 * weights

    uu, vv = np.meshgrid(u, v, indexing="ij")
    ww = np.outer(wu, wv)
    uu, vv, ww = uu.ravel(), vv.ravel(), ww.ravel()

    determinant = abs(d1[0] * d2[1] - d1[1] * d2[0])
    points = apex + uu[:, None] * (np.outer(1.0 - vv, d1) + np.outer(vv, d2))
    return points, ww * uu * determinant


def duffy_triangle(order: int, triangle) -> Tuple[np.ndarray, np.ndarray]:
    """Collapsed tensor Gauss rule on a triangle, collapsed at its second vertex.

    Returns nodes of shape (order**2, 2) and weights summing to the area.
    """
    p0, p1, p2 = triangle
    return duffy_rule(order, p1, p0, p2)


def bisect_root(f: Callable[[float], float], lo: float, hi: float, tol: Optional[float] = None) -> float:
    tol = settings.BISECTION_TOL if tol is None else tol
    f_lo, f_hi = f(lo), f(hi)
    if not (np.isfinite(f_lo) and np.isfinite(f_hi)) or f_lo * f_hi > 0:
        raise BracketError(f"no sign change on [{lo}, {hi}]: f(lo)={f_lo}, f(hi)={f_hi}")
    if f_lo == 0:
        return lo
    if f_hi == 0:
        return hi
    return optimize.bisect(f, lo, hi, xtol=tol, maxiter=500)


def second_partial(f: Callable[[np.ndarray], np.ndarray], x, i: int, j: int, h: float) -> np.ndarray:
    """Central-difference approximation of d^2 f / dx_i dx_j, O(h^2)"""
    x = np.asarray(x, dtype=float)
    e_i = np.zeros_like(x)
    e_i[i] = h
    if i == j:
        return (np.asarray(f(x + e_i)) - 2.0 * np.asarray(f(x)) + np.asarray(f(x - e_i))) / h ** 2
    e_j = np.zeros_like(x)
    e_j[j] = h
    return (
        np.asarray(f(x + e_i + e_j))
        - np.asarray(f(x + e_i - e_j))
        - np.asarray(f(x - e_i + e_j))
        + np.asarray(f(x - e_i - e_j))
    ) / (4.0 * h ** 2)
