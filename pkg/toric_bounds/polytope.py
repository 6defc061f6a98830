import itertools
from functools import lru_cache
from math import factorial, gcd
from typing import FrozenSet, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import sympy as sp
from scipy.optimize import linprog

from toric_bounds.numerics import to_rational
from toric_bounds.types import (
    AffineFunctional,
    DelzantPolytope,
    DelzantReport,
    Facet,
    Point,
    Simplex,
    VertexCheck,
)
from toric_bounds.utils import (
    EmptyPolytopeError,
    ParameterRangeError,
    PolytopeError,
    UnboundedPolytopeError,
    logger,
)

BUILTIN_NAMES = ("cpn_simplex", "rectangle", "trapezoid")
_ALIASES = {"cpn": "cpn_simplex", "simplex": "cpn_simplex", "rect": "rectangle", "trap": "trapezoid"}


def make_functional(normal: Sequence[int], offset) -> Tuple[AffineFunctional, Optional[str]]:
    """Build psi(x) = <normal, x> + offset, reducing a non-primitive normal.

    Returns the functional and a warning message when a reduction happened.
    """
    normal = [int(v) for v in normal]
    offset = to_rational(offset)
    g = 0
    for v in normal:
        g = gcd(g, v)
    if g == 0:
        raise PolytopeError("facet normal must be nonzero")
    if g == 1:
        return AffineFunctional(normal=tuple(normal), offset=offset), None
    reduced = tuple(v // g for v in normal)
    message = f"normal {tuple(normal)} is not primitive; reduced to {reduced} (offset {offset} -> {offset / g})"
    logger.warning(message)
    return AffineFunctional(normal=reduced, offset=offset / g), message


def _check_bounded(facets: Sequence[AffineFunctional], dim: int) -> None:
    """Raise unless the normals positively span R^n (trivial recession cone)"""
    normals = np.array([f.normal for f in facets], dtype=float)
    for axis in range(dim):
        for sign in (1.0, -1.0):
            objective = np.zeros(dim)
            objective[axis] = -sign
            result = linprog(
                objective,
                A_ub=-normals,
                b_ub=np.zeros(len(facets)),
                bounds=[(-1.0, 1.0)] * dim,
                method="highs",
            )
            if result.status == 0 and -result.fun > 1e-9:
                logger.error(f"Recession direction found: {result.x}")
                raise UnboundedPolytopeError(result.x)


def _affine_rank(points: Sequence[Point]) -> int:
    if len(points) <= 1:
        return 0
    base = points[0]
    rows = [[c - b for c, b in zip(p, base)] for p in points[1:]]
    return sp.Matrix(rows).rank()


def enumerate_vertices(facets: Sequence[AffineFunctional], dim: int) -> List[Point]:
    """All points where `dim` functionals vanish and every functional is >= 0.

    Exact rational coordinates, deduplicated, sorted lexicographically.
    """
    if any(f.dim != dim for f in facets):
        raise PolytopeError(f"every facet normal must have length {dim}")
    _check_bounded(facets, dim)

    found = set()
    for combo in itertools.combinations(range(len(facets)), dim):
        matrix = sp.Matrix([facets[k].normal for k in combo])
        if matrix.det() == 0:
            continue
        rhs = sp.Matrix([-facets[k].offset for k in combo])
        point = tuple(sp.Rational(v) for v in matrix.LUsolve(rhs))
        if all(f.evaluate(point) >= 0 for f in facets):
            found.add(point)

    if not found:
        raise EmptyPolytopeError("no feasible vertex: the facet inequalities have no common solution")
    vertices = sorted(found)

    center = tuple(sum(coords, sp.Integer(0)) / len(vertices) for coords in zip(*vertices))
    if not all(f.evaluate(center) > 0 for f in facets):
        raise EmptyPolytopeError("polytope is not full-dimensional (empty interior)")
    return vertices


def build_polytope(facets: Iterable[AffineFunctional], dim: int, name: str = "polytope",
                   warnings: Sequence[str] = ()) -> DelzantPolytope:
    """Vertices and incidence for a facet list; redundant facets are dropped"""
    facets = list(facets)
    notes = list(warnings)
    vertices = enumerate_vertices(facets, dim)

    kept = []
    for k, functional in enumerate(facets):
        on_facet = [v for v in vertices if functional.evaluate(v) == 0]
        if len(on_facet) >= dim and _affine_rank(on_facet) == dim - 1:
            kept.append(functional)
        else:
            message = f"facet {k} ({functional}) supports no codimension-1 face; dropped as redundant"
            logger.warning(message)
            notes.append(message)

    incidence = tuple(
        tuple(i for i, v in enumerate(vertices) if functional.evaluate(v) == 0)
        for functional in kept
    )
    polytope = DelzantPolytope(
        name=name,
        dim=dim,
        facets=tuple(kept),
        vertices=tuple(vertices),
        incidence=incidence,
        warnings=tuple(notes),
    )
    report = check_delzant(polytope)
    if not report.passed:
        logger.warning(
            f"Polytope {name} fails the Delzant condition at {len(report.failures)} vertices; "
            f"integration and bounds still accept it"
        )
    logger.debug(f"Built {name}: {len(vertices)} vertices, {len(kept)} facets")
    return polytope


def check_delzant(p: DelzantPolytope) -> DelzantReport:
    checks = []
    for vertex_id, point in enumerate(p.vertices):
        active = p.active_facets(vertex_id)
        determinant = None
        ok = False
        if len(active) == p.dim:
            determinant = int(sp.Matrix([p.facets[k].normal for k in active]).det())
            ok = abs(determinant) == 1
        checks.append(VertexCheck(
            vertex_id=vertex_id,
            point=point,
            active_facets=active,
            determinant=determinant,
            ok=ok,
        ))
    return DelzantReport(polytope=p.name, dim=p.dim, checks=tuple(checks))


def _triangulate_face(
    p: DelzantPolytope, vertex_ids: FrozenSet[int], face_dim: int, apex: Optional[int] = None
) -> List[Tuple[int, ...]]:
    """Recursive fan (pulling) triangulation of a face given by its vertex set"""
    if face_dim == 0:
        return [(min(vertex_ids),)]
    if apex is None:
        # vertices are sorted, so the smallest id is the lexicographically smallest point
        apex = min(vertex_ids)
    elif apex not in vertex_ids:
        raise PolytopeError(f"apex {apex} is not a vertex of the face")
    subfaces = set()
    for facet_ids in p.incidence:
        sub = vertex_ids.intersection(facet_ids)
        if apex in sub or sub == vertex_ids or len(sub) < face_dim:
            continue
        if _affine_rank([p.vertices[i] for i in sorted(sub)]) == face_dim - 1:
            subfaces.add(frozenset(sub))
    cells = []
    for sub in sorted(subfaces, key=sorted):
        for cell in _triangulate_face(p, sub, face_dim - 1):
            cells.append((apex,) + cell)
    return cells


def _interior_measure(points: Sequence[Point]) -> sp.Rational:
    n = len(points[0])
    edges = sp.Matrix([[c - b for c, b in zip(q, points[0])] for q in points[1:]])
    return abs(edges.det()) / factorial(n)


def _facet_measure(points: Sequence[Point], normal: Sequence[int]) -> sp.Rational:
    """Integral Lebesgue measure of a facet simplex: |det(e_1..e_{n-1}, nu)| / (|nu|^2 (n-1)!)"""
    n = len(normal)
    rows = [[c - b for c, b in zip(q, points[0])] for q in points[1:]]
    rows.append([sp.Integer(v) for v in normal])
    norm_sq = sum(v * v for v in normal)
    return abs(sp.Matrix(rows).det()) / (norm_sq * factorial(n - 1))


@lru_cache(maxsize=512)
def triangulate_interior(p: DelzantPolytope) -> Tuple[Simplex, ...]:
    return fan_triangulation(p)


def fan_triangulation(p: DelzantPolytope, apex: Optional[int] = None) -> Tuple[Simplex, ...]:
    """Interior simplices coned from vertex `apex` (default: the lexicographically smallest)"""
    cells = _triangulate_face(p, frozenset(range(len(p.vertices))), p.dim, apex)
    simplices = []
    for cell in cells:
        points = tuple(p.vertices[i] for i in cell)
        simplices.append(Simplex(dim=p.dim, vertices=points, measure_scale=_interior_measure(points)))
    return tuple(simplices)


@lru_cache(maxsize=512)
def facet_decomposition(p: DelzantPolytope) -> Tuple[Facet, ...]:
    facets = []
    for k, (functional, vertex_ids) in enumerate(zip(p.facets, p.incidence)):
        cells = _triangulate_face(p, frozenset(vertex_ids), p.dim - 1)
        simplices = []
        for cell in cells:
            points = tuple(p.vertices[i] for i in cell)
            simplices.append(Simplex(
                dim=p.dim - 1,
                vertices=points,
                measure_scale=_facet_measure(points, functional.normal),
            ))
        facets.append(Facet(index=k, functional=functional, vertex_ids=vertex_ids, simplices=tuple(simplices)))
    return tuple(facets)


def face_measure(points: Sequence[Point], normal: Sequence[int]) -> sp.Rational:
    """Integral Lebesgue measure of a simplex lying in a facet hyperplane"""
    if len(points) != len(normal):
        raise PolytopeError(
            f"only codimension-1 faces carry a facet measure: got {len(points) - 1}-simplex in R^{len(normal)}"
        )
    return _facet_measure(points, normal)


def volume(p: DelzantPolytope) -> sp.Rational:
    return sum((s.measure_scale for s in triangulate_interior(p)), sp.Integer(0))


def boundary_measure(p: DelzantPolytope) -> sp.Rational:
    return sum((f.measure for f in facet_decomposition(p)), sp.Integer(0))


def builtin_polytope(name: str, param=None) -> DelzantPolytope:
    """Builtin families: cpn_simplex(n), rectangle(a), trapezoid(a)"""
    key = _ALIASES.get(name, name)
    if key == "cpn_simplex":
        n_exact = sp.Integer(2) if param is None else to_rational(param)
        if n_exact.q != 1 or n_exact < 1:
            raise ParameterRangeError("n", param, "integer n >= 1")
        n = int(n_exact)
        facets = [AffineFunctional(normal=tuple(int(i == j) for j in range(n)), offset=1) for i in range(n)]
        facets.append(AffineFunctional(normal=(-1,) * n, offset=1))
        return build_polytope(facets, n, name=f"cpn_simplex({n})")

    if key == "rectangle":
        a = to_rational(1 if param is None else param)
        if a < 1:
            raise ParameterRangeError("a", param, "[1, oo)")
        facets = [
            AffineFunctional(normal=(1, 0), offset=a),
            AffineFunctional(normal=(-1, 0), offset=a),
            AffineFunctional(normal=(0, 1), offset=1 / a),
            AffineFunctional(normal=(0, -1), offset=1 / a),
        ]
        return build_polytope(facets, 2, name=f"rectangle({a})")

    if key == "trapezoid":
        a = to_rational(1 if param is None else param)
        if not (-1 < a <= 2):
            raise ParameterRangeError("a", param, "(-1, 2)")
        notes = []
        if a == 2:
            message = "trapezoid(2) is the boundary of the range: a+x1+x2 is redundant and the polytope is cpn_simplex(2)"
            logger.warning(message)
            notes.append(message)
        facets = [
            AffineFunctional(normal=(1, 0), offset=1),
            AffineFunctional(normal=(0, 1), offset=1),
            AffineFunctional(normal=(1, 1), offset=a),
            AffineFunctional(normal=(-1, -1), offset=1),
        ]
        return build_polytope(facets, 2, name=f"trapezoid({a})", warnings=notes)

    raise ParameterRangeError("name", name, f"one of {', '.join(BUILTIN_NAMES)}")


def dilate(p: DelzantPolytope, t) -> DelzantPolytope:
    """Image of p under x -> t x"""
    t = to_rational(t)
    if t <= 0:
        raise ParameterRangeError("t", t, "(0, oo)")
    facets = [AffineFunctional(normal=f.normal, offset=f.offset * t) for f in p.facets]
    return build_polytope(facets, p.dim, name=f"{p.name}*{t}")


def transform(p: DelzantPolytope, matrix: Sequence[Sequence[int]], shift: Optional[Sequence] = None) -> DelzantPolytope:
    """Image of p under the lattice-preserving map x -> U x + shift (det U = +-1)"""
    u = sp.Matrix(matrix)
    if u.shape != (p.dim, p.dim) or abs(u.det()) != 1:
        raise PolytopeError(f"transform needs a unimodular {p.dim}x{p.dim} integer matrix")
    shift_vec = sp.Matrix([to_rational(s) for s in (shift or [0] * p.dim)])
    inverse = u.inv()
    facets = []
    for f in p.facets:
        normal = sp.Matrix([f.normal]) * inverse
        offset = f.offset - (normal * shift_vec)[0, 0]
        facets.append(AffineFunctional(normal=tuple(int(v) for v in normal), offset=offset))
    return build_polytope(facets, p.dim, name=f"{p.name}@U")
