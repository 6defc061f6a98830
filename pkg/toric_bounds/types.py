from math import gcd
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

import numpy as np
import sympy as sp
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

Point = Tuple[sp.Rational, ...]
MultiIndex = Tuple[int, ...]
RationalMatrix = Tuple[Tuple[sp.Rational, ...], ...]


def _as_rational(value: Any) -> sp.Rational:
    if isinstance(value, sp.Rational):
        return value
    if isinstance(value, float):
        # shortest decimal repr, so 0.5 -> 1/2 and 1.99 -> 199/100
        return sp.Rational(repr(value))
    result = sp.Rational(value)
    if not isinstance(result, sp.Rational):
        raise ValueError(f"{value!r} is not a rational number")
    return result


class ExactModel(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


class AffineFunctional(ExactModel):
    """psi(x) = <normal, x> + offset, positive on the polytope interior"""
    normal: Tuple[int, ...]
    offset: sp.Rational

    @field_validator("offset", mode="before")
    @classmethod
    def _coerce_offset(cls, value: Any) -> sp.Rational:
        return _as_rational(value)

    @field_validator("normal")
    @classmethod
    def _primitive_normal(cls, normal: Tuple[int, ...]) -> Tuple[int, ...]:
        if not normal or all(v == 0 for v in normal):
            raise ValueError("facet normal must be nonzero")
        g = 0
        for v in normal:
            g = gcd(g, v)
        if g != 1:
            raise ValueError(f"facet normal {normal} is not primitive (gcd {g})")
        return normal

    @property
    def dim(self) -> int:
        return len(self.normal)

    def evaluate(self, point) -> sp.Rational:
        return sum((sp.Integer(v) * x for v, x in zip(self.normal, point)), sp.Integer(0)) + self.offset

    def __str__(self) -> str:
        terms = []
        for i, v in enumerate(self.normal):
            if v == 0:
                continue
            coeff = "" if abs(v) == 1 else f"{abs(v)}*"
            sign = "-" if v < 0 else "+"
            terms.append(f"{sign} {coeff}x{i + 1}")
        return f"{self.offset} " + " ".join(terms)


class Simplex(ExactModel):
    dim: int
    vertices: Tuple[Point, ...]
    measure_scale: sp.Rational

    @model_validator(mode="after")
    def _check_shape(self) -> "Simplex":
        if len(self.vertices) != self.dim + 1:
            raise ValueError(f"a {self.dim}-simplex needs {self.dim + 1} vertices, got {len(self.vertices)}")
        if not self.measure_scale > 0:
            raise ValueError("simplex measure must be positive")
        return self

    @property
    def ambient_dim(self) -> int:
        return len(self.vertices[0])


class Facet(ExactModel):
    index: int
    functional: AffineFunctional
    vertex_ids: Tuple[int, ...]
    simplices: Tuple[Simplex, ...]

    @property
    def measure(self) -> sp.Rational:
        return sum((s.measure_scale for s in self.simplices), sp.Integer(0))


class DelzantPolytope(ExactModel):
    name: str
    dim: int = Field(gt=0)
    facets: Tuple[AffineFunctional, ...]
    vertices: Tuple[Point, ...]
    incidence: Tuple[Tuple[int, ...], ...]
    warnings: Tuple[str, ...] = ()

    @model_validator(mode="after")
    def _check_consistency(self) -> "DelzantPolytope":
        if len(self.incidence) != len(self.facets):
            raise ValueError("incidence must list one vertex set per facet")
        for k, vertex_ids in enumerate(self.incidence):
            if not vertex_ids:
                raise ValueError(f"facet {k} supports no vertex")
        return self

    def active_facets(self, vertex_id: int) -> Tuple[int, ...]:
        return tuple(k for k, ids in enumerate(self.incidence) if vertex_id in ids)

    def vertices_float(self) -> np.ndarray:
        return np.array([[float(c) for c in v] for v in self.vertices], dtype=float)


class VertexCheck(ExactModel):
    vertex_id: int
    point: Point
    active_facets: Tuple[int, ...]
    determinant: Optional[int] = None
    ok: bool


class DelzantReport(ExactModel):
    polytope: str
    dim: int
    checks: Tuple[VertexCheck, ...]

    @property
    def passed(self) -> bool:
        return all(check.ok for check in self.checks)

    @property
    def failures(self) -> List[VertexCheck]:
        return [check for check in self.checks if not check.ok]


class MomentTable(ExactModel):
    polytope: str
    degree: int
    interior: Dict[MultiIndex, sp.Rational]
    boundary: Dict[MultiIndex, sp.Rational]

    def m(self, alpha: MultiIndex) -> sp.Rational:
        return self.interior[tuple(alpha)]

    def b(self, alpha: MultiIndex) -> sp.Rational:
        return self.boundary[tuple(alpha)]

    @property
    def volume(self) -> sp.Rational:
        return self.interior[(0,) * self.dim]

    @property
    def dim(self) -> int:
        return len(next(iter(self.interior)))


class MonteCarloEstimate(BaseModel):
    value: float
    stderr: float
    accepted: int
    samples: int
    seed: int

    def within(self, exact: float, sigmas: float = 3.0) -> bool:
        return abs(self.value - exact) <= sigmas * self.stderr


class ScalarAffine(ExactModel):
    """S(x) = a0 + sum a_i x_i"""
    a0: sp.Rational
    grad: Tuple[sp.Rational, ...]

    def evaluate(self, point) -> sp.Rational:
        return self.a0 + sum((g * x for g, x in zip(self.grad, point)), sp.Integer(0))

    def as_floats(self) -> Tuple[float, ...]:
        return (float(self.a0),) + tuple(float(g) for g in self.grad)

    @property
    def is_constant(self) -> bool:
        return all(g == 0 for g in self.grad)


class EigenPairs(ExactModel):
    eigenvalues: np.ndarray  # ascending
    eigenvectors: np.ndarray  # columns, unit length, positive leading component
    residuals: np.ndarray


class BoundResult(ExactModel):
    value: float
    minimizer_b: Tuple[float, ...]
    numerator_matrix: RationalMatrix
    denominator_matrix: RationalMatrix
    eigenvalues: Tuple[float, ...] = ()
    scale: float = 1.0
    warnings: Tuple[str, ...] = ()


class QuotientCoefficients(BaseModel):
    a: float
    A: float
    B: float
    C: float
    D: float

    def value(self, b2: float) -> float:
        return (self.A * (1 + b2 ** 2) + b2 * self.B) / (self.C * (1 + b2 ** 2) + b2 * self.D)

    @property
    def discriminant(self) -> float:
        return self.A * self.D - self.B * self.C


class GramPair(ExactModel):
    a: float
    M: np.ndarray
    Mtilde: np.ndarray
    order: int
    converged: bool = True
    warnings: Tuple[str, ...] = ()


class SweepRecord(BaseModel):
    a: float
    bound_antiinvariant: float
    bound_invariant: float
    bound: float
    branch: str
    rayleigh_ritz: float
    gap: float
    rr_branch: Optional[str] = None
    error: Optional[str] = None


class SweepSummary(BaseModel):
    count: int
    critical_a: float
    switch_bracket: Optional[Tuple[float, float]] = None
    rr_switch_bracket: Optional[Tuple[float, float]] = None
    max_gap: float
    min_gap: float
    limit_bound: float
    bounded_by_kahler_einstein: bool
    errors: int = 0


class CheckOutcome(BaseModel):
    name: str
    passed: bool
    seconds: float = 0.0
    detail: str = ""


class FacetEntry(BaseModel):
    normal: List[int]
    offset: str = Field(pattern=r"^\s*[+-]?\d+(\s*/\s*\d+)?\s*$")

    @field_validator("normal", mode="before")
    @classmethod
    def _integer_normal(cls, value: Any) -> Any:
        if not isinstance(value, list) or any(isinstance(v, bool) or not isinstance(v, int) for v in value):
            raise ValueError("normal must be a list of integers")
        return value


class PolytopeFileModel(BaseModel):
    dim: int = Field(gt=0)
    facets: List[FacetEntry] = Field(min_length=1)
    name: Optional[str] = None

    @model_validator(mode="after")
    def _check_lengths(self) -> "PolytopeFileModel":
        for i, facet in enumerate(self.facets):
            if len(facet.normal) != self.dim:
                raise ValueError(f"facets[{i}].normal has length {len(facet.normal)}, expected dim={self.dim}")
        return self


class RunConfig(BaseModel):
    command: Literal["bound", "extremal", "calabi", "check"]
    builtin: Optional[str] = None
    input_path: Optional[Path] = None
    out: Optional[Path] = None
    order: int = Field(default=40, ge=8, le=256)
    grid: int = Field(default=100, ge=2)
    amin: float = -0.99
    amax: float = 1.99
    normalize: bool = False
    scale: Optional[float] = None
    seed: int = 0
    gnuplot_script: bool = False
    verbose: bool = False

    @model_validator(mode="after")
    def _check_command_inputs(self) -> "RunConfig":
        if self.command in ("bound", "extremal"):
            if (self.builtin is None) == (self.input_path is None):
                raise ValueError("exactly one of --builtin or --input is required")
        if self.command == "calabi":
            if not (-1 < self.amin < self.amax < 2):
                raise ValueError(f"sweep grid must satisfy -1 < amin < amax < 2, got [{self.amin}, {self.amax}]")
        if self.scale is not None and self.scale <= 0:
            raise ValueError("--scale must be positive")
        return self
