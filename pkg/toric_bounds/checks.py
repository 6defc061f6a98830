"""End-to-end acceptance checks run by `toric_bounds check`"""
from typing import Callable, List, Optional, Tuple

import numpy as np
import sympy as sp

from toric_bounds import calabi
from toric_bounds.bounds import first_nonzero, product_sphere_spectrum, solve_extremal_S, theorem1_bound, theorem2_bound
from toric_bounds.integrate import (
    brion_linear_power,
    coordinate_symbols,
    cpn_reference_moments,
    integrate_polynomial_simplex,
    moments_up_to,
    monte_carlo_estimate,
)
from toric_bounds.polytope import build_polytope, builtin_polytope, check_delzant, dilate, facet_decomposition
from toric_bounds.settings import settings
from toric_bounds.types import AffineFunctional, CheckOutcome, Simplex
from toric_bounds.utils import logger, timed

CheckResult = Tuple[bool, str]

EXTREMAL_SAMPLE = [sp.Rational(k, 8) for k in range(-6, 14)]


def unit_triangle():
    facets = [
        AffineFunctional(normal=(1, 0), offset=0),
        AffineFunctional(normal=(0, 1), offset=0),
        AffineFunctional(normal=(-1, -1), offset=1),
    ]
    return build_polytope(facets, 2, name="unit_triangle")


def skew_square():
    """Square-like polytope whose corners are not unimodular (determinant 2)"""
    facets = [
        AffineFunctional(normal=(1, 0), offset=1),
        AffineFunctional(normal=(-1, 0), offset=1),
        AffineFunctional(normal=(1, 2), offset=1),
        AffineFunctional(normal=(-1, -2), offset=1),
    ]
    return build_polytope(facets, 2, name="skew_square")


def random_simplex(rng: np.random.Generator, dim: int, spread: int = 3) -> Simplex:
    while True:
        vertices = rng.integers(-spread, spread + 1, size=(dim + 1, dim))
        edges = sp.Matrix((vertices[1:] - vertices[0]).tolist())
        det = edges.det()
        if det != 0:
            points = tuple(tuple(sp.Integer(int(c)) for c in row) for row in vertices)
            return Simplex(dim=dim, vertices=points, measure_scale=abs(det) / sp.factorial(dim))


class CheckSuite:
    """The acceptance criteria as named pass/fail checks.

    `alpha` is the scalar-curvature slope the extremal check compares against;
    replacing it is how the negative control is run.
    """

    def __init__(self, grid: Optional[int] = None, order: Optional[int] = None, seed: Optional[int] = None,
                 samples: Optional[int] = None, workers: Optional[int] = None,
                 alpha: Callable = calabi.alpha_exact):
        self.grid = settings.SWEEP_COUNT if grid is None else grid
        self.order = settings.QUADRATURE_ORDER if order is None else order
        self.seed = settings.SEED if seed is None else seed
        self.samples = settings.MC_SAMPLES if samples is None else samples
        self.workers = workers
        self.alpha = alpha
        self._records = None

    def checks(self) -> List[Tuple[str, Callable[[], CheckResult]]]:
        return [
            ("CP^n bound and moments", self.check_cpn_bound),
            ("extremal scalar curvature on the trapezoid", self.check_extremal_scalar),
            ("tightness on CP^1 x CP^1", self.check_product_tightness),
            ("closed-form Calabi bound", self.check_closed_form),
            ("profile ODE and Abreu equation", self.check_ode_abreu),
            ("Rayleigh-Ritz dominance", self.check_rayleigh_ritz),
            ("integration oracles", self.check_integration_oracles),
            ("polytope and bound properties", self.check_properties),
            ("seeded Monte Carlo reproducibility", self.check_monte_carlo_reproducible),
        ]

    def run(self) -> List[CheckOutcome]:
        outcomes = [self._run(name, check) for name, check in self.checks()]
        failed = [o.name for o in outcomes if not o.passed]
        if failed:
            logger.error(f"{len(failed)} checks failed: {', '.join(failed)}")
        else:
            logger.info(f"All {len(outcomes)} checks passed")
        return outcomes

    def _run(self, name: str, check: Callable[[], CheckResult]) -> CheckOutcome:
        try:
            (passed, detail), seconds = timed(check)()
        except Exception as e:
            logger.error(f"Check '{name}' raised: {e}")
            return CheckOutcome(name=name, passed=False, detail=f"{type(e).__name__}: {e}")
        return CheckOutcome(name=name, passed=passed, seconds=seconds, detail=detail)

    def _sweep(self):
        if self._records is None:
            self._records = calabi.sweep(count=self.grid, order=self.order, workers=self.workers)
        return self._records

    def check_cpn_bound(self) -> CheckResult:
        for n in range(1, 6):
            p = builtin_polytope("cpn_simplex", n)
            value = theorem1_bound(p).value
            if abs(value - (n + 2)) > 1e-10:
                return False, f"n={n}: bound {value!r} != {n + 2}"
            reference = cpn_reference_moments(n)
            table = moments_up_to(p, 2)
            e1 = tuple(int(j == 0) for j in range(n))
            two_e1 = tuple(2 * int(j == 0) for j in range(n))
            exact = {
                "volume": table.volume,
                "first_moment": table.m(e1),
                "second_moment": table.m(two_e1),
                "boundary_second_moment": table.b(two_e1),
            }
            for key, value in exact.items():
                if value != reference[key]:
                    return False, f"n={n}: {key} {value} != {reference[key]}"
        return True, "n+2 for n=1..5"

    def check_extremal_scalar(self) -> CheckResult:
        for a in EXTREMAL_SAMPLE:
            scalar = solve_extremal_S(builtin_polytope("trapezoid", a))
            alpha, beta = self.alpha(a), calabi.beta_exact(a)
            if scalar.grad != (alpha, alpha) or scalar.a0 != beta:
                return False, f"a={a}: solved {scalar.a0}, {scalar.grad}; expected {beta}, ({alpha}, {alpha})"
        return True, f"{len(EXTREMAL_SAMPLE)} rational parameters"

    def check_product_tightness(self) -> CheckResult:
        for a in (sp.Integer(1), sp.Rational(3, 2), sp.Integer(2), sp.Integer(3)):
            value = theorem2_bound(builtin_polytope("rectangle", a)).value
            spectral = first_nonzero(product_sphere_spectrum(a, 3))
            if abs(value - float(2 / a)) > 1e-12 or abs(spectral - float(2 / a)) > 1e-12:
                return False, f"a={a}: bound {value!r}, spectrum {spectral!r}, expected {float(2 / a)!r}"
        return True, "bound = 2/a = first invariant eigenvalue"

    def check_closed_form(self) -> CheckResult:
        critical = calabi.find_critical_a()
        if abs(critical - 1.2877) > 5e-5:
            return False, f"a_c = {critical}"
        grid = calabi.parameter_grid(settings.SWEEP_AMIN, settings.SWEEP_AMAX, self.grid)
        previous = None
        bracket = None
        for a in grid:
            result = theorem2_bound(builtin_polytope("trapezoid", a))
            normalized = result.value / calabi.normalization(a)
            closed, _ = calabi.closed_form_bound(a)
            if abs(normalized - closed) > 1e-9:
                return False, f"a={float(a):.6g}: pipeline {normalized!r} vs closed form {closed!r}"
            invariant = result.minimizer_b[0] * result.minimizer_b[1] > 0
            if previous is not None and invariant != previous[1] and bracket is None:
                bracket = (previous[0], float(a))
            previous = (float(a), invariant)
        if bracket is None or not bracket[0] <= critical <= bracket[1]:
            return False, f"parity switch {bracket} does not bracket a_c={critical:.6f}"
        limit, _ = calabi.closed_form_bound(1.999)
        _, expected = calabi.kahler_einstein_limit()
        if abs(limit - expected) > 1e-2:
            return False, f"bound at a=1.999 is {limit}, expected ~{expected}"
        return True, f"a_c={critical:.6f}, switch in [{bracket[0]:.4f}, {bracket[1]:.4f}]"

    def check_ode_abreu(self) -> CheckResult:
        worst = 0.0
        for a in np.linspace(-0.9, 1.9, 10):
            metric = calabi.CalabiMetric(round(float(a), 6))
            for t in np.linspace(-metric.a, 1.0, 52)[1:-1]:
                worst = max(worst, abs(metric.ode_residual(round(float(t), 9))))
        if worst > 1e-10:
            return False, f"ODE residual {worst:.3e}"
        for a, x in ((1, (0.0, 0.0)), (0, (-0.2, 0.3))):
            metric = calabi.CalabiMetric(a)
            residual = abs(metric.scalar_curvature_check(x, 1e-3))
            if residual > 1e-5:
                return False, f"Abreu residual {residual:.3e} at a={a}, x={x}"
        metric = calabi.CalabiMetric(0)
        coarse = metric.scalar_curvature_check((-0.2, 0.3), 0.02)
        fine = metric.scalar_curvature_check((-0.2, 0.3), 0.01)
        ratio = coarse / fine
        if not 3.5 <= ratio <= 4.5:
            return False, f"Richardson ratio {ratio:.3f}"
        return True, f"ODE residual {worst:.1e}, Richardson ratio {ratio:.2f}"

    def check_rayleigh_ritz(self) -> CheckResult:
        for record in self._sweep():
            if record.error:
                return False, f"a={record.a:.6g}: {record.error}"
            closed, _ = calabi.closed_form_bound(record.a)
            if record.rayleigh_ritz > closed + 1e-8 or record.gap < -1e-8:
                return False, f"a={record.a:.6g}: Rayleigh-Ritz {record.rayleigh_ritz!r} above bound {closed!r}"
        for a in (-0.5, 0.5, 1.5):
            low, high = calabi.rayleigh_ritz(a, 32), calabi.rayleigh_ritz(a, 64)
            if abs(low - high) > 1e-8:
                return False, f"a={a}: Rayleigh-Ritz moves by {abs(low - high):.2e} from order 32 to 64"
            gram = calabi.gram_matrices(a, self.order)
            exact = np.array(calabi.exact_linear_gradient_block(a), dtype=float)
            error = np.max(np.abs(gram.Mtilde[1:3, 1:3] - exact)) / np.max(np.abs(exact))
            if error > 1e-6:
                return False, f"a={a}: gradient Gram block off by {error:.2e} from integration by parts"
        return True, f"{len(self._sweep())} grid points"

    def check_integration_oracles(self) -> CheckResult:
        rng = np.random.default_rng(self.seed)
        for trial in range(200):
            dim = int(rng.integers(1, 4))
            s = random_simplex(rng, dim)
            coefficients = rng.integers(-3, 4, size=dim + 1)
            phi = int(coefficients[0]) + sum(int(c) * x for c, x in zip(coefficients[1:], coordinate_symbols(dim)))
            q = int(rng.integers(0, 5))
            brion = brion_linear_power(s, phi, q)
            direct = integrate_polynomial_simplex(s, sp.expand(sp.sympify(phi) ** q))
            if brion != direct:
                return False, f"trial {trial}: {brion} != {direct}"

        x1, x2 = coordinate_symbols(2)
        cases = [
            (builtin_polytope("trapezoid", 1), sp.Integer(1), 4.0),
            (builtin_polytope("rectangle", 1), x1, 0.0),
            (builtin_polytope("cpn_simplex", 2), x1 ** 2, 2.25),
        ]
        for p, f, exact in cases:
            estimate = monte_carlo_estimate(p, f, self.samples, self.seed)
            if not estimate.within(exact):
                return False, f"{p.name}: Monte Carlo {estimate.value:.5f} +- {estimate.stderr:.1e} vs {exact}"

        hypotenuse = [f for f in facet_decomposition(unit_triangle()) if f.functional.normal == (-1, -1)]
        if len(hypotenuse) != 1 or hypotenuse[0].measure != 1:
            return False, "hypotenuse of the unit triangle does not have sigma-length 1"
        return True, "200 simplex instances, 3 Monte Carlo estimates"

    def check_properties(self) -> CheckResult:
        builtins = [builtin_polytope("cpn_simplex", n) for n in range(1, 6)]
        builtins += [builtin_polytope("rectangle", a) for a in (1, sp.Rational(3, 2), 2)]
        builtins += [builtin_polytope("trapezoid", a) for a in (0, 1, sp.Rational(3, 2))]
        for p in builtins:
            if not check_delzant(p).passed:
                return False, f"{p.name} fails the Delzant check"
        if check_delzant(skew_square()).passed:
            return False, "non-unimodular square passes the Delzant check"

        rng = np.random.default_rng(self.seed)
        for base in (builtin_polytope("cpn_simplex", 2), builtin_polytope("trapezoid", 1)):
            reference = theorem1_bound(base)
            for _ in range(3):
                t = sp.Rational(int(rng.integers(1, 10)), int(rng.integers(1, 10)))
                scaled = theorem1_bound(dilate(base, t))
                n = base.dim
                numerator_ok = sp.Matrix(scaled.numerator_matrix) == t ** (n + 1) * sp.Matrix(reference.numerator_matrix)
                denominator_ok = sp.Matrix(scaled.denominator_matrix) == t ** (n + 2) * sp.Matrix(reference.denominator_matrix)
                if not (numerator_ok and denominator_ok):
                    return False, f"{base.name} dilated by {t}: moment matrices do not scale as t^(n+1), t^(n+2)"
                if abs(scaled.value * float(t) - reference.value) > 1e-9 * reference.value:
                    return False, f"{base.name} dilated by {t}: bound {scaled.value} != {reference.value}/t"

        critical = calabi.find_critical_a()
        root_half = 1 / np.sqrt(2.0)
        for a in (sp.Rational(-1, 2), sp.Integer(0), sp.Integer(1), sp.Rational(3, 2), sp.Rational(19, 10)):
            b = np.array(theorem2_bound(builtin_polytope("trapezoid", a)).minimizer_b)
            expected = np.array([root_half, -root_half if float(a) < critical else root_half])
            if np.max(np.abs(b - expected)) > 1e-6:
                return False, f"a={a}: minimizer {b} is not along {expected}"
        return True, "Delzant, dilation scaling, minimizer parity"

    def check_monte_carlo_reproducible(self) -> CheckResult:
        p = builtin_polytope("trapezoid", 1)
        x1, _ = coordinate_symbols(2)
        first = monte_carlo_estimate(p, x1, self.samples, self.seed)
        second = monte_carlo_estimate(p, x1, self.samples, self.seed)
        if first != second:
            return False, f"{first} != {second}"
        return True, f"estimate {first.value:.6f} with seed {self.seed}"
