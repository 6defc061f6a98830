import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from toric_bounds import __version__, calabi
from toric_bounds.bounds import CURVATURE_CAVEAT, rescale_bound, solve_extremal_S, theorem1_bound, theorem2_bound
from toric_bounds.checks import CheckSuite
from toric_bounds.numerics import to_rational
from toric_bounds.parser import PolytopeParser
from toric_bounds.polytope import check_delzant
from toric_bounds.report import (
    bound_summary,
    check_lines,
    delzant_summary,
    metadata,
    metadata_header,
    polytope_summary,
    scalar_summary,
    sweep_summary,
    write_gnuplot_script,
    write_report,
    write_sweep_csv,
)
from toric_bounds.settings import settings
from toric_bounds.types import DelzantPolytope, RunConfig
from toric_bounds.utils import InputFormatError, ParameterRangeError, ToricError, exit_code_for, logger

DEFAULT_SWEEP_CSV = Path("calabi_sweep.csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="toric_bounds",
        description="Upper bounds on the first torus-invariant eigenvalue of toric Kahler metrics",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    def polytope_input(sub: argparse.ArgumentParser) -> None:
        source = sub.add_mutually_exclusive_group(required=True)
        source.add_argument("--builtin", help="name:param, e.g. cpn:3, rectangle:3/2, trapezoid:1")
        source.add_argument("--input", dest="input_path", type=Path, help="JSON polytope file")

    def common(sub: argparse.ArgumentParser) -> None:
        sub.add_argument("--out", type=Path, help="output file")
        sub.add_argument("--seed", type=int, default=settings.SEED)
        sub.add_argument("--verbose", action="store_true", help="debug logging")

    bound = commands.add_parser("bound", help="bound for metrics of non-negative scalar curvature")
    polytope_input(bound)
    common(bound)

    extremal = commands.add_parser("extremal", help="bound for extremal metrics")
    polytope_input(extremal)
    common(extremal)
    extremal.add_argument("--normalize", action="store_true",
                          help="rescale by c(a) for trapezoid:a, or by --scale")
    extremal.add_argument("--scale", type=float, help="metric scale c applied to the bound (value / c)")

    sweep = commands.add_parser("calabi", help="sweep the Calabi family and write the CSV")
    common(sweep)
    sweep.add_argument("--order", type=int, default=settings.QUADRATURE_ORDER, help="Gauss points per direction")
    sweep.add_argument("--grid", type=int, default=settings.SWEEP_COUNT)
    sweep.add_argument("--amin", type=float, default=settings.SWEEP_AMIN)
    sweep.add_argument("--amax", type=float, default=settings.SWEEP_AMAX)
    sweep.add_argument("--gnuplot-script", dest="gnuplot_script", action="store_true",
                       help="also write a gnuplot script next to the CSV")

    check = commands.add_parser("check", help="run the acceptance checks")
    common(check)
    check.add_argument("--order", type=int, default=settings.QUADRATURE_ORDER)
    check.add_argument("--grid", type=int, default=settings.SWEEP_COUNT)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values = {k: v for k, v in vars(args).items() if v is not None}
    try:
        return RunConfig(**values)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(part) for part in first["loc"]) or None
        raise InputFormatError(first["msg"], field=field) from e


def load_polytope(config: RunConfig) -> DelzantPolytope:
    parser = PolytopeParser()
    if config.builtin is not None:
        return parser.parse_builtin(config.builtin)
    return parser.load_file(config.input_path)


def _emit(text: str, config: RunConfig) -> None:
    print(text)
    if config.out is not None:
        write_report(text, config.out)
        logger.info(f"Report written to {config.out}")


def cmd_bound(config: RunConfig) -> int:
    """Polytope summary, Delzant report and the non-negative curvature bound"""
    p = load_polytope(config)
    result = theorem1_bound(p)
    sections = [
        metadata_header(metadata(config)),
        polytope_summary(p),
        delzant_summary(check_delzant(p)),
        bound_summary("Upper bound on lambda_1^T", result.model_copy(
            update={"warnings": tuple(w for w in result.warnings if w != CURVATURE_CAVEAT)}
        )),
        f"Caveat: {CURVATURE_CAVEAT}",
    ]
    _emit("\n\n".join(sections), config)
    return 0


def _normalization_scale(config: RunConfig, p: DelzantPolytope) -> Optional[float]:
    if config.scale is not None:
        return config.scale
    if not config.normalize:
        return None
    name, _, param = (config.builtin or "").partition(":")
    if name.strip().lower() in ("trapezoid", "trap") and param:
        return calabi.normalization(to_rational(param.strip()))
    raise ParameterRangeError("--normalize", p.name, "trapezoid:a builtins, or an explicit --scale")


def cmd_extremal(config: RunConfig) -> int:
    """Affine scalar curvature from moments and the extremal bound"""
    p = load_polytope(config)
    scalar = solve_extremal_S(p)
    result = theorem2_bound(p, scalar)
    scale = _normalization_scale(config, p)
    if scale is not None:
        result = rescale_bound(result, scale)
    sections = [
        metadata_header(metadata(config)),
        polytope_summary(p),
        delzant_summary(check_delzant(p)),
        scalar_summary(scalar),
        bound_summary("Extremal upper bound on lambda_1^T", result),
    ]
    _emit("\n\n".join(sections), config)
    return 0


def cmd_calabi(config: RunConfig) -> int:
    """Sweep the Calabi family, write the CSV (and gnuplot script), print the summary"""
    records = calabi.sweep(config.amin, config.amax, config.grid, order=config.order)
    summary = calabi.summarize_sweep(records)
    out = config.out or DEFAULT_SWEEP_CSV
    meta = metadata(config, critical_a=summary.critical_a)
    write_sweep_csv(records, out, meta)
    if config.gnuplot_script:
        script = write_gnuplot_script(out)
        logger.info(f"Gnuplot script written to {script}")
    print(metadata_header(meta))
    print()
    print(sweep_summary(summary, out))
    return 0


def cmd_check(config: RunConfig) -> int:
    """Run every acceptance check; 0 iff all pass"""
    print(metadata_header(metadata(config)))
    print("=" * 40)
    suite = CheckSuite(grid=config.grid, order=config.order, seed=config.seed)
    outcomes = suite.run()
    lines = check_lines(outcomes)
    for line in lines:
        print(line)
    print("=" * 40)
    passed = sum(1 for o in outcomes if o.passed)
    print(f"{passed}/{len(outcomes)} checks passed")
    if config.out is not None:
        write_report("\n".join(lines), config.out)
    return 0 if passed == len(outcomes) else 1


COMMANDS = {
    "bound": cmd_bound,
    "extremal": cmd_extremal,
    "calabi": cmd_calabi,
    "check": cmd_check,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.verbose:
        logging.getLogger("toric_bounds").setLevel(logging.DEBUG)
    try:
        config = config_from_args(args)
        return COMMANDS[config.command](config)
    except ToricError as e:
        code = exit_code_for(e)
        logger.error(f"{type(e).__name__}: {e}")
        print(f"error: {e}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
