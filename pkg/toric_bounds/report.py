import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import pandas as pd

from toric_bounds import __version__
from toric_bounds.numerics import format_rational
from toric_bounds.polytope import boundary_measure, volume
from toric_bounds.settings import settings
from toric_bounds.types import (
    BoundResult,
    CheckOutcome,
    DelzantPolytope,
    DelzantReport,
    RunConfig,
    ScalarAffine,
    SweepRecord,
    SweepSummary,
)
from toric_bounds.utils import OutputError, logger

CSV_COLUMNS = ["a", "bound_antiinv", "bound_inv", "bound", "branch", "rayleigh_ritz", "gap"]


def metadata(config: Optional[RunConfig] = None, **extra: Any) -> Dict[str, Any]:
    """Version, run configuration and numerical tolerances; no timestamps, so output is reproducible"""
    data: Dict[str, Any] = {
        "version": __version__,
        "settings": settings.describe(),
    }
    if config is not None:
        data["config"] = config.model_dump(mode="json")
    data.update(extra)
    return data


def metadata_header(data: Dict[str, Any]) -> str:
    lines = [f"# toric_bounds {data['version']}"]
    for key, value in data.items():
        if key == "version":
            continue
        lines.append(f"# {key}: {json.dumps(value, sort_keys=True, default=str)}")
    return "\n".join(lines)


def records_frame(records: Iterable[SweepRecord]) -> pd.DataFrame:
    rows = [
        {
            "a": r.a,
            "bound_antiinv": r.bound_antiinvariant,
            "bound_inv": r.bound_invariant,
            "bound": r.bound,
            "branch": r.branch,
            "rayleigh_ritz": r.rayleigh_ritz,
            "gap": r.gap,
        }
        for r in records
    ]
    return pd.DataFrame(rows, columns=CSV_COLUMNS)


def _write_text(path: Path, text: str) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        logger.error(f"Cannot write {path}: {e}")
        raise OutputError(f"cannot write {path}: {e}") from e
    return path


def write_sweep_csv(records: Sequence[SweepRecord], path: Path, meta: Optional[Dict[str, Any]] = None) -> Path:
    """One row per sweep record, floats at CSV_DIGITS significant digits.

    Metadata goes to a `.meta.json` sidecar so the CSV keeps a plain header row.
    """
    frame = records_frame(records)
    text = frame.to_csv(index=False, float_format=f"%.{settings.CSV_DIGITS}g", na_rep="nan", lineterminator="\n")
    path = _write_text(Path(path), text)
    if meta is not None:
        _write_text(sidecar_path(path), json.dumps(meta, indent=2, sort_keys=True, default=str) + "\n")
    logger.info(f"Wrote {len(frame)} sweep rows to {path}")
    return path


def sidecar_path(csv_path: Path) -> Path:
    csv_path = Path(csv_path)
    return csv_path.with_name(csv_path.stem + ".meta.json")


def gnuplot_script(csv_path: Path) -> str:
    """Plain-text gnuplot script drawing the bound, the Rayleigh-Ritz value and their difference"""
    name = Path(csv_path).name
    stem = Path(csv_path).stem
    return "\n".join([
        "# bound, Rayleigh-Ritz approximation and their difference against a",
        "set datafile separator ','",
        "set key autotitle columnhead",
        "set xlabel 'a'",
        "set terminal svg size 800,500",
        "",
        f"set output '{stem}_bound.svg'",
        "set ylabel 'upper bound'",
        f"plot '{name}' using 1:4 with lines title 'bound', \\",
        f"     '' using 1:2 with lines dashtype 2 title 'anti-invariant', \\",
        f"     '' using 1:3 with lines dashtype 3 title 'invariant'",
        "",
        f"set output '{stem}_rayleigh_ritz.svg'",
        "set ylabel 'Rayleigh-Ritz'",
        f"plot '{name}' using 1:6 with lines title 'Rayleigh-Ritz'",
        "",
        f"set output '{stem}_gap.svg'",
        "set ylabel 'bound - Rayleigh-Ritz'",
        f"plot '{name}' using 1:7 with lines title 'gap'",
        "",
    ])


def write_gnuplot_script(csv_path: Path) -> Path:
    csv_path = Path(csv_path)
    return _write_text(csv_path.with_suffix(".gp"), gnuplot_script(csv_path))


def _vector(values: Sequence[float]) -> str:
    return "(" + ", ".join(f"{v:.12g}" for v in values) + ")"


def polytope_summary(p: DelzantPolytope) -> str:
    lines = [f"Polytope {p.name} (dim {p.dim})", "  facets:"]
    for k, f in enumerate(p.facets):
        lines.append(f"    psi_{k + 1}(x) = {f}")
    lines.append("  vertices:")
    for v in p.vertices:
        lines.append("    (" + ", ".join(format_rational(c) for c in v) + ")")
    vol, perimeter = volume(p), boundary_measure(p)
    lines.append(f"  volume: {format_rational(vol)} ~ {float(vol):.12g}")
    lines.append(f"  boundary sigma-measure: {format_rational(perimeter)} ~ {float(perimeter):.12g}")
    for note in p.warnings:
        lines.append(f"  warning: {note}")
    return "\n".join(lines)


def delzant_summary(report: DelzantReport) -> str:
    status = "passed" if report.passed else f"FAILED at {len(report.failures)} vertices"
    lines = [f"Delzant check: {status}"]
    for check in report.checks:
        mark = "✓" if check.ok else "✗"
        point = "(" + ", ".join(format_rational(c) for c in check.point) + ")"
        lines.append(
            f"  {mark} vertex {point}: {len(check.active_facets)} active facets, determinant {check.determinant}"
        )
    return "\n".join(lines)


def bound_summary(title: str, result: BoundResult) -> str:
    lines = [
        f"{title}: {result.value:.12g}",
        f"  minimizer direction b: {_vector(result.minimizer_b)}",
        f"  pencil eigenvalues: {_vector(result.eigenvalues)}",
    ]
    if result.scale != 1.0:
        lines.append(f"  normalization scale: {result.scale:.12g}")
    for note in result.warnings:
        lines.append(f"  note: {note}")
    return "\n".join(lines)


def scalar_summary(scalar: ScalarAffine) -> str:
    exact = [format_rational(scalar.a0)] + [format_rational(g) for g in scalar.grad]
    floats = scalar.as_floats()
    terms = " + ".join(f"{format_rational(g)}*x{i + 1}" for i, g in enumerate(scalar.grad))
    return "\n".join([
        f"Extremal scalar curvature S(x) = {format_rational(scalar.a0)} + {terms}",
        f"  coefficients (a0, a1..an): ({', '.join(exact)})",
        f"  as floats: {_vector(floats)}",
    ])


def sweep_summary(summary: SweepSummary, csv_path: Optional[Path] = None) -> str:
    lines = [
        f"Calabi sweep: {summary.count} values of a" + (f" -> {csv_path}" if csv_path else ""),
        f"  critical parameter a_c: {summary.critical_a:.10f}",
        f"  branch switch between: {summary.switch_bracket}",
        f"  Rayleigh-Ritz parity switch between: {summary.rr_switch_bracket}",
        f"  gap range: [{summary.min_gap:.6g}, {summary.max_gap:.6g}]",
        f"  bound at the last grid point: {summary.limit_bound:.10f}",
        f"  bounded by the Kahler-Einstein value: {summary.bounded_by_kahler_einstein}",
    ]
    if summary.errors:
        lines.append(f"  failed points: {summary.errors}")
    return "\n".join(lines)


def check_lines(outcomes: Sequence[CheckOutcome]) -> List[str]:
    lines = []
    for outcome in outcomes:
        mark = "✓" if outcome.passed else "✗"
        detail = f": {outcome.detail}" if outcome.detail else ""
        lines.append(f"{mark} {outcome.name} ({outcome.seconds:.2f}s){detail}")
    return lines


def write_report(text: str, path: Path) -> Path:
    return _write_text(Path(path), text if text.endswith("\n") else text + "\n")
