import json

import pandas as pd
import pytest

from toric_bounds.checks import CheckSuite
from toric_bounds.main import main
from toric_bounds.report import sidecar_path


def _polytope_file(tmp_path, facets):
    path = tmp_path / "polytope.json"
    path.write_text(json.dumps({"dim": 2, "facets": facets}), encoding="utf-8")
    return str(path)


def test_bound(capsys):
    assert main(["bound", "--builtin", "cpn:2"]) == 0
    out = capsys.readouterr().out
    assert "Upper bound on lambda_1^T: 4" in out
    assert "Delzant check: passed" in out
    assert "Caveat:" in out


def test_bound_writes_report(tmp_path, capsys):
    out = tmp_path / "report.txt"
    assert main(["bound", "--builtin", "rectangle:1", "--out", str(out)]) == 0
    assert "rectangle(1)" in out.read_text(encoding="utf-8")


def test_extremal_normalized(capsys):
    assert main(["extremal", "--builtin", "trapezoid:1", "--normalize"]) == 0
    out = capsys.readouterr().out
    assert "42/11 + 12/11*x1 + 12/11*x2" in out
    assert "Extremal upper bound on lambda_1^T: 1.8618" in out


def test_extremal_with_scale(capsys):
    assert main(["extremal", "--builtin", "rectangle:2", "--scale", "2"]) == 0
    out = capsys.readouterr().out
    assert "Extremal upper bound on lambda_1^T: 0.5" in out
    assert "normalization scale: 2" in out


def test_normalize_needs_a_trapezoid():
    assert main(["extremal", "--builtin", "cpn:2", "--normalize"]) == 2


def test_parameter_out_of_range():
    assert main(["bound", "--builtin", "rectangle:1/2"]) == 2


def test_negative_scale():
    assert main(["extremal", "--builtin", "rectangle:2", "--scale", "-1"]) == 2


def test_input_file(tmp_path, capsys):
    path = _polytope_file(tmp_path, [
        {"normal": [1, 0], "offset": "1"},
        {"normal": [0, 1], "offset": "1"},
        {"normal": [-1, -1], "offset": "1"},
    ])
    assert main(["bound", "--input", path]) == 0
    assert "Upper bound on lambda_1^T: 4" in capsys.readouterr().out


def test_unbounded_input(tmp_path):
    path = _polytope_file(tmp_path, [{"normal": [1, 0], "offset": "1"}, {"normal": [0, 1], "offset": "1"}])
    assert main(["bound", "--input", path]) == 3


def test_malformed_input(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{ not json", encoding="utf-8")
    assert main(["bound", "--input", str(path)]) == 2


def test_source_required():
    with pytest.raises(SystemExit):
        main(["bound"])


def test_calabi(tmp_path, capsys):
    csv = tmp_path / "sweep.csv"
    code = main(["calabi", "--grid", "3", "--order", "8", "--amin", "-0.5", "--amax", "1.5",
                 "--out", str(csv), "--gnuplot-script"])
    assert code == 0
    frame = pd.read_csv(csv)
    assert frame["a"].tolist() == [-0.5, 0.5, 1.5]
    assert sidecar_path(csv).exists()
    assert csv.with_suffix(".gp").exists()
    assert "critical parameter a_c: 1.28" in capsys.readouterr().out


def test_calabi_grid_outside_range(tmp_path):
    assert main(["calabi", "--amin", "-1.5", "--out", str(tmp_path / "x.csv")]) == 2


def test_check_exit_code(monkeypatch, capsys):
    monkeypatch.setattr(CheckSuite, "checks", lambda self: [("passes", lambda: (True, "")), ("fails", lambda: (False, "no"))])
    assert main(["check"]) == 1
    out = capsys.readouterr().out
    assert "1/2 checks passed" in out

    monkeypatch.setattr(CheckSuite, "checks", lambda self: [("passes", lambda: (True, ""))])
    assert main(["check"]) == 0


def test_calabi_unwritable_output(tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("", encoding="utf-8")
    code = main(["calabi", "--grid", "2", "--order", "8", "--amin", "0", "--amax", "1",
                 "--out", str(blocker / "sweep.csv")])
    assert code == 4
