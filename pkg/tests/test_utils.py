import pytest

from toric_bounds.settings import Settings
from toric_bounds.utils import (
    CholeskyError,
    EmptyPolytopeError,
    InputFormatError,
    OutputError,
    ParameterRangeError,
    QuadratureError,
    UnboundedPolytopeError,
    exit_code_for,
    timed,
)


@pytest.mark.parametrize("error, code", [
    (InputFormatError("bad"), 2),
    (ParameterRangeError("a", 3, "(-1, 2)"), 2),
    (UnboundedPolytopeError([1.0, 0.0]), 3),
    (EmptyPolytopeError("empty"), 3),
    (OutputError("disk full"), 4),
    (CholeskyError(pivot=2, order=3), 1),
    (QuadratureError("nan"), 1),
])
def test_exit_codes(error, code):
    assert exit_code_for(error) == code


def test_input_format_error_location():
    error = InputFormatError("must be a string", field="facets.0.offset", line=4)
    assert str(error) == "[line 4, field 'facets.0.offset'] must be a string"


def test_parameter_range_message():
    assert "outside the valid range (-1, 2)" in str(ParameterRangeError("a", 3, "(-1, 2)"))


def test_timed():
    result, seconds = timed(lambda x: x + 1)(1)
    assert result == 2
    assert seconds >= 0


def test_settings_from_environment(monkeypatch):
    monkeypatch.setenv("TORIC_QUADRATURE_ORDER", "64")
    fresh = Settings()
    assert fresh.QUADRATURE_ORDER == 64
    assert fresh.describe()["quadrature_order"] == 64
