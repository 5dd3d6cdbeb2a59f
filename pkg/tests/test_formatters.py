import json
import pytest
from app.exceptions import ConfigError
from app.models.results import BdmResult
from app.utils import formatters, validators


@pytest.mark.parametrize(
    "value,expected",
    [(0.125, "0.12"), (0.135, "0.14"), (0.6175, "0.62"), (1.0, "1.00"), (-0.001, "-0.00"), (0.0, "0.00")],
)
def test_round_half_even(value, expected):
    assert formatters.round_half_even(value) == expected


def test_format_float_round_trips():
    for value in (0.1, 1.0 / 3.0, 6.175e-17):
        assert float(formatters.format_float(value)) == value


def test_parse_vector():
    assert validators.parse_vector("0.9") == [0.9]
    assert validators.parse_vector(" 0, -1.5 ") == [0.0, -1.5]
    for bad in ("", "0,,1", "abc", "nan", "inf"):
        with pytest.raises(ConfigError):
            validators.parse_vector(bad)


def test_parse_grid():
    assert validators.parse_grid("0.3:3.0:300") == (0.3, 3.0, 300)
    for bad in ("0.3:3.0", "3:1:10", "0:1:1", "a:1:10", "0:1:2.5"):
        with pytest.raises(ConfigError):
            validators.parse_grid(bad)


def test_validate_index():
    assert validators.validate_index(None, 3) is None
    assert validators.validate_index(2, 3) == 2
    with pytest.raises(ConfigError):
        validators.validate_index(3, 3)


def test_json_document_keys(golden_dir):
    result = BdmResult.from_tail("ho", 0.9, 0.19, {"rstar": -0.88})
    document = json.loads(formatters.format_result_json(result))
    expected = (golden_dir / "bdm_json_keys.txt").read_text().split()
    assert sorted(document) == expected
    assert document["theta0"] == [0.9]


def test_csv_row_is_a_fixed_point():
    result = BdmResult.from_raw("sks", [0.3], 1.0421, {"raw_delta": 1.0421, "skew": 0.3})
    text = formatters.format_result_csv(result)
    header, row = formatters.read_csv(text)
    assert header == formatters.BDM_CSV_HEADER
    parsed = formatters.parse_result_row(row)
    assert parsed["clamped"] is True
    assert parsed["delta"] == 1.0
    assert parsed["tail_low"] is None
    rebuilt = BdmResult(**{k: v for k, v in parsed.items()})
    assert formatters.format_result_row(rebuilt) == row


def test_parse_result_row_rejects_short_rows():
    with pytest.raises(ValueError):
        formatters.parse_result_row(["io", "0.9"])
