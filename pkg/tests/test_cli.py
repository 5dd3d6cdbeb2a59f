import json
import pytest
from app.cli import main
from app.services.check_service import get_check_service
from app.services.table_service import get_table_service
from app.services.reference_values import THETA0_GRID
from app.utils.formatters import BDM_CSV_HEADER, read_csv, round_half_even

EXPONENTIAL = ["bdm", "--model", "exponential", "--n", "6", "--mle", "1.2"]


def _document(capsys):
    out = capsys.readouterr().out
    return json.loads(out.strip().splitlines()[-1])


def _reason(capsys):
    err = capsys.readouterr().err
    lines = [line for line in err.splitlines() if line.startswith("{")]
    return json.loads(lines[-1])


@pytest.mark.parametrize(
    "method,theta0,expected",
    [("ho", "0.9", "0.62"), ("exact", "1.2", "0.11"), ("exact", "0.9", "0.62"), ("sn", "0.9", "0.52"), ("io", "0.3", "0.93")],
)
def test_bdm_command(capsys, method, theta0, expected):
    assert main(EXPONENTIAL + ["--method", method, "--theta0", theta0]) == 0
    document = _document(capsys)
    assert document["method"] == method
    assert document["theta0"] == [float(theta0)]
    assert round_half_even(document["delta"]) == expected


def test_ho_at_mle_prints_zero(capsys):
    assert main(EXPONENTIAL + ["--method", "ho", "--theta0", "1.2"]) == 0
    document = _document(capsys)
    assert round_half_even(document["delta"]) == "0.00"
    assert document["diagnostics"]["bridged"]


def test_bdm_csv_output(tmp_path):
    out = tmp_path / "result.csv"
    assert main(EXPONENTIAL + ["--method", "io", "--theta0", "0.9", "--output", "csv", "--out", str(out)]) == 0
    header, row = read_csv(out.read_text())
    assert header == BDM_CSV_HEADER
    assert row[0] == "io"
    assert row[1] == "0.9"


@pytest.mark.parametrize(
    "args",
    [
        ["bdm", "--model", "exponential", "--n", "6", "--theta0", "0.9"],
        EXPONENTIAL + ["--theta0", "abc"],
        EXPONENTIAL + ["--theta0", "0.9,1.0"],
        EXPONENTIAL + ["--method", "exact", "--theta0", "-1.0"],
        ["bdm", "--model", "logistic", "--method", "sks-num", "--theta0", "0", "--psi-index", "1"],
        ["bdm", "--model", "logistic", "--method", "wald", "--theta0", "0,0,0,0"],
    ],
)
def test_invalid_requests_exit_with_domain_code(capsys, args):
    assert main(args) == 2
    reason = _reason(capsys)
    assert reason["exit_code"] == 2
    assert reason["reason"]


def test_argparse_errors_exit_with_domain_code():
    assert main(["bdm", "--method", "bogus", "--theta0", "0"]) == 2
    assert main([]) == 2


def test_logistic_requests(capsys):
    assert main(["bdm", "--model", "logistic", "--method", "wald", "--theta0", "0,0"]) == 0
    joint = _document(capsys)
    assert 0.0 <= joint["delta"] <= 1.0
    assert main(["bdm", "--model", "logistic", "--method", "io", "--theta0", "0", "--psi-index", "2"]) == 0
    marginal = _document(capsys)
    assert marginal["diagnostics"]["profile_info_rel_diff"] < 1e-3


def test_exports(tmp_path):
    sn_path, draws_path = tmp_path / "sn.json", tmp_path / "draws.csv"
    args = [
        "--method", "sn", "--theta0", "0.9", "--out", str(tmp_path / "r.json"),
        "--export-sn", str(sn_path), "--export-draws", str(draws_path), "--draws", "50", "--seed", "3",
    ]
    assert main(EXPONENTIAL + args) == 0
    document = json.loads(sn_path.read_text())
    assert set(document) == {"sn", "ot", "params"}
    assert len(document["sn"]["alpha"]) == 1
    rows = read_csv(draws_path.read_text())
    assert len(rows) == 51
    first = draws_path.read_text()
    assert main(EXPONENTIAL + args) == 0
    assert draws_path.read_text() == first


def test_curve_command(tmp_path):
    out = tmp_path / "curve.csv"
    assert main(["curve", "--model", "exponential", "--n", "6", "--mle", "1.2", "--grid", "0.5:2.5:5", "--out", str(out)]) == 0
    rows = read_csv(out.read_text())
    assert rows[0] == ["kind", "theta", "exact", "normal", "sks", "sn", "ho"]
    assert [r[0] for r in rows[1:]] == ["density"] * 5 + ["median"]
    assert float(rows[-1][2]) == pytest.approx(1.2698, abs=1e-4)
    assert float(rows[-1][6]) == pytest.approx(1.2698, abs=5e-3)


def test_curve_rejects_bad_grid(capsys):
    assert main(["curve", "--model", "exponential", "--n", "6", "--mle", "1.2", "--grid", "3:1:10"]) == 2


def test_table_header(tmp_path, golden_dir):
    out = tmp_path / "table.csv"
    assert main(["table", "--n", "6", "--out", str(out)]) == 0
    rows = read_csv(out.read_text())
    assert ",".join(rows[0]) == (golden_dir / "table_header.csv").read_text().strip()
    assert len(rows) == 1 + len(THETA0_GRID)
    assert main(["table", "--n", "6,0"]) == 2


@pytest.mark.slow
def test_table_is_deterministic(tmp_path):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["table", "--out", str(first)]) == 0
    assert main(["table", "--workers", "2", "--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_check_command(capsys):
    assert main(["check", "--only", "special_functions"]) == 0
    assert "PASS  hard  special_functions" in capsys.readouterr().out


def test_check_reports_hard_failure(capsys):
    assert main(["check", "--only", "sn_round_trip", "--tolerance", "sn_match=-1"]) == 1
    assert "FAIL" in capsys.readouterr().out
    assert main(["check", "--tolerance", "sn_match"]) == 2


def test_check_registry_marks_acceptance_checks_hard():
    hard = {name: is_hard for name, is_hard, _ in get_check_service().checks}
    for name in ("sks_num_error_decreasing", "ot_pushforward_logistic", "logistic_map", "logistic_vs_oracle"):
        assert hard[name]
    assert not hard["table_soft_rows"]
    assert not hard["logistic_reference"]


@pytest.mark.slow
def test_logistic_checks_pass(capsys):
    assert main(["check", "--only", "logistic_map,logistic_vs_oracle,sks_num_error_decreasing"]) == 0
    out = capsys.readouterr().out
    assert "PASS  hard  logistic_map" in out
    assert "PASS  hard  logistic_vs_oracle" in out


def test_table_block_is_deterministic():
    service = get_table_service()
    assert service.compute_block(6, 1.2, THETA0_GRID) == service.compute_block(6, 1.2, THETA0_GRID)
