import csv
import json
import math
from pathlib import Path

import pytest

from regcoord.cli import EXIT_INPUT, EXIT_NOT_REGULAR, log_real, main, parse_log_value
from regcoord.polycore import InvalidInputError

DATA = Path(__file__).resolve().parent.parent / "data"


def run(tmp_path, *argv):
    out = tmp_path / "out.json"
    code = main([*map(str, argv), "--json", str(out)])
    return code, (json.loads(out.read_text()) if out.exists() else None)


def test_analyze_sharp_epsilon(tmp_path):
    code, d = run(tmp_path, "analyze", DATA / "sharp_m23.txt")
    assert code == 0 and d["schema"] == 1
    assert d["epsilon"] == "1/12" and d["m_I"] == 6
    assert d["ledger"]["A"][1] == "7/6"


def test_empty_file_is_input_error(tmp_path, capsys):
    f = tmp_path / "empty.txt"
    f.write_text("# nothing here\n")
    assert main(["analyze", str(f)]) == EXIT_INPUT
    assert "line 1" in capsys.readouterr().err


def test_not_regular_has_own_exit_code(tmp_path):
    f = tmp_path / "nr.txt"
    f.write_text("z1\nz1^2 + z1 z2\n")
    assert main(["analyze", str(f)]) == EXIT_NOT_REGULAR != EXIT_INPUT


def test_parse_error_position(tmp_path, capsys):
    f = tmp_path / "bad.txt"
    f.write_text("2 z1\n2 z2^2 +* z1\n")
    assert main(["analyze", str(f)]) == EXIT_INPUT
    assert "line 2, column" in capsys.readouterr().err


def test_tau_pure_square(tmp_path):
    code, d = run(tmp_path, "tau", DATA / "pure_m2.txt", "--relaxed", "--delta", "1e-4", "--mu", "8")
    assert code == 0
    assert d["approx"]["tau"][0]["decimal"].startswith("7.0710678119e-2")
    assert d["approx"]["signature"] == [[2, [0]]]


def test_tau_log_delta_input(tmp_path):
    code, d = run(tmp_path, "tau", DATA / "pure_m2.txt", "--relaxed", "--delta", "ln:-2000", "--mu", "8")
    assert code == 0
    # tau_1 = (delta^(1/2) / 2)^(1/2): log tau = (-1000 - log 2) / 2
    assert float(d["approx"]["tau"][0]["log"]) == pytest.approx((-1000 - math.log(2)) / 2)


def test_relaxed_needs_delta(tmp_path):
    assert main(["tau", str(DATA / "demo_m12.txt"), "--relaxed"]) == EXIT_INPUT


def test_infeasible_delta(tmp_path):
    f = tmp_path / "stiff.txt"
    f.write_text("z1\nz2^2 - 1000 z1\n")
    assert main(["tau", str(f), "--relaxed", "--delta", "0.25", "--mu", "1e6"]) == EXIT_INPUT


def test_types_echo_signatures(tmp_path):
    csv_path = tmp_path / "types.csv"
    code, d = run(tmp_path, "types", DATA / "demo_m12.txt", "--mu", "8", "--grid", "5", "--csv", csv_path)
    assert code == 0 and d["passed"]
    assert d["signatures"] == [{"signature": [[1, [0, 0]], [2, [1, 0]]], "count": 25}]
    assert d["signature_count"] <= d["signature_bound"]
    assert len(list(csv.reader(csv_path.open()))) == 26


def test_scaling_quarter(tmp_path):
    code, d = run(tmp_path, "scaling", DATA / "demo_m12.txt", "--mu", "8", "--a", "1/4")
    assert code == 0
    assert all(float(m) >= 0 for m in d["checks"][0]["margins"])


def test_stability_same_point(tmp_path):
    code, d = run(tmp_path, "stability", DATA / "demo_m12.txt", "--mu", "8", "--point2", "0,0")
    assert code == 0 and d["passed"]
    assert d["log_ratios"] == ["0", "0"]


def test_contact(tmp_path):
    code, d = run(tmp_path, "contact", DATA / "sharp_m23.txt", "--curve", DATA / "sharp_curve.txt")
    assert code == 0
    assert d["contact_order"] == 12 and d["epsilon"] == "1/12" and d["sharp"]


def test_cover_csv(tmp_path):
    csv_path = tmp_path / "boxes.csv"
    code, d = run(tmp_path, "cover", DATA / "demo_m12.txt", "--relaxed", "--delta", "1e-8", "--mu", "8",
                  "--grid", "11", "--csv", csv_path)
    assert code == 0 and d["passed"]
    rows = list(csv.reader(csv_path.open()))
    assert len(rows) - 1 == sum(s["centers"] for s in d["strata"])


VERIFY = ["verify", DATA / "demo_m12.txt", "--relaxed", "--delta", "1e-8", "--mu", "8",
          "--samples", "200", "--grid", "11", "--seed", "3"]


def test_verify_demo_passes(tmp_path):
    csv_path = tmp_path / "margins.csv"
    code, d = run(tmp_path, *VERIFY, "--csv", csv_path)
    assert code == 0 and d["passed"], d["checks"]
    assert not d["certified"]
    assert float(d["certificate"]["slope"]) == pytest.approx(0.25, abs=1e-3)
    assert len(list(csv.reader(csv_path.open()))) == 1 + 200


def test_verify_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir()
    b.mkdir()
    run(a, *VERIFY)
    run(b, *VERIFY)
    assert (a / "out.json").read_bytes() == (b / "out.json").read_bytes()


def test_verify_strict_underflow_is_reported(tmp_path, capsys):
    assert main(["verify", str(DATA / "demo_m12.txt"), "--samples", "10"]) == EXIT_INPUT
    assert "underflow" in capsys.readouterr().err


def test_verify_short_ladder(tmp_path):
    code, d = run(tmp_path, *VERIFY, "--delta-ladder", "2")
    assert "error" in d["certificate"] and not d["checks"]["certificate"]
    # relaxed results are advisory, so the exit code stays 0
    assert code == 0


def test_log_real_rendering():
    assert log_real(math.log(2.5e-3)) == {"decimal": "2.5000000000e-3", "log": f"{math.log(2.5e-3):.12g}"}
    tiny = log_real(-5000.0)
    assert tiny["decimal"].endswith("e-2172") and tiny["log"] == "-5000"
    assert log_real(0.0)["decimal"] == "1.0000000000e+0"


def test_parse_log_value():
    assert parse_log_value("ln:-3.5", "delta") == -3.5
    assert parse_log_value("1e-4", "delta") == pytest.approx(math.log(1e-4))
    with pytest.raises(InvalidInputError):
        parse_log_value("-1", "delta")
    with pytest.raises(InvalidInputError):
        parse_log_value("abc", "delta")
