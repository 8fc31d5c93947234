import json
import math

import numpy as np
import pytest

from additive.commands import AdditiveToolkit
from additive.fileio import load_function
from cli.main import exit_code, main, parse_args


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def test_spectrum_constant(capsys, write_function, tmp_path):
    path = write_function([0.5] * 101)
    csv_path = str(tmp_path / "spectrum.csv")
    code, report = run(capsys, "spectrum", "--input", path, "--k", "5", "--csv", csv_path)
    assert code == 0
    assert report["theta"] == pytest.approx(0.5)
    assert report["tail"] == pytest.approx(0.0, abs=1e-18)
    assert report["hypothesis"]["passed"] is True
    assert len(open(csv_path).read().splitlines()) == 101 + 1


def test_spectrum_interval_fails(capsys, write_function):
    path = write_function([1.0] * 50 + [0.0] * 51)
    code, report = run(capsys, "spectrum", "--input", path, "--k", "5")
    assert code == 1
    assert report["hypothesis"]["tail_energy"] > report["hypothesis"]["tail_threshold"]


def test_count_both(capsys, write_function):
    path = write_function([1, 1, 1, 0, 0])
    code, report = run(capsys, "count", "--input", path, "--coeffs", "1,1,-2")
    assert code == 0
    assert report["count_brute"] == 5
    assert report["count_fourier"] == pytest.approx(5)
    assert report["relative_difference"] < 1e-9


def test_count_constant_closed_form(capsys, write_function):
    path = write_function([0.5] * 31)
    code, report = run(capsys, "count", "--input", path, "--coeffs", "1,1,-2")
    assert code == 0
    assert report["count_brute"] == pytest.approx(0.125 * 31 ** 2)


def test_count_rejects_non_invariant_form(capsys, write_function):
    path = write_function([0.5] * 7)
    code, report = run(capsys, "count", "--input", path, "--coeffs", "1,1,1")
    assert code == 2
    assert report["success"] is False
    assert report["error_type"] == "invalid-argument"


def test_malformed_input_exit_code(capsys, tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("index,value\n0,0.5\n1,oops\n")
    code, report = run(capsys, "count", "--input", str(path), "--coeffs", "1,1,-2")
    assert code == 2
    assert "line 3" in report["error"]
    assert report["error_type"] == "input-format"


def test_certify_exit_codes(capsys, write_function):
    code, report = run(capsys, "certify", "--input", write_function([0.5] * 101),
                       "--coeffs", "1,1,-2", "--k", "5", "--eps", "0.1")
    assert code == 0
    assert report["certificate"]["count"] == pytest.approx(0.125 * 101 ** 2, rel=1e-9)
    code, report = run(capsys, "certify", "--input", write_function([0.0] * 101, "zero.json"),
                       "--coeffs", "1,1,-2", "--k", "5")
    assert code == 1
    assert report["certificate"]["hypothesis_failed"] is True


def test_certify_sumset_example(capsys, tmp_path):
    path = str(tmp_path / "sumset.json")
    code, _ = run(capsys, "examples", "sumset", "--N", "101", "--size", "91", "--seed", "3", "--out", path)
    assert code == 0
    code, report = run(capsys, "certify", "--input", path, "--coeffs", "1,1,-2", "--k", "5")
    assert code == 0
    assert report["passed"] is True


def test_transfer_non_prime(capsys, write_function):
    code, report = run(capsys, "transfer", "--input", write_function([0.5] * 100),
                       "--coeffs", "1,1,-2", "--k", "3")
    assert code == 2
    assert report["stage"] == "hypothesis"


def test_transfer_plan_round_trip(capsys, write_function, tmp_path):
    path = write_function([0.5] * 1009)
    plan_path = str(tmp_path / "plan.json")
    overrides = "i_scale=0.05,band_scale=0.3,sep_scale=0.1"
    code, first = run(capsys, "transfer", "--input", path, "--coeffs", "1,1,-2", "--k", "3",
                      "--overrides", overrides, "--plan-out", plan_path)
    assert code == 0, [k for k, ok in first["chain"]["checks"].items() if not ok]
    code, second = run(capsys, "transfer", "--input", path, "--coeffs", "1,1,-2", "--k", "3",
                       "--plan-in", plan_path)
    assert code == 0
    assert second["chain"]["plan"] == first["chain"]["plan"]
    assert second["chain"]["checks"] == first["chain"]["checks"]
    assert second["chain"]["count_h"] == first["chain"]["count_h"]


def test_examples_sumset_full(capsys, tmp_path):
    path = str(tmp_path / "full.json")
    code, report = run(capsys, "examples", "sumset", "--N", "13", "--full", "--fold", "3", "--out", path)
    assert code == 0
    assert report["inputs"]["params"] == {"fold": 3, "S": "full"}
    assert load_function(path).values.tolist() == [1.0] * 13


def test_examples_gpy_trivial_divisor(capsys, tmp_path):
    path = str(tmp_path / "gpy.csv")
    code, _ = run(capsys, "examples", "gpy", "--N", "100", "--delta", "0.1", "--out", path)
    assert code == 0
    values = load_function(path).values
    np.testing.assert_allclose(values[1:51], 0.01)
    assert values[0] == 0 and np.all(values[51:] == 0)


@pytest.mark.parametrize("kind", ["random", "sumset", "trig"])
def test_examples_are_deterministic(capsys, tmp_path, kind):
    first, second = str(tmp_path / "a.json"), str(tmp_path / "b.json")
    run(capsys, "examples", kind, "--N", "101", "--seed", "4", "--out", first)
    run(capsys, "examples", kind, "--N", "101", "--seed", "4", "--out", second)
    assert open(first, "rb").read() == open(second, "rb").read()


def test_examples_parameter_error(capsys, tmp_path):
    code, report = run(capsys, "examples", "gpy", "--N", "100", "--delta", "0.7")
    assert code == 2
    assert report["input_error"] is True


def test_examples_window_report():
    result = AdditiveToolkit().Examples("window", 2003, params={"d": 3})
    assert result["success"]
    assert result["details"]["X"] == 8
    assert result["details"]["alpha_width"] == math.floor(2003 ** 0.7)
    assert result["details"]["width_capped"] is True
    assert result["details"]["large_coefficients"]["criterion_holds"]


def test_unknown_example_kind():
    result = AdditiveToolkit().Examples("lattice", 101)
    assert result["success"] is False
    assert result["input_error"] is True


def test_bench_rejects_zero_trials(capsys):
    code, report = run(capsys, "bench", "--sizes", "16,32", "--trials", "0")
    assert code == 2
    assert report["success"] is False


def test_bench_csv(capsys, tmp_path):
    csv_path = str(tmp_path / "bench.csv")
    code, report = run(capsys, "bench", "--sizes", "16,32", "--trials", "1", "--csv", csv_path)
    assert code == 0
    lines = open(csv_path).read().splitlines()
    assert lines[0] == "N,brute_time,fourier_time,ratio"
    assert len(lines) == 3
    assert [row["N"] for row in report["rows"]] == [16, 32]


def test_report_file(capsys, write_function, tmp_path):
    out = str(tmp_path / "report.json")
    code, report = run(capsys, "count", "--input", write_function([0.5] * 11),
                       "--coeffs", "1,2,-3", "--method", "fourier", "--out", out)
    assert code == 0
    saved = json.load(open(out))
    assert saved["command"] == "count"
    assert saved["count_fourier"] == pytest.approx(report["count_fourier"])


def test_usage_errors_exit_2():
    with pytest.raises(SystemExit) as info:
        parse_args(["count", "--input", "f.json"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        parse_args(["certify", "--input", "f.json", "--coeffs", "1,1,-2", "--k", "3", "--mode", "loose"])
    assert info.value.code == 2


def test_bad_environment_is_input_error(capsys, monkeypatch, write_function):
    from additive.config import get_settings

    path = write_function([0.5] * 11)
    monkeypatch.setenv("ADDITIVE_DFT_METHOD", "fftw")
    get_settings.cache_clear()
    assert main(["count", "--input", path, "--coeffs", "1,1,-2"]) == 2
    assert "ADDITIVE_DFT_METHOD" in capsys.readouterr().err


def test_exit_code_mapping():
    assert exit_code({"success": True, "passed": True}) == 0
    assert exit_code({"success": True, "passed": False}) == 1
    assert exit_code({"success": False, "input_error": False}) == 1
    assert exit_code({"success": False, "input_error": True}) == 2


def test_examples_smoothed_reports_intermediate_counts(capsys, tmp_path):
    path = str(tmp_path / "f3.json")
    code, report = run(capsys, "examples", "smoothed", "--N", "2003", "--delta", "0.1", "--out", path)
    assert code == 0
    details = report["details"]
    for key in ("g2_large", "f2_large"):
        assert set(details[key]) == {"threshold", "count", "bound", "within_bound"}
        assert details[key]["within_bound"] == (details[key]["count"] <= details[key]["bound"])
    assert details["window_widths"]["1"]["capped"] is True


@pytest.mark.parametrize("argv", [
    ("spectrum", "--k", "3"),
    ("count", "--coeffs", "1,1,-2"),
    ("certify", "--coeffs", "1,1,-2", "--k", "3"),
])
def test_seed_is_a_common_flag(capsys, write_function, argv):
    path = write_function([0.5] * 11)
    code, report = run(capsys, argv[0], "--input", path, "--seed", "7", *argv[1:])
    assert code in (0, 1)
    assert report["inputs"]["seed"] == 7


def test_transfer_accepts_seed():
    args = parse_args(["transfer", "--input", "f.json", "--coeffs", "1,1,-2", "--k", "3", "--seed", "11"])
    assert args.seed == 11
