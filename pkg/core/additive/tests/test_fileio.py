import json
import math

import numpy as np
import pytest

from additive.counting import EquationForm
from additive.cyclic import CyclicFunction
from additive.errors import InputFormatError
from additive.fileio import (
    load_function,
    load_plan,
    load_report,
    resolve_output,
    save_function,
    save_plan,
    to_jsonable,
    write_csv,
    write_report,
)
from additive.transfer import Overrides, TransferPlan


def test_json_round_trip(tmp_path, rng):
    f = CyclicFunction(17, rng.random(17), density=True)
    path = save_function(f, str(tmp_path / "f.json"))
    loaded = load_function(path)
    assert loaded.modulus == 17
    assert loaded.values.tolist() == f.values.tolist()


def test_csv_round_trip_is_exact(tmp_path, rng):
    f = CyclicFunction(9, rng.random(9), density=True)
    path = save_function(f, str(tmp_path / "f.csv"))
    text = open(path).read().splitlines()
    assert text[0] == "index,value"
    assert len(text) == 10
    assert load_function(path).values.tolist() == f.values.tolist()


def test_csv_without_header(tmp_path):
    path = tmp_path / "plain.txt"
    path.write_text("0,0.25\n1,1\n2,0\n")
    assert load_function(str(path)).values.tolist() == [0.25, 1.0, 0.0]


@pytest.mark.parametrize("text,needle", [
    ("index,value\n0,0.5\n2,0.1\n", "line 3"),
    ("index,value\n0,0.5\n1,abc\n", "field 'value'"),
    ("index,value\n0,0.5\n1,1.5\n", "outside [0, 1]"),
    ("index,value\n0,0.5,1\n", "2 columns"),
    ("index,value\n0,0.5\n", "at least 2 rows"),
])
def test_csv_errors_have_context(tmp_path, text, needle):
    path = tmp_path / "bad.csv"
    path.write_text(text)
    with pytest.raises(InputFormatError) as info:
        load_function(str(path))
    assert needle in str(info.value)


@pytest.mark.parametrize("payload,field", [
    ({"values": [0.1, 0.2]}, "modulus"),
    ({"modulus": 3, "values": [0.1, 0.2]}, "values"),
    ({"modulus": 2, "values": [0.1, "x"]}, "values[1]"),
    ({"modulus": 2, "values": [0.1, True]}, "values[1]"),
    ({"modulus": 1, "values": [0.1]}, "modulus"),
])
def test_json_errors_name_the_field(tmp_path, payload, field):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(payload))
    with pytest.raises(InputFormatError) as info:
        load_function(str(path))
    assert info.value.field == field


def test_broken_json_reports_line(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"modulus": 2,\n "values": [0.1, }')
    with pytest.raises(InputFormatError) as info:
        load_function(str(path))
    assert info.value.line == 2


def test_missing_file(tmp_path):
    with pytest.raises(InputFormatError):
        load_function(str(tmp_path / "nope.json"))


def test_to_jsonable():
    data = to_jsonable({
        "a": np.arange(3), "b": np.float64(0.5), "c": complex(1, -2),
        "d": math.inf, "e": (np.bool_(True), np.int64(4)), 7: None,
    })
    assert data == {"a": [0, 1, 2], "b": 0.5, "c": {"re": 1.0, "im": -2.0},
                    "d": None, "e": [True, 4], "7": None}
    json.dumps(data, allow_nan=False)


def test_relative_outputs_follow_output_dir(tmp_path, monkeypatch):
    from additive.config import get_settings

    monkeypatch.setenv("ADDITIVE_OUTPUT_DIR", str(tmp_path / "out"))
    get_settings.cache_clear()
    path = write_report({"x": 1.0}, "nested/report.json")
    assert path == str(tmp_path / "out" / "nested" / "report.json")
    assert load_report(path) == {"x": 1.0}
    assert resolve_output(str(tmp_path / "abs.json")) == str(tmp_path / "abs.json")


def test_write_csv_keeps_full_precision(tmp_path):
    path = write_csv(str(tmp_path / "t.csv"), ("N", "v"), [(5, 1 / 3), (6, np.float64(2 / 3))])
    rows = open(path).read().splitlines()
    assert rows[1] == f"5,{1 / 3!r}"
    assert float(rows[2].split(",")[1]) == 2 / 3


def make_plan():
    return TransferPlan(
        N=1009, k=3, epsilon=0.1, eq=EquationForm((1, 1, -2)), L=7, q=1, m2=13, m1=101,
        M=1313, b_set=(0, 1, 2), I_half=45, Xc=(0, 1, 3), u_g=0, u_h=4,
        overrides=Overrides(i_scale=0.05, band_scale=0.3, sep_scale=0.1),
        top_frequencies=(0, 1, 2), separation_fraction=0.05, m1_range=(101, 200),
    )


def test_plan_round_trip(tmp_path):
    plan = make_plan()
    path = save_plan(plan, str(tmp_path / "plan.json"))
    assert load_plan(path) == plan


def test_plan_inside_report(tmp_path):
    plan = make_plan()
    path = write_report({"command": "transfer", "plan": plan.to_dict()}, str(tmp_path / "r.json"))
    assert load_plan(path) == plan


def test_inconsistent_plan_is_input_error(tmp_path):
    data = make_plan().to_dict()
    data["M"] = 1000
    path = tmp_path / "plan.json"
    path.write_text(json.dumps(data))
    with pytest.raises(InputFormatError):
        load_plan(str(path))
