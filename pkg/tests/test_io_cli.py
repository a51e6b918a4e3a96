import io
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from trigeval import CountLaw, DuplicateUnit, GenConfig, ParseError, SchemaError, generate_dataset
from trigeval.cli import main
from trigeval.estimators import fit_full_knowledge
from trigeval.io import (dump_jsonl, fit_record, parse_fits_jsonl, parse_observation_csv,
                         parse_unit_csv, write_observation_arrays, write_unit_csv)
from trigeval.model import generate_observation_level


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


# -- unit CSV ---------------------------------------------------------------

def test_parse_two_rows(tmp_path):
    p = write(tmp_path / "u.csv", "unit_id,assignment,n_obs,mean_response\na,0,3,1.5\nb,1,2,-2\n")
    ds = parse_unit_csv(p)
    assert len(ds) == 2 and ds.true_trigger_intensity is None
    assert ds.mean_response.tolist() == [1.5, -2.0]


def test_parse_column_order_and_blanks(tmp_path):
    p = write(tmp_path / "u.csv", "mean_response,trigger_intensity,unit_id,n_obs,assignment\n"
                                  "1,0.5,a,3,0\n2,,b,4,1\n")
    ds = parse_unit_csv(p)
    assert ds.true_trigger_intensity[0] == 0.5 and math.isnan(ds.true_trigger_intensity[1])


@pytest.mark.parametrize("body,line", [
    ("a,2,3,1.0\n", 2),
    ("a,0,3,1.0\nb,1,x,1.0\n", 3),
    ("a,0,3,abc\n", 2),
    ("a,0,3,nan\n", 2),
    ("a,0,0,1.0\n", 2),
])
def test_parse_errors_carry_row(tmp_path, body, line):
    p = write(tmp_path / "u.csv", "unit_id,assignment,n_obs,mean_response\n" + body)
    with pytest.raises(ParseError) as info:
        parse_unit_csv(p)
    assert info.value.row == line


def test_parse_intensity_out_of_range(tmp_path):
    p = write(tmp_path / "u.csv",
              "unit_id,assignment,n_obs,mean_response,trigger_intensity\na,0,3,1.0,1.5\n")
    with pytest.raises(ParseError):
        parse_unit_csv(p)


def test_schema_error_names_column(tmp_path):
    p = write(tmp_path / "u.csv", "unit_id,assignment,mean_response\na,0,1.0\n")
    with pytest.raises(SchemaError) as info:
        parse_unit_csv(p)
    assert info.value.column == "n_obs"


def test_duplicate_unit(tmp_path):
    p = write(tmp_path / "u.csv", "unit_id,assignment,n_obs,mean_response\na,0,1,1\na,1,1,2\n")
    with pytest.raises(DuplicateUnit):
        parse_unit_csv(p)


def test_unit_roundtrip(tmp_path):
    ds = generate_dataset(GenConfig(n_units=500, seed=4))
    ds = ds.with_estimated_intensity(np.where(np.arange(500) % 7 == 0, np.nan,
                                              ds.true_trigger_intensity))
    write_unit_csv(ds, tmp_path / "u.csv")
    assert parse_unit_csv(tmp_path / "u.csv") == ds


# -- observation CSV ---------------------------------------------------------

def test_observation_blank_status(tmp_path):
    p = write(tmp_path / "o.csv", "unit_id,response,trigger_status\na,1.0,\na,2.0,\n")
    assert [o.trigger_status for o in parse_observation_csv(p)] == [None, None]
    p = write(tmp_path / "o2.csv", "unit_id,response\na,1.0\n")
    assert parse_observation_csv(p)[0].trigger_status is None


def test_observation_non_binary_status(tmp_path):
    p = write(tmp_path / "o.csv", "unit_id,response,trigger_status\na,1.0,0.5\n")
    with pytest.raises(ParseError):
        parse_observation_csv(p)


def test_observation_roundtrip_1e5(tmp_path):
    cfg = GenConfig(n_units=100, obs_law=CountLaw.constant(1000), seed=5)
    _, ids, index, y, s = generate_observation_level(cfg)
    assert len(y) == 100_000
    write_observation_arrays(ids, index, y, s, tmp_path / "o.csv")
    back = parse_observation_csv(tmp_path / "o.csv")
    assert len(back) == len(y)
    assert np.array_equal([o.response for o in back], y)
    assert np.array_equal([o.trigger_status for o in back], s)
    assert [o.unit_id for o in back[:3]] == [ids[i] for i in index[:3]]


# -- JSON lines --------------------------------------------------------------

def test_fit_jsonl_bit_exact():
    f = fit_full_knowledge(generate_dataset(GenConfig(n_units=100, seed=1)))
    buf = io.StringIO()
    dump_jsonl([fit_record(f, "t1"), fit_record(f)], buf)
    buf.seek(0)
    back = parse_fits_jsonl(buf)
    assert back[0] == ("t1", f) and back[1] == (None, f)


def test_fit_jsonl_malformed():
    with pytest.raises(ParseError):
        parse_fits_jsonl(io.StringIO("{not json\n"))


# -- CLI ---------------------------------------------------------------------

def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_cli_bounds(capsys):
    code, out, _ = run(capsys, "bounds", "--beta1", 1, "--beta2", 2, "--m", 4)
    assert code == 0
    rows = dict(line.split(",") for line in out.strip().splitlines()[1:])
    assert float(rows["variance_gap_bound"]) == 1.25
    assert float(rows["ate_bias_bound"]) == pytest.approx(2 / 3, abs=1e-16)


def test_cli_bounds_jsonl(capsys):
    code, out, _ = run(capsys, "bounds", "--beta1", 0, "--beta2", 1, "--m", 1, "--format", "jsonl")
    assert code == 0 and json.loads(out) == {"variance_gap_bound": 0.5}


def test_cli_estimate_missing_intensity(tmp_path, capsys):
    p = write(tmp_path / "u.csv", "unit_id,assignment,n_obs,mean_response\n"
                                  "a,0,1,1\nb,1,1,2\nc,0,1,1.5\nd,1,1,3\n")
    code, _, err = run(capsys, "estimate", "--data", p, "--method", "full")
    assert code == 1
    assert json.loads(err)["error"] == "MissingTriggerData"
    code, out, _ = run(capsys, "estimate", "--data", p, "--method", "baseline")
    assert code == 0 and json.loads(out)["ate"] == pytest.approx(1.25)


def test_cli_usage_errors(capsys):
    with pytest.raises(SystemExit) as info:
        main(["estimate", "--bogus"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2
    capsys.readouterr()


def test_cli_missing_file(tmp_path, capsys):
    code, _, err = run(capsys, "estimate", "--data", tmp_path / "nope.csv", "--method", "all")
    assert code == 1 and json.loads(err)["error"] == "IOError"


def test_cli_simulate_deterministic(tmp_path, capsys):
    for tag in ("a", "b"):
        code, _, _ = run(capsys, "simulate", "--seed", 7, "--n-units", 300, "--n-obs", 20,
                         "--out", tmp_path / f"{tag}.csv",
                         "--observations", tmp_path / f"{tag}_obs.csv")
        assert code == 0
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a_obs.csv").read_bytes() == (tmp_path / "b_obs.csv").read_bytes()
    run(capsys, "simulate", "--seed", 8, "--n-units", 300, "--out", tmp_path / "c.csv")
    assert (tmp_path / "a.csv").read_bytes() != (tmp_path / "c.csv").read_bytes()


def test_cli_pipeline(tmp_path, capsys):
    units, obs = tmp_path / "u.csv", tmp_path / "o.csv"
    assert run(capsys, "simulate", "--seed", 1, "--n-units", 200, "--n-obs", 30,
               "--trigger-law", "uniform:0.1,0.9", "--out", units, "--observations", obs)[0] == 0
    filled = tmp_path / "filled.csv"
    assert run(capsys, "sample-triggers", "--observations", obs, "--units", units, "--m", 10,
               "--seed", 3, "--out", filled)[0] == 0
    ds = parse_unit_csv(filled)
    assert ds.has_estimated_intensity and ds.has_true_intensity
    code, out, _ = run(capsys, "estimate", "--data", filled, "--method", "all",
                       "--treatment-id", "t1")
    fits = [json.loads(line) for line in out.splitlines()]
    assert code == 0 and [f["method"] for f in fits] == ["baseline", "full", "partial"]
    assert all(f["treatment_id"] == "t1" for f in fits)

    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    a.write_text(out.splitlines()[0] + "\n")
    b.write_text(out.splitlines()[2] + "\n")
    code, out, _ = run(capsys, "compare", "--a", a, "--b", b)
    rows = dict(line.split(",") for line in out.strip().splitlines()[1:])
    assert code == 0 and rows["n_treatments"] == "1" and rows["ci_overlap_95"] == "1"

    code, out, _ = run(capsys, "estimate", "--data", filled, "--method", "full",
                       "--format", "csv")
    rows = dict(line.split(",") for line in out.strip().splitlines()[1:])
    assert code == 0 and float(rows["full_dof"]) == 197


def test_cli_compare_mismatched_ids(tmp_path, capsys):
    f = fit_full_knowledge(generate_dataset(GenConfig(n_units=50, seed=0)))
    dump_jsonl([fit_record(f, "x")], tmp_path / "a.jsonl")
    dump_jsonl([fit_record(f, "y")], tmp_path / "b.jsonl")
    code, _, err = run(capsys, "compare", "--a", tmp_path / "a.jsonl", "--b", tmp_path / "b.jsonl")
    assert code == 1 and json.loads(err)["error"] == "InvalidInput"


SWEEP = {
    "gen": {"n_units": 150, "trigger_law": {"kind": "two_point", "low": 0.2, "high": 0.8},
            "obs_law": {"kind": "constant", "n": 50}},
    "axis": "sample_budget_m",
    "grid": [2, 5, 10],
    "replications": 10,
    "estimators": ["full", "partial"],
    "plan": {"m": 2, "seed": 4},
}


def test_cli_sweep_outputs(tmp_path, capsys):
    cfg = tmp_path / "sweep.json"
    cfg.write_text(json.dumps(SWEEP))
    for tag, workers in (("one", 1), ("two", 2)):
        code, _, _ = run(capsys, "sweep", "--config", cfg, "--seed", 5, "--workers", workers,
                         "--out", tmp_path / tag)
        assert code == 0
    names = sorted(p.name for p in (tmp_path / "one").iterdir())
    assert names == ["bias_vs_m.csv", "report.json", "se_vs_m.csv"]
    for name in names:
        assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()
    report = json.loads((tmp_path / "one" / "report.json").read_text())
    assert report["seed"] == 5 and len(report["rows"]) == 6
    bias = (tmp_path / "one" / "bias_vs_m.csv").read_text().splitlines()
    assert bias[0] == "axis,estimator,metric,value" and len(bias) == 7


def test_cli_sweep_bad_config(tmp_path, capsys):
    cfg = tmp_path / "sweep.json"
    cfg.write_text(json.dumps({**SWEEP, "grid": []}))
    code, _, err = run(capsys, "sweep", "--config", cfg, "--seed", 1, "--out", "-")
    assert code == 1 and json.loads(err)["error"] == "InvalidInput"


def test_console_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "trigeval.cli", "bounds", "--beta1", "1",
                          "--beta2", "2", "--m", "4"], capture_output=True, text=True)
    assert out.returncode == 0 and "1.25" in out.stdout
