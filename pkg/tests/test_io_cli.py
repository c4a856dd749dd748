import json
import subprocess
import sys

import numpy as np
import pytest

from sparsegeom.cli import RunConfig, bound_for, main
from sparsegeom.errors import ConfigError, DimensionMismatch, ParseError
from sparsegeom.geometry import QueryResult
from sparsegeom.io import RECORD_FIELDS, ResultRecord, load_pointset, save_pointset

TIMING = ("build_ms", "query_ms")


def strip_timing(lines):
    out = []
    for line in lines:
        rec = json.loads(line)
        for key in TIMING:
            rec.pop(key, None)
        out.append(rec)
    return out


@pytest.mark.parametrize("suffix", [".csv", ".json"])
def test_pointset_round_trip(tmp_path, rng, suffix):
    P = rng.normal(size=(7, 3)) * 1e3
    path = tmp_path / f"p{suffix}"
    save_pointset(P, path)
    assert np.array_equal(load_pointset(path).coords, P)


def test_csv_errors(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("1,2,3\n4,5\n")
    with pytest.raises(ParseError) as e:
        load_pointset(p)
    assert e.value.row == 2
    p.write_text("1,2\n3,abc\n")
    with pytest.raises(ParseError) as e:
        load_pointset(p)
    assert (e.value.row, e.value.column) == (2, 2)
    p.write_text("1,nan\n")
    with pytest.raises(ParseError):
        load_pointset(p)


def test_json_errors(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"dim": 3, "points": [[1, 2]]}')
    with pytest.raises(DimensionMismatch):
        load_pointset(p)
    p.write_text('{"points": [[1, "x"]]}')
    with pytest.raises(ParseError):
        load_pointset(p)
    p.write_text("{oops")
    with pytest.raises(ParseError):
        load_pointset(p)


def test_record_round_trip():
    res = QueryResult("ANIF", 0.5, (1, 2), ((1, 0.25), (2, 0.75)))
    rec = ResultRecord.from_result(res, build_ms=1.0, query_ms=2.0, seed=3, backend="exact")
    assert list(rec.to_dict()) == list(RECORD_FIELDS)
    assert ResultRecord.from_json(rec.to_json()) == rec


def test_config_validation():
    with pytest.raises(ConfigError):
        RunConfig("query", variant="nope").validate()
    with pytest.raises(ConfigError):
        RunConfig("query", variant="segment", k=3).validate()
    with pytest.raises(ConfigError):
        RunConfig("query", epsilon=0).validate()
    assert bound_for("anis", 0.2) == pytest.approx(1.4)
    assert bound_for("segment-offline", 0.2) == pytest.approx(2.4)


def write_instance(tmp_path, rng):
    save_pointset(rng.normal(size=(12, 3)), tmp_path / "p.csv")
    save_pointset(rng.normal(size=(6, 3)), tmp_path / "q.csv")
    return str(tmp_path / "p.csv"), str(tmp_path / "q.csv")


@pytest.mark.parametrize("variant,k", [("anif", 2), ("anlf", 3), ("anis", 3), ("segment", 2),
                                       ("segment-offline", 2), ("slr", 2)])
def test_query_is_deterministic(tmp_path, rng, variant, k):
    p, q = write_instance(tmp_path, rng)
    outs = []
    for threads, name in ((1, "a"), (1, "b"), (3, "c")):
        o = str(tmp_path / f"{name}.jsonl")
        assert main(["query", "--input", p, "--queries", q, "--variant", variant, "--k", str(k),
                     "--threads", str(threads), "--seed", "4", "--output", o]) == 0
        outs.append(strip_timing(open(o).read().splitlines()))
    assert outs[0] == outs[1] == outs[2]
    assert len(outs[0]) == 6 and [r["query_index"] for r in outs[0]] == list(range(6))


def test_oracle_check_exit_code(tmp_path):
    o = tmp_path / "o.jsonl"
    assert main(["oracle-check", "--variant", "anif", "--k", "2", "--trials", "20",
                 "--n-points", "10", "--output", str(o)]) == 0
    summary = json.loads(o.read_text().splitlines()[-1])
    assert summary["violations"] == 0 and summary["max_factor"] <= summary["bound"] + 1e-9


def test_errors_exit_2(tmp_path, capsys):
    assert main(["query", "--variant", "bogus"]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "ConfigError"
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3\n")
    assert main(["query", "--input", str(bad), "--queries", str(bad)]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "ParseError" and "row 2" in err["message"]


def test_budget_exceeded(tmp_path, rng, capsys):
    p, q = write_instance(tmp_path, rng)
    assert main(["query", "--input", p, "--queries", q, "--k", "3", "--budget-structures", "5"]) == 2
    assert json.loads(capsys.readouterr().err)["error"] == "InstanceTooLarge"


def test_reduce_commands(capsys):
    assert main(["reduce", "ksum", "--numbers", "5,7,-12,3", "--k", "3"]) == 0
    rec = json.loads(capsys.readouterr().out)
    assert sorted(rec["values"]) == [-12, 5, 7]
    assert main(["reduce", "hopcroft", "--trials", "50"]) == 0
    assert json.loads(capsys.readouterr().out)["max_relative_error"] < 1e-9
    assert main(["reduce", "degeneracy", "--n-points", "10", "--dim", "2"]) == 0
    assert json.loads(capsys.readouterr().out)["degenerate"] in (True, False)


def test_bench_smoke(capsys):
    assert main(["bench", "--variant", "anif", "--k", "2", "--n", "20,40", "--trials", "5"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert json.loads(lines[-1])["summary"] == "bench"


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "sparsegeom", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip()
