from __future__ import annotations

import csv
import json
import math
import subprocess
import sys

import pytest

from rvzflow.cli import parse_args, run
from rvzflow.linalg import RenormMatrix
from rvzflow.perm import RauzyClass
from rvzflow.words import Word


def call(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_rauzy_class(capsys):
    code, out, _ = call(capsys, "rauzy", "class", "--pi", "3,2,1")
    assert code == 0
    data = json.loads(out)
    assert data["schema_version"] == 1 and data["command"] == "rauzy class"
    assert data["config"]["pi"] == "3,2,1"
    rc = RauzyClass.from_dict({k: v for k, v in data.items() if k not in ("schema_version", "command", "config")})
    assert len(rc.members) == 3


def test_reducible_is_usage_error(capsys):
    code, out, err = call(capsys, "rauzy", "class", "--pi", "1,2")
    assert code == 1 and out == ""
    msg = json.loads(err)
    assert msg["exit_code"] == 1 and "reducible" in msg["error"]


def test_unknown_flag_rejected(capsys):
    code, _, err = call(capsys, "rauzy", "class", "--pi", "2,1", "--bogus", "3")
    assert code == 1 and json.loads(err)["exit_code"] == 1
    assert call(capsys, "nosuch")[0] == 1


def test_orbits_count_log3(capsys, tmp_path):
    csv_path = tmp_path / "c.csv"
    code, out, _ = call(capsys, "orbits", "count", "--pi", "2,1", "--Tmin", "1", "--Tmax", "log(3)",
                        "--step", "0.0986", "--out", str(csv_path))
    assert code == 0
    rows = json.loads(out)["per_T"]
    assert rows[-1]["T"] == math.log(3)
    assert (rows[-1]["n_words"], rows[-1]["n_orbits"]) == (2, 1)
    with open(csv_path) as fh:
        table = list(csv.DictReader(fh))
    assert list(table[0]) == ["T", "n_words", "n_orbits", "nodes", "seconds"]
    assert table[-1]["n_words"] == "2"


def test_orbits_count_abort_exit_2(capsys):
    code, out, err = call(capsys, "orbits", "count", "--pi", "2,1", "--Tmin", "2", "--Tmax", "9",
                          "--step", "1", "--node-budget", "100000")
    assert code == 2
    rep = json.loads(out)
    assert rep["aborted"] and len(rep["per_T"]) >= 1
    assert json.loads(err.strip().splitlines()[-1])["exit_code"] == 2


def test_reproducible_output(capsys):
    argv = ["orbits", "count", "--pi", "3,2,1", "--Tmin", "1", "--Tmax", "3", "--no-timing"]
    assert call(capsys, *argv)[1] == call(capsys, *argv)[1]
    argv = ["measure", "cylinder", "--pi", "2,1", "--word", "a1", "--word2", "a1,b1",
            "--samples", "5000", "--seed", "9", "--threads", "1"]
    a, b = call(capsys, *argv)[1], call(capsys, *argv)[1]
    assert a == b and json.loads(a)["passed"]


def test_words_and_iet(capsys):
    code, out, _ = call(capsys, "words", "info", "--pi", "2,1", "--word", "a1,b1")
    data = json.loads(out)
    assert code == 0 and data["norm"] == 3 and data["admissible"]
    assert RenormMatrix.from_json(data["matrix"]) == Word.from_dict(data["word"]).matrix
    code, out, _ = call(capsys, "iet", "step", "--pi", "2,1", "--lambda", "0.3,0.7", "--mode", "rational")
    data = json.loads(out)
    assert data["lambda"] == ["3/7", "4/7"] and data["shrink"] == "7/10"
    code, out, _ = call(capsys, "iet", "orbit", "--pi", "2,1", "--lambda", "0.3,0.7", "--mode", "rational",
                        "--steps", "1")
    lines = [json.loads(x) for x in out.splitlines()]
    assert len(lines) == 2 and lines[1]["letter"] == {"c": "b", "n": 2}
    assert lines[1]["lambda"] == ["3/4", "1/4"]
    # rational orbits end in a tie, reported as a validation error
    code, out, err = call(capsys, "iet", "orbit", "--pi", "2,1", "--lambda", "0.3,0.7", "--mode", "rational",
                          "--steps", "5")
    assert code == 1 and "degenerate" in json.loads(err)["error"]
    code, out, _ = call(capsys, "words", "enumerate", "--pi", "2,1", "--T", "log(3)")
    assert sorted(json.loads(x)["word"] for x in out.splitlines()[1:]) == ["a1,b1", "b1,a1"]


def test_zip_point(capsys):
    code, out, _ = call(capsys, "zip", "point", "--pi", "2,1", "--lambda", "0.3,0.7", "--delta=-1,2",
                        "--mode", "rational")
    data = json.loads(out)
    assert data["h"] == ["2", "1"] and data["a"] == ["1", "-1"]
    assert data["area"] == "13/10" and data["violations"] == []


def test_config_precedence(tmp_path, monkeypatch):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# defaults\nthreads = 3\nseed = 5\nsamples=2000\n")
    base = ["measure", "expansion", "--pi", "2,1", "--t", "0.1", "--config", str(cfg)]
    monkeypatch.delenv("THREADS", raising=False)
    args = parse_args(base)
    assert (args.threads, args.seed, args.samples) == (3, 5, 2000)
    args = parse_args(base + ["--threads", "2", "--seed", "6"])
    assert (args.threads, args.seed) == (2, 6)
    monkeypatch.setenv("THREADS", "4")
    assert parse_args(base + ["--threads", "2"]).threads == 4


def test_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("nonsense = 1\n")
    code, _, err = call(capsys, "rauzy", "class", "--pi", "2,1", "--config", str(cfg))
    assert code == 1 and "nonsense" in json.loads(err)["error"]


def test_output_file(tmp_path, capsys):
    path = tmp_path / "out.json"
    code, out, _ = call(capsys, "rauzy", "op", "--pi", "3,2,1", "--op", "a", "-o", str(path))
    assert code == 0 and out == ""
    assert json.loads(path.read_text())["result"] == [3, 1, 2]


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "rvzflow", "rauzy", "class", "--pi", "2,1"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and len(json.loads(res.stdout)["members"]) == 1
