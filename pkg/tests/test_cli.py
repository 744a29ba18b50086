import json
import subprocess
import sys
from pathlib import Path

import pytest

from fraclab.cli import SUBCOMMANDS, main

SMALL = """
seed = 3

[kernel]
n = 1
s = 0.4
p = {p}

[grid]
L = 3.0
cells = 99

[grid.omega]
shape = "interval"
center = [0.0]
size = [1.0]

[data]
profile = "{profile}"
{data}

[solver]
{solver}

[verify.caccioppoli]
draws = 5

[verify.log]
R = 0.9
r = 0.45

[verify.sup]
r = 0.9

[verify.degiorgi]
r = 0.9
delta = 0.1

[verify.holder]
r = 0.4

[verify.lemma32]
samples = 20000
"""


def write(tmp_path, name="run.toml", p=2.0, profile="bump", data='center = [2.0]\nwidth = 0.75', solver="", extra=""):
    path = tmp_path / name
    path.write_text(SMALL.format(p=p, profile=profile, data=data, solver=solver) + extra)
    return path


def run(args, capsys):
    code = main(args)
    out, err = capsys.readouterr()
    return code, out.strip(), err


def snapshot(d: Path) -> dict:
    return {f.name: f.read_bytes() for f in sorted(d.iterdir())}


def test_zero_data_solves(tmp_path, capsys):
    cfg = write(tmp_path, profile="zero", data="")
    code, out, _ = run(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")], capsys)
    assert code == 0
    run_dir = Path(out)
    rows = (run_dir / "solution.csv").read_text().splitlines()
    assert rows[0] == "x,value"
    assert all(float(r.split(",")[1]) == 0.0 for r in rows[1:])
    conv = json.loads((run_dir / "convergence.json").read_text())
    assert conv["converged"] and conv["euler_lagrange"]["passed"]
    summary = json.loads((run_dir / "summary.json").read_text())
    assert summary["exit_status"] == 0


def test_unknown_key_named(tmp_path, capsys):
    cfg = write(tmp_path)
    bad = tmp_path / "bad.toml"
    bad.write_text(cfg.read_text().replace("p = 2.0", "p = 2.0\nfoo = 1"))
    code, _, err = run(["solve", "--config", str(bad), "--out", str(tmp_path / "o")], capsys)
    assert code == 2
    assert "foo" in err


def test_invalid_value_rejected(tmp_path, capsys):
    cfg = write(tmp_path, p=0.5)
    code, _, err = run(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")], capsys)
    assert code == 2 and "configuration error" in err


def test_nonconvergence_exit(tmp_path, capsys):
    cfg = write(tmp_path, p=2.2, solver="max_iters = 1\ninit = \"zero\"")
    code, out, _ = run(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")], capsys)
    assert code == 3
    run_dir = Path(out)
    assert (run_dir / "diagnostics.json").exists() and (run_dir / "last_iterate.csv").exists()


def test_lemma_check_is_hard(tmp_path, capsys):
    cfg = write(tmp_path)
    code, out, _ = run(["check-lemma32", "--config", str(cfg), "--out", str(tmp_path / "o")], capsys)
    assert code == 1
    rep = json.loads((Path(out) / "report_lemma32.json").read_text())
    assert rep["lhs"] > 0 and rep["rhs_components"]["c_2"] == 1.0


def test_tail_flags(tmp_path, capsys):
    cfg = write(tmp_path)
    code, out, _ = run(["tail", "--config", str(cfg), "--out", str(tmp_path / "o"),
                        "--x0", "0.1", "--R", "0.6", "--k", "0.01", "--sign", "plus"], capsys)
    assert code == 0
    rep = json.loads((Path(out) / "report_tail.json").read_text())
    assert rep["parameters"]["R"] == 0.6 and rep["parameters"]["k"] == 0.01
    assert rep["parameters"]["x0"] == [0.1]
    assert rep["lhs"] > 0


def test_json_config(tmp_path, capsys):
    raw = {"kernel": {"n": 1, "s": 0.3, "p": 2.0},
           "grid": {"L": 3.0, "cells": 99, "omega": {"shape": "interval", "center": [0.0], "size": [1.0]}},
           "data": {"profile": "constant", "value": 2.0}}
    path = tmp_path / "run.json"
    path.write_text(json.dumps(raw))
    code, out, _ = run(["solve", "--config", str(path), "--out", str(tmp_path / "o")], capsys)
    assert code == 0


def test_seed_override_changes_hash(tmp_path, capsys):
    cfg = write(tmp_path)
    _, a, _ = run(["solve", "--config", str(cfg), "--out", str(tmp_path / "o")], capsys)
    _, b, _ = run(["solve", "--config", str(cfg), "--out", str(tmp_path / "o"), "--seed", "99"], capsys)
    assert a != b


def test_all_reports_written(tmp_path, capsys):
    cfg = write(tmp_path)
    code, out, _ = run(["all", "--config", str(cfg), "--out", str(tmp_path / "o")], capsys)
    names = set(p.name for p in Path(out).iterdir())
    for v in SUBCOMMANDS["all"]:
        assert f"report_{v}.json" in names and f"report_{v}.csv" in names
    summary = json.loads((Path(out) / "summary.json").read_text())
    hard_failed = [c["name"] for c in summary["checks"] if c["hard"] and not c["passed"]]
    assert hard_failed == ["lemma32"] and code == 1


def test_determinism_and_threads(tmp_path, capsys):
    cfg = write(tmp_path)
    snaps = []
    for i, threads in enumerate(("1", "1", "8")):
        _, out, _ = run(["all", "--config", str(cfg), "--out", str(tmp_path / f"o{i}"), "--threads", threads], capsys)
        snaps.append(snapshot(Path(out)))
    assert snaps[0] == snaps[1] == snaps[2]


def test_console_entry(tmp_path):
    cfg = write(tmp_path, profile="zero", data="")
    res = subprocess.run([sys.executable, "-m", "fraclab.cli", "solve", "--config", str(cfg),
                          "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert res.returncode == 0
    assert Path(res.stdout.strip()).is_dir()


@pytest.mark.parametrize("sub", sorted(SUBCOMMANDS))
def test_help_lists_subcommand(sub, capsys):
    with pytest.raises(SystemExit) as info:
        main([sub, "--help"])
    assert info.value.code == 0
