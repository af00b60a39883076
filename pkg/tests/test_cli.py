import csv
import io
import json
import subprocess
import sys
from fractions import Fraction

import pytest

from mms_copies.cli import main
from mms_copies.core import CopyAllocation, load_instance, save_instance, verify_guarantee
from mms_copies.instances import fixture_appendix_e
from mms_copies.mms import mms_values


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def additive_file(tmp_path, capsys):
    path = tmp_path / "inst.json"
    code, _, _ = run(capsys, "gen", "random-additive", "--n", 3, "--m", 8, "--seed", 4, "--out", path)
    assert code == 0
    return path


def test_gen_writes_instance(additive_file):
    inst = load_instance(additive_file)
    assert (inst.n, inst.m) == (3, 8)


def test_gen_to_stdout(capsys):
    code, out, _ = run(capsys, "gen", "cube", "--n", 2)
    assert code == 0
    assert json.loads(out)["kind"] == "monotone-cube"


def test_mms_command(capsys, additive_file):
    code, out, _ = run(capsys, "mms", additive_file, "--agent", 1)
    assert code == 0
    data = json.loads(out)["mms"]
    inst = load_instance(additive_file)
    assert Fraction(data[0]["value"]) == mms_values(inst)[1]


@pytest.mark.parametrize("algorithm", ["match-n-fill", "rr67", "bagfill"])
def test_round_trip_agrees_with_library(capsys, tmp_path, additive_file, algorithm):
    alloc_path = tmp_path / "alloc.json"
    code, out, _ = run(capsys, "solve", additive_file, "--algorithm", algorithm, "--out", alloc_path)
    report = json.loads(out)["report"]
    inst = load_instance(additive_file)
    alloc = CopyAllocation.from_json(json.loads(alloc_path.read_text()), inst.m)
    alpha = Fraction(6, 7) if algorithm == "rr67" else Fraction(1)
    lib = verify_guarantee(inst, alloc, [alpha * mu for mu in mms_values(inst)])
    assert report["all_pass"] == lib.all_pass
    assert report["covered"] == lib.covered
    assert code == (0 if report["all_pass"] else 1)
    code2, out2, _ = run(capsys, "verify", additive_file, alloc_path, "--alpha", str(alpha))
    assert json.loads(out2)["all_pass"] == report["all_pass"]
    assert code2 == code


def test_solve_is_deterministic(capsys, tmp_path, additive_file):
    outs = []
    for name in ("a.json", "b.json"):
        path = tmp_path / name
        run(capsys, "solve", additive_file, "--algorithm", "bagfill", "--order", "shuffle:3",
            "--out", path)
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]


def test_worked_example_logs_three_duplications(capsys, tmp_path):
    path = tmp_path / "e.json"
    save_instance(fixture_appendix_e(), path)
    order = "3,6,8,0,1,9,11,6,4,2,7"
    code, out, _ = run(capsys, "solve", path, "--algorithm", "bagfill", "--order", order)
    report = json.loads(out)["report"]
    assert len(report["duplications"]) == 3
    assert code == 0


def test_verify_violation_exit_code(capsys, tmp_path):
    inst_path = tmp_path / "i.json"
    inst_path.write_text(json.dumps({"kind": "additive", "n": 2, "m": 2,
                                     "values": [["1", "1"], ["1", "1"]]}))
    alloc_path = tmp_path / "a.json"
    alloc_path.write_text(json.dumps({"bundles": [[0, 1], []]}))
    code, out, _ = run(capsys, "verify", inst_path, alloc_path)
    assert code == 1 and json.loads(out)["all_pass"] is False
    alloc_path.write_text(json.dumps({"bundles": [[0], [1]]}))
    code, _, _ = run(capsys, "verify", inst_path, alloc_path, "--alpha", "1")
    assert code == 0


def test_alpha_above_cap_refused(capsys, additive_file):
    code, _, err = run(capsys, "solve", additive_file, "--algorithm", "rr67", "--alpha", "9/10")
    assert code == 2
    assert "6/7" in err


def test_usage_errors(capsys, tmp_path, additive_file):
    assert run(capsys, "solve", additive_file, "--algorithm", "nope")[0] == 2
    assert run(capsys, "solve", tmp_path / "missing.json", "--algorithm", "bagfill")[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(capsys, "verify", bad, bad)[0] == 2
    assert run(capsys, "solve", additive_file, "--algorithm", "bagfill", "--order", "0,99")[0] == 2


def test_rr45_rejects_small_instances(capsys, additive_file):
    code, _, err = run(capsys, "solve", additive_file, "--algorithm", "rr45")
    assert code == 2 and "unsupported size" in err


def test_bench_rows(capsys, tmp_path):
    path = tmp_path / "bench.csv"
    code, _, _ = run(capsys, "bench", "random-additive", "--n", 4, "--m", 10, "--trials", 12,
                     "--algorithm", "rr67", "--out", path)
    rows = list(csv.DictReader(io.StringIO(path.read_text())))
    assert code == 0
    assert len(rows) == 12
    assert list(rows[0]) == ["family", "n", "m", "seed", "algorithm", "alpha", "min_ratio",
                             "copies_t", "max_k", "ms"]
    assert all(int(r["copies_t"]) <= 2 for r in rows)
    assert [int(r["seed"]) for r in rows] == sorted(int(r["seed"]) for r in rows)


def test_bench_parallel_matches_serial(capsys, tmp_path):
    outs = []
    for workers in (1, 2):
        path = tmp_path / f"b{workers}.csv"
        run(capsys, "bench", "random-chores", "--n", 3, "--m", 7, "--trials", 4,
            "--algorithm", "chores", "--workers", workers, "--out", path)
        rows = list(csv.DictReader(io.StringIO(path.read_text())))
        outs.append([{k: v for k, v in r.items() if k != "ms"} for r in rows])
    assert outs[0] == outs[1]


def test_randomized_cube(capsys, tmp_path):
    path = tmp_path / "cube.json"
    run(capsys, "gen", "cube", "--n", 2, "--out", path)
    code, out, _ = run(capsys, "solve", path, "--algorithm", "randomized-monotone", "--seed", 1)
    assert code == 0
    assert json.loads(out)["report"]["copies_t"] == 1


def test_module_entry_point(additive_file):
    res = subprocess.run([sys.executable, "-m", "mms_copies", "mms", str(additive_file)],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert len(json.loads(res.stdout)["mms"]) == 3
