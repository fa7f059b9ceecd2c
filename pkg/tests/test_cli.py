import json
import subprocess
import sys

import pytest

from mmwsched.cli import main
from mmwsched.instance import load_instance
from mmwsched.exhaustive import exhaustive_select


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def instance_file(tmp_path, capsys):
    path = tmp_path / "inst.json"
    assert run(capsys, "make-instance", str(path), "--n-aps", "2", "--n-ues", "3", "--n-beams", "2",
               "--seed", "4")[0] == 0
    return path


def test_solve_exhaustive(capsys, instance_file):
    code, out, _ = run(capsys, "solve", str(instance_file), "-a", "exhaustive")
    assert code == 0
    doc = json.loads(out)
    _, r_star = exhaustive_select(load_instance(instance_file))
    assert doc["weighted_sum_rate"] == pytest.approx(r_star)
    assert len(doc["selection"]) == 2


@pytest.mark.parametrize("algo, extra", [("mcmc", ["-o", "max_iters=100"]), ("ngub1", []), ("ngub2", []),
                                         ("lig", ["-o", "max_iters=50", "--s-t", "0", "--i-th", "0"])])
def test_solve_each_algorithm(capsys, instance_file, algo, extra):
    first = run(capsys, "solve", str(instance_file), "-a", algo, "--seed", "2", *extra)
    second = run(capsys, "solve", str(instance_file), "-a", algo, "--seed", "2", *extra)
    assert first[0] == 0 and first[1] == second[1]
    doc = json.loads(first[1])
    inst = load_instance(instance_file)
    assert 0 <= doc["weighted_sum_rate"] <= exhaustive_select(inst)[1] + 1e-9


def test_simulate(capsys, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 0, "n_aps": 4, "n_ues": 10, "slots": 3, "runs": 2}))
    code, out, err = run(capsys, "simulate", str(cfg), "--seed", "9", "--out", str(tmp_path / "o"))
    assert code == 0 and "wall-clock" in err
    doc = json.loads(out)
    assert doc["runs"] == 2 and 0 <= doc["jfi"] <= 1
    assert (tmp_path / "o" / "per_ue.csv").exists()


def test_verify_reduction(capsys, tmp_path):
    edges = tmp_path / "c4.txt"
    edges.write_text("0 1\n1 2\n2 3\n3 0\n")
    code, out, _ = run(capsys, "verify-reduction", str(edges))
    doc = json.loads(out)
    assert code == 0 and doc["all_verified"]
    assert doc["results"][0]["mis_sets"] == [[0, 2], [1, 3]]
    code, out, _ = run(capsys, "verify-reduction", str(edges), "--n", "1", "--eps", "0.5")
    assert code == 1 and not json.loads(out)["all_verified"]


def test_bench(capsys):
    code, out, _ = run(capsys, "bench", "--instances", "2", "--algorithms", "exhaustive,ngub1", "--no-timing")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "algorithm\tmean_rate" and len(lines) == 3


def test_error_exit_codes(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{}")
    code, _, err = run(capsys, "solve", str(bad))
    assert code == 2 and "error" in err
    code, out, _ = run(capsys, "--json", "solve", str(bad))
    doc = json.loads(out)
    assert code == 2 and doc["exit_code"] == 2 and doc["error"] == "InstanceFormatError"
    code, _, _ = run(capsys, "solve", str(tmp_path / "missing.json"))
    assert code == 1
    code, _, _ = run(capsys, "bench", "--algorithms", "magic")
    assert code == 2
    code, _, _ = run(capsys, "verify-reduction")
    assert code == 2


def test_bad_option(capsys, instance_file):
    code, out, _ = run(capsys, "--json", "solve", str(instance_file), "-a", "mcmc", "-o", "depth=3")
    assert code == 2 and "depth" in json.loads(out)["message"]
    code, _, _ = run(capsys, "solve", str(instance_file), "-o", "novalue")
    assert code == 2


def test_capacity_error_exit_code(capsys, tmp_path):
    path = tmp_path / "big.json"
    run(capsys, "make-instance", str(path), "--n-aps", "4", "--n-ues", "4", "--n-beams", "4")
    code, out, _ = run(capsys, "--json", "solve", str(path), "-a", "exhaustive", "-o", "cap=10")
    assert code == 1 and json.loads(out)["error"] == "CapacityError"


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "mmwsched", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "verify-reduction" in res.stdout
    res = subprocess.run([sys.executable, "-m", "mmwsched", "frobnicate"], capture_output=True, text=True)
    assert res.returncode == 2
