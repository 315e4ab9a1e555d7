import json
import subprocess
import sys

import pytest

from thomalab.cli import EXIT_ABORT, EXIT_FAIL, EXIT_INPUT, EXIT_OK, SCHEMA, atomic_write, main
from thomalab.operators import apply_A
from thomalab.parser import parse_poly
from thomalab.poly import MomentPoly

SPEC_Q2 = "3*(2*(1-theta)+s1)*q1 - 3*(2+s2/theta)*q2 + 3*theta"


@pytest.fixture
def point(tmp_path):
    p = tmp_path / "point.json"
    p.write_text(json.dumps({"alpha": [0.5, 0.3], "beta": [0.2]}))
    return str(p)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_apply_example(capsys):
    code, out, _ = run(capsys, "apply", "--op", "A", "--expr", "q2", "--theta", "sym")
    assert code == EXIT_OK
    assert parse_poly(out.strip()) == parse_poly(SPEC_Q2) == apply_A(MomentPoly.q(2))
    code, out, _ = run(capsys, "apply", "--expr", "q2", "--format", "grouped")
    assert parse_poly(out.strip()) == parse_poly(SPEC_Q2)


def test_apply_bound_theta(capsys):
    code, out, _ = run(capsys, "apply", "--expr", "q1", "--theta", "1", "--s1", "2", "--s2", "2")
    assert code == EXIT_OK and parse_poly(out.strip()) == parse_poly("4 - 6*q1")


def test_apply_variants(capsys):
    assert run(capsys, "apply", "--op", "A-petrov", "--expr", "q1")[0] == EXIT_OK
    assert run(capsys, "apply", "--op", "petrov-limit", "--expr", "q2")[0] == EXIT_OK
    code, out, _ = run(capsys, "apply", "--op", "A-nat", "--expr", "q1", "--n", "1", "--m", "1")
    assert code == EXIT_OK and "a1" in out
    assert run(capsys, "apply", "--op", "A-nat", "--expr", "q1")[0] == EXIT_INPUT
    assert run(capsys, "apply", "--op", "petrov-limit", "--expr", "q1/theta")[0] == EXIT_ABORT


def test_gamma_command(capsys):
    code, out, _ = run(capsys, "gamma", "--u", "q1", "--v", "q1")
    assert code == EXIT_OK and parse_poly(out.strip()) == parse_poly("4*(q2 - q1^2)")
    code, out, _ = run(capsys, "gamma", "--u", "a1", "--v", "b1")
    assert code == EXIT_OK and parse_poly(out.strip(), "nat", (1, 1)) == parse_poly("-a1*b1", "nat", (1, 1))
    code, out, _ = run(capsys, "gamma", "--u", "qs1@1,0", "--v", "a1")
    assert code == EXIT_OK and parse_poly(out.strip()) == parse_poly("-2*a1*qs1@1,0")


def test_parse_errors_exit_2(capsys):
    code, _, err = run(capsys, "apply", "--expr", "q1 +")
    assert code == EXIT_INPUT and "offset 4" in err
    assert run(capsys, "apply", "--expr", "q1", "--theta", "abc")[0] == EXIT_INPUT
    assert run(capsys, "apply", "--expr", "q1", "--theta", "-1")[0] == EXIT_INPUT
    assert run(capsys, "num", "--quantity", "chi", "--alpha", "0.3,0.5", "--C", "2")[0] == EXIT_INPUT
    assert run(capsys, "num", "--quantity", "chi", "--alpha", "0.5")[0] == EXIT_INPUT
    assert run(capsys, "num", "--quantity", "q", "--alpha", "0.5", "--k", "1",
               "--theta", "sym")[0] == EXIT_INPUT
    assert run(capsys, "bogus")[0] == EXIT_INPUT


def test_verify_report(capsys, tmp_path):
    out = tmp_path / "v.json"
    code, _, _ = run(capsys, "verify", "--identity", "product-rule", "--max-k", "3",
                     "--max-grading", "5", "--out", str(out))
    rep = json.loads(out.read_text())
    assert code == EXIT_OK and rep["status"] == "pass"
    assert rep["schema"] == SCHEMA
    assert rep["header"]["tool"] == "thomalab" and "version" in rep["header"]
    assert rep["header"]["config"]["ranges"]["max_k"] == 3
    assert rep["result"]["failed"] == 0 and rep["result"]["total"] > 0
    assert run(capsys, "verify", "--identity", "bracket-double", "--max-k", "-1")[0] == EXIT_INPUT


def test_num_quantities(capsys, point):
    def value(*extra):
        code, out, _ = run(capsys, "num", "--point", point, *extra)
        assert code == EXIT_OK
        return json.loads(out)["result"]["value"]

    assert value("--quantity", "q", "--k", "1") == pytest.approx(0.30)
    assert value("--quantity", "chi", "--C", "1") == pytest.approx(0.87258, abs=1e-5)
    assert value("--quantity", "gamma-cd", "--C", "1e4") == pytest.approx(0.25, abs=1e-2)
    assert value("--quantity", "gamma-c", "--C", "1e4", "--v", "q1") == pytest.approx(0.2, abs=1e-2)
    prm = ("--theta", "1", "--s1", "2", "--s2", "2")
    assert value("--quantity", "nat-limit", *prm) == pytest.approx(3.5714286, abs=1e-6)
    assert value("--quantity", "a-chi", "--C", "1e5", *prm) == pytest.approx(3.5714286, abs=1e-1)


def test_sweep_limit_csv_and_summary(capsys, tmp_path, point):
    csv = tmp_path / "sweep.csv"
    code, out, _ = run(capsys, "sweep", "--limit", "chi-pos", "--point", point, "--grid",
                       "default", "--csv", str(csv))
    assert code == EXIT_OK
    rep = json.loads(out)
    assert rep["status"] == "pass" and rep["result"]["target"] == "chi-pos"
    lines = csv.read_text().splitlines()
    assert lines[0] == "C,value,claimed_limit,abs_err,within_tol"
    assert len(lines) == 7


def test_sweep_failure_exit_1(capsys, point):
    # a tolerance constant of 0 cannot be met at finite C
    code, out, _ = run(capsys, "sweep", "--limit", "chi-pos", "--point", point, "--tol-const", "0")
    assert code == EXIT_FAIL and json.loads(out)["status"] == "fail"


def test_sweep_suite(capsys):
    code, out, _ = run(capsys, "sweep", "--suite", "a-chi", "--count", "2", "--seed", "4",
                       "--theta", "1", "--s1", "2", "--s2", "2")
    rep = json.loads(out)
    assert code == EXIT_OK and rep["header"]["seed"] == 4 and rep["status"] == "pass"


def test_config_file_and_seed_precedence(capsys, tmp_path, monkeypatch):
    cfg = tmp_path / "c.toml"
    cfg.write_text('[params]\ntheta = 1\ns1 = 2\ns2 = 2\n[sim]\nseed = 5\npaths = 4\n'
                   't_end = 0.01\ndt = 0.001\n')
    base = ["--config", str(cfg), "simulate"]
    seed_of = lambda: json.loads(capsys.readouterr()[0])["header"]["seed"]
    monkeypatch.delenv("THOMA_SEED", raising=False)
    main(base)
    assert seed_of() == 5
    monkeypatch.setenv("THOMA_SEED", "9")
    main(base)
    assert seed_of() == 9
    main(base + ["--seed", "3"])
    assert seed_of() == 3
    monkeypatch.setenv("THOMA_SEED", "x")
    assert main(base) == EXIT_INPUT


def test_bad_config(capsys, tmp_path):
    bad = tmp_path / "bad.toml"
    bad.write_text("[nope]\n")
    assert run(capsys, "--config", str(bad), "apply", "--expr", "q1")[0] == EXIT_INPUT
    bad.write_text("[params\n")
    assert run(capsys, "--config", str(bad), "apply", "--expr", "q1")[0] == EXIT_INPUT
    assert run(capsys, "--config", str(tmp_path / "missing.toml"), "apply", "--expr", "q1")[0] == EXIT_INPUT


def test_simulate_reports_byte_identical(capsys, tmp_path, monkeypatch):
    monkeypatch.delenv("THOMA_SEED", raising=False)
    args = ["simulate", "--paths", "8", "--t-end", "0.05", "--theta", "1", "--s1", "2",
            "--s2", "2", "--seed", "21"]
    outs = []
    for k, w in enumerate(("1", "3")):
        r, t = tmp_path / f"r{k}.json", tmp_path / f"t{k}.csv"
        assert main(args + ["--workers", w, "--out", str(r), "--traj", str(t)]) == EXIT_OK
        outs.append((r.read_bytes(), t.read_bytes()))
    assert outs[0] == outs[1]
    rep = json.loads(outs[0][0])
    assert rep["result"]["retention"]["status"] == "pass"
    assert "timestamp" not in json.dumps(rep)


def test_simulate_binary_and_modes(capsys, tmp_path):
    from thomalab.sim.core import read_binary
    b = tmp_path / "t.bin"
    assert main(["simulate", "--paths", "3", "--t-end", "0.01", "--traj", str(b), "--format",
                 "binary", "--out", str(tmp_path / "r.json")]) == EXIT_OK
    assert read_binary(b.read_bytes())["data"].shape == (3, 11, 5)
    code, out, _ = run(capsys, "simulate", "--mode", "consistency", "--paths", "2000", "--dt",
                       "1e-4", "--theta", "1", "--s1", "2", "--s2", "2", "--f", "q1;1")
    assert code in (EXIT_OK, EXIT_FAIL)
    assert len(json.loads(out)["result"]["runs"]) == 2
    code, out, _ = run(capsys, "simulate", "--mode", "omega0", "--paths", "5", "--t-end", "0.02",
                       "--alpha", "0.3", "--beta", "0.2")
    assert code == EXIT_OK and json.loads(out)["status"] == "observational"
    assert run(capsys, "simulate", "--dt", "0.003", "--t-end", "0.01")[0] == EXIT_INPUT


def test_atomic_write_leaves_no_temp(tmp_path):
    target = tmp_path / "a.txt"
    atomic_write(target, b"one")
    atomic_write(target, b"two")
    assert target.read_bytes() == b"two"
    assert [p.name for p in tmp_path.iterdir()] == ["a.txt"]


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "thomalab", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and "thomalab" in r.stdout
