"""Acceptance criteria 1-11, one test each.

Every test records a PASS/FAIL line; the lines are printed together at the end
of the pytest run (see conftest.py) or directly when this file is run as a
script: ``python3 tests/test_acceptance.py``.
"""

import json
import random
import time
from fractions import Fraction

import pytest

from thomalab.cli import main
from thomalab.identities import verify_identity
from thomalab.parser import parse_poly
from thomalab.poly import ExtPoly, MomentPoly, NatPoly, pa, ptau, s1, s2, theta
from thomalab.printing import to_text
from thomalab import suites

RESULTS: dict[int, str] = {}


def record(n, ok, detail, elapsed, budget=None):
    timing = f"{elapsed:.2f}s" + (f" (target < {budget:g}s)" if budget else "")
    RESULTS[n] = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}  [{timing}]"
    print(RESULTS[n])


def identity(n, name, ranges, budget=None, shape=lambda rep: True):
    """Run one identity sweep; ``shape`` checks the case coverage."""
    t0 = time.perf_counter()
    rep = verify_identity(name, ranges)
    dt = time.perf_counter() - t0
    covered = shape(rep)
    ok = rep["failed"] == 0 and rep["total"] > 0 and covered and (budget is None or dt < budget)
    record(n, ok, f"{name}: {rep['total']} cases, {rep['failed']} failed", dt, budget)
    assert rep["total"] > 0 and covered
    assert rep["failed"] == 0, [c["case"] for c in rep["cases"] if c["status"] != "pass"][:5]
    if budget:
        assert dt < budget


def test_criterion_01_product_rule():
    from thomalab.identities import moment_monomials
    k = len(moment_monomials(6, 10))
    # every unordered pair of monomials in q1..q6 with grading <= 10
    identity(1, "product-rule", {"max_k": 6, "max_grading": 10}, budget=10,
             shape=lambda rep: rep["total"] == k * (k + 1) // 2)


def test_criterion_02_petrov():
    identity(2, "petrov-degeneration", {"max_petrov_k": 8}, budget=1,
             shape=lambda rep: rep["total"] == 8)


def test_criterion_03_shift_consistency():
    def shape(rep):
        dirs = {c["case"].rsplit(", (", 1)[0] for c in rep["cases"]}
        want = {f"({a}, {b})->{to}" for a in range(4) for b in range(4)
                for to in (f"({a + 1}, {b})", f"({a}, {b + 1})")}
        return dirs == want
    identity(3, "consistent-shift", {"max_level": 3, "max_k": 6}, shape=shape)


def test_criterion_04_natural_gamma():
    # 48 truncations (n, m <= 6, not both 0) x 15 pairs k <= l <= 5
    identity(4, "gamma-nat-vs-moment", {"max_k": 5, "max_trunc": 6},
             shape=lambda rep: rep["total"] == 48 * 15)


def test_criterion_05_A_nat():
    # 8 inputs x 35 truncations
    identity(5, "a-nat-vs-a", {"max_trunc": 5}, shape=lambda rep: rep["total"] == 8 * 35)


def test_criterion_06_bracket_identities():
    t0 = time.perf_counter()
    r = {"max_phi": 5, "max_k": 5, "max_level": 2}
    reps = [verify_identity(name, r) for name in ("bracket-double", "bracket-single")]
    dt = time.perf_counter() - t0
    total, failed = sum(x["total"] for x in reps), sum(x["failed"] for x in reps)
    record(6, failed == 0, f"bracket-double + bracket-single: {total} cases, {failed} failed", dt)
    assert failed == 0 and total > 0


@pytest.mark.slow
def test_criterion_07_bounds():
    t0 = time.perf_counter()
    rep = suites.bounds_suite(seed=0, count=1000, thetas=(0.5, 1.0, 2.0))
    dt = time.perf_counter() - t0
    grids = {tuple(sorted(r["grid"])) for r in rep["runs"]}
    full = {tuple(sorted(s * 10.0 ** e for s in (1, -1) for e in range(6)))}
    ok = rep["status"] == "pass" and grids == full and rep["points"] == 1000
    record(7, ok,
           f"{rep['points']} points x 12 C x 3 theta: {rep['checks']} checks, "
           f"{rep['violations']} violations", dt)
    assert grids == full
    assert rep["points"] == 1000 and rep["violations"] == 0


def test_criterion_08_limits():
    t0 = time.perf_counter()
    rep = suites.limit_suite(seed=0, count=100)
    dt = time.perf_counter() - t0
    targets = {c["target"] for c in rep["cases"]}
    tols = all(c["tol"] == (1e-3 if c["target"].startswith("chi") else 1e-2) for c in rep["cases"])
    want = {"chi-pos", "chi-neg", "gammaCD-pos", "gammaCD-neg", "gammaC-v"}
    ok = rep["status"] == "pass" and targets == want and tols
    record(8, ok, f"{rep['total']} limit cases on 100 points, {rep['failed']} failed, "
           f"worst error {rep['worst_abs_err']:.2e}", dt)
    assert targets == want and tols
    assert rep["failed"] == 0


def test_criterion_09_a_chi():
    t0 = time.perf_counter()
    rep = suites.a_chi_suite(seed=0, count=20)
    dt = time.perf_counter() - t0
    ref = rep["reference"]
    ok = rep["status"] == "pass" and dt < 30
    record(9, ok, f"20 points, {rep['failed']} failed; reference limit {ref['limit']:.7f}, "
           f"a_chi(1e5) {ref['a_chi']:.5f}", dt, 30)
    assert len(rep["cases"]) == 20
    assert abs(ref["limit"] - 3.5714286) <= 1e-3
    assert rep["status"] == "pass"
    assert dt < 30


@pytest.mark.slow
def test_criterion_10_simulator():
    t0 = time.perf_counter()
    psd = [suites.psd_check(seed=0, count=10_000, theta=th) for th in (0.5, 1.0, 2.0)]
    ret = suites.retention_suite(seed=0)
    cons = suites.consistency_suite(seed=0, reps=10, paths=100_000, dt=1e-4)
    dt = time.perf_counter() - t0
    min_eig = min(p["min_eigenvalue"] for p in psd)
    zmax = max(abs(r["z"]) for r in cons["runs"])
    ok = (all(p["status"] == "pass" for p in psd) and ret["status"] == "pass"
          and cons["status"] == "pass" and dt < 300)
    record(10, ok, f"min eigenvalue {min_eig:.1e}; retention {ret['status']} "
           f"(max mass {ret['max_mass']:.12f}); consistency {cons['failures']}/30 "
           f"|z| > 3 (max |z| {zmax:.2f})", dt, 300)
    assert all(p["status"] == "pass" for p in psd)
    assert ret["status"] == "pass"
    assert cons["failures"] <= 2
    assert dt < 300


def _random_poly(rng: random.Random):
    family = rng.choice(["moment", "ext", "nat"])
    if family == "moment":
        one, gens = MomentPoly.const(1), [MomentPoly.q(k) for k in range(1, 6)]
    else:
        lvl = (rng.randint(0, 3), rng.randint(0, 3))
        if family == "nat" and lvl == (0, 0):
            lvl = (1, 0)
        cls = ExtPoly if family == "ext" else NatPoly
        one = cls.const(1, lvl)
        gens = [cls.x(i, lvl) for i in range(-lvl[1], lvl[0] + 1) if i]
        if family == "ext":
            gens += [ExtPoly.qs(k, lvl) for k in range(1, 5)]
    params = [theta(), theta(-1), s1(), s2(), pa(), ptau()]
    p = one * 0
    for _ in range(rng.randint(0, 5)):
        term = one * Fraction(rng.randint(-9, 9), rng.randint(1, 7))
        for _ in range(rng.randint(0, 3)):
            term = term * rng.choice(gens)
        for _ in range(rng.randint(0, 2)):
            term = term * rng.choice(params)
        p = p + term
    return p


def test_criterion_11_cli_roundtrip(tmp_path, monkeypatch):
    monkeypatch.delenv("THOMA_SEED", raising=False)
    t0 = time.perf_counter()
    rng = random.Random(20261016)
    bad = 0
    for _ in range(1000):
        p = _random_poly(rng)
        if parse_poly(to_text(p), p.family, p.level) != p:
            bad += 1
    runs = [
        ["sweep", "--suite", "a-chi", "--count", "3", "--seed", "7", "--theta", "1",
         "--s1", "2", "--s2", "2"],
        ["simulate", "--paths", "20", "--t-end", "0.05", "--seed", "7", "--theta", "1",
         "--s1", "2", "--s2", "2"],
        ["verify", "--identity", "petrov-degeneration"],
    ]
    identical = 0
    for k, argv in enumerate(runs):
        blobs = []
        for rep in range(2):
            out = tmp_path / f"r{k}_{rep}.json"
            assert main(argv + ["--out", str(out)]) == 0
            blobs.append(out.read_bytes())
        identical += blobs[0] == blobs[1]
        head = json.loads(blobs[0])["header"]
        assert {"tool", "version", "seed", "config", "command"} <= set(head)
    dt = time.perf_counter() - t0
    ok = bad == 0 and identical == len(runs)
    record(11, ok, f"round-trip 1000 polynomials, {bad} mismatches; "
           f"{identical}/{len(runs)} reports byte-identical", dt)
    assert bad == 0
    assert identical == len(runs)


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
