"""Seeded numeric and simulation suites shared by the CLI and the tests."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .checks import (
    DEFAULT_GRID, bounds_points, check_bounds, limit_points, limit_value, omega0_points,
)
from .poly import MomentPoly
from .sim import (
    SimConfig, SimState, diffusion_matrix, generator_consistency, simulate,
)
from .sim.core import MASS_TOL
from .thoma import NumParams, a_chi_num, make_point, nat_limit_alpha1

REFERENCE_POINT = make_point([0.5, 0.3], [0.2])
REFERENCE_LIMIT = 3.5714286  # 2 - 1 - 1 + 2*(0.3/0.2 + 0.2/0.7)
SIM_PARAMS = NumParams(1.0, 2.0, 2.0)


def bounds_suite(seed: int = 0, count: int = 1000, thetas: Sequence[float] = (0.5, 1.0, 2.0),
                 grid: Sequence[float] = DEFAULT_GRID) -> dict:
    pts = bounds_points(seed, count)
    runs = [check_bounds(pts, grid, th) for th in thetas]
    return {"suite": "bounds", "seed": seed, "points": count, "runs": runs,
            "checks": sum(r["checks"] for r in runs),
            "violations": sum(len(r["violations"]) for r in runs),
            "status": "pass" if all(r["status"] == "pass" for r in runs) else "fail"}


def _limit_cases(p, params):
    yield "chi-pos", 1e4, {}, 1e-3
    yield "chi-neg", -1e4, {}, 1e-3
    yield "gammaCD-pos", 1e4, {}, 1e-2
    yield "gammaCD-neg", -1e4, {}, 1e-2
    for C in (1e4, -1e4):
        yield "gammaC-v", C, {"v": ("x", 1), "level": (1, 0)}, 1e-2
        yield "gammaC-v", C, {"v": ("x", -1), "level": (0, 1)}, 1e-2
        for k in (1, 2):
            yield "gammaC-v", C, {"v": ("q", k), "level": (0, 0)}, 1e-2


def limit_suite(seed: int = 0, count: int = 100, theta: float = 1.0) -> dict:
    params = NumParams(theta, 0.0, 1.0)
    cases, worst = [], 0.0
    for pid, p in enumerate(limit_points(seed, count)):
        for target, C, kw, tol in _limit_cases(p, params):
            val, claimed = limit_value(p, target, C, params, **kw)
            err = abs(val - claimed)
            worst = max(worst, err)
            case = {"point_id": pid, "target": target, "C": C, "value": val,
                    "claimed_limit": claimed, "abs_err": err, "tol": tol,
                    "status": "pass" if err <= tol else "fail"}
            if kw:
                case["v"] = "{}{}".format(*kw["v"])
                case["level"] = list(kw["level"])
            cases.append(case)
    failed = sum(c["status"] != "pass" for c in cases)
    return {"suite": "limits", "seed": seed, "points": count, "theta": theta, "cases": cases,
            "total": len(cases), "failed": failed, "worst_abs_err": worst,
            "status": "pass" if failed == 0 else "fail"}


def a_chi_suite(seed: int = 0, count: int = 20, C: float = 1e5, C_cauchy: float = 1e4,
                params: NumParams = SIM_PARAMS) -> dict:
    cases = []
    for pid, p in enumerate(omega0_points(seed, count)):
        lim = nat_limit_alpha1(p, params)
        a_big = a_chi_num(p, C, params)
        a1, a2 = a_chi_num(p, C_cauchy, params), a_chi_num(p, 2 * C_cauchy, params)
        ok_lim = abs(a_big - lim) <= 0.1
        ok_cauchy = abs(a2 - a1) <= 10 / C_cauchy
        cases.append({"point_id": pid, "point": p.to_json(), "limit": lim, "a_chi": a_big,
                      "abs_err": abs(a_big - lim), "cauchy_diff": abs(a2 - a1),
                      "status": "pass" if ok_lim and ok_cauchy else "fail"})
    ref_lim = nat_limit_alpha1(REFERENCE_POINT, params)
    ref_a = a_chi_num(REFERENCE_POINT, C, params)
    ref = {"limit": ref_lim, "a_chi": ref_a, "oracle": REFERENCE_LIMIT,
           "status": "pass" if abs(ref_lim - REFERENCE_LIMIT) <= 1e-3
           and abs(ref_a - REFERENCE_LIMIT) <= 0.1 else "fail"}
    failed = sum(c["status"] != "pass" for c in cases) + (ref["status"] != "pass")
    return {"suite": "a-chi", "seed": seed, "C": C, "C_cauchy": C_cauchy, "cases": cases,
            "reference": ref, "failed": failed, "status": "pass" if failed == 0 else "fail"}


def psd_check(seed: int = 0, count: int = 10_000, max_n: int = 5, max_m: int = 5,
              theta: float = 1.0) -> dict:
    """Smallest eigenvalue of the diffusion matrix at random simplex states."""
    rng = np.random.default_rng(seed)
    worst = math.inf
    for _ in range(count):
        n, m = int(rng.integers(0, max_n + 1)), int(rng.integers(0, max_m + 1))
        if n + m == 0:
            n = 1
        # Dirichlet masses with a random gamma share; corners and Omega_0 included
        parts = rng.dirichlet(np.ones(n + m + 1))
        x = parts[: n + m] if rng.random() < 0.7 else parts[: n + m] / parts[: n + m].sum()
        x = np.minimum(x, 1.0)
        if x.sum() > 1:
            x = x / x.sum() * (1 - 1e-16)
        s = SimState.from_natural(x, n, m, theta)
        worst = min(worst, float(np.linalg.eigvalsh(diffusion_matrix(s)).min()))
    return {"states": count, "theta": theta, "min_eigenvalue": worst,
            "status": "pass" if worst >= -1e-10 else "fail"}


def retention(traj: np.ndarray) -> dict:
    """x_i >= 0 and sum x <= 1 + 1e-9 at every recorded time."""
    mass = traj.sum(axis=-1)
    min_x, max_mass = float(traj.min()), float(mass.max())
    return {"min_x": min_x, "max_mass": max_mass,
            "status": "pass" if min_x >= 0 and max_mass <= 1 + MASS_TOL else "fail"}


def consistency_suite(seed: int = 0, reps: int = 10, paths: int = 100_000, dt: float = 1e-4,
                      n: int = 3, m: int = 2, params: NumParams = SIM_PARAMS,
                      allowed_failures: int = 2, workers: int = 1) -> dict:
    """One-step rates for q1, q2, q1^2 from the reference point, repeated."""
    q = MomentPoly.q
    fs = [q(1), q(2), q(1) ** 2]
    s0 = SimState.from_point(REFERENCE_POINT, n, m, params.theta)
    runs = []
    for r in range(reps):
        reps_seed = seed * 1000 + r
        runs.extend(generator_consistency(fs, s0, dt, paths, params, seed=reps_seed,
                                          workers=workers))
    failures = sum(x["status"] != "pass" for x in runs)
    return {"suite": "generator-consistency", "seed": seed, "reps": reps, "paths": paths,
            "dt": dt, "n": n, "m": m, "runs": runs, "failures": failures,
            "allowed_failures": allowed_failures,
            "status": "pass" if failures <= allowed_failures else "fail"}


def retention_suite(seed: int = 0, paths: int = 200, dt: float = 1e-3, t_end: float = 1.0,
                    n: int = 3, m: int = 2, params: NumParams = SIM_PARAMS,
                    workers: int = 1) -> dict:
    s0 = SimState.from_point(REFERENCE_POINT, n, m, params.theta)
    cfg = SimConfig(n, m, dt, t_end, paths, seed, params, record_every=1, workers=workers)
    res = simulate(cfg, s0)
    out = retention(res.traj)
    out.update({"paths": paths, "dt": dt, "t_end": t_end, "aborted": res.aborted})
    return out


__all__ = [
    "REFERENCE_POINT", "REFERENCE_LIMIT", "SIM_PARAMS", "a_chi_suite", "bounds_suite",
    "consistency_suite", "limit_suite", "psd_check", "retention", "retention_suite",
]
