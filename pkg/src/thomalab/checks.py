"""Bound and limit sweeps over seeded random points."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .signedlog import SignedLog
from .thoma import (
    MULTIPLICITY_TOL, ExpPoly, NumParams, ThomaPoint, a_chi_num, chi, eval_Q,
    gamma_C_limit, gamma_C_num, gamma_CD_limit, gamma_CD_num, make_point,
    nat_limit_alpha1, thoma_measure,
)

DEFAULT_GRID = tuple(s * 10.0 ** e for s in (1, -1) for e in range(6))
LIMITS = ("top-atom-pos", "top-atom-neg", "chi-pos", "chi-neg", "gammaCD-pos",
          "gammaCD-neg", "gammaC-v", "a-chi")
TOL_CONST = 20.0
LOG_SLACK = 1e-12
MAX_K = 6


class UnknownLimit(ValueError):
    pass


def default_grid() -> list[float]:
    return sorted(DEFAULT_GRID)


# -- random points ---------------------------------------------------------------

def random_point(rng: np.random.Generator, max_n: int = 5, max_m: int = 5,
                 omega0: bool = False) -> ThomaPoint:
    """Truncated point: random sizes, Dirichlet masses, optional gamma mass."""
    n = int(rng.integers(0, max_n + 1))
    m = int(rng.integers(0, max_m + 1))
    parts = n + m + (0 if omega0 else 1)
    if parts == 0:
        n, parts = 1, 1
    w = rng.dirichlet(np.ones(parts))
    a = sorted(w[:n].tolist(), reverse=True)
    b = sorted(w[n:n + m].tolist(), reverse=True)
    return _renormalized(a, b, omega0)


def _renormalized(a, b, omega0: bool) -> ThomaPoint:
    total = math.fsum(a) + math.fsum(b)
    if omega0 or total > 1:
        a = [x / total for x in a]
        b = [x / total for x in b]
        while math.fsum(a) + math.fsum(b) > 1:
            # shave rounding so the mass check passes
            a = [x * (1 - 1e-15) for x in a]
            b = [x * (1 - 1e-15) for x in b]
    return make_point(a, b)


def bounds_points(seed: int, count: int = 1000) -> list[ThomaPoint]:
    rng = np.random.default_rng(seed)
    pts = [random_point(rng) for _ in range(count)]
    return pts


def limit_points(seed: int, count: int = 100, gap: float = 0.05,
                 min_top: float = 0.1) -> list[ThomaPoint]:
    """Points whose alpha's and beta's are each separated by at least ``gap``.

    alpha_1, beta_1 >= min_top, and every coordinate also stays ``gap`` above 0
    so that each shifted top atom is simple.
    """
    rng = np.random.default_rng(seed)
    out: list[ThomaPoint] = []
    while len(out) < count:
        n = int(rng.integers(1, 4))
        m = int(rng.integers(1, 4))
        with_gamma = bool(rng.integers(0, 2))
        w = rng.dirichlet(np.ones(n + m + (1 if with_gamma else 0)))
        a = sorted(w[:n].tolist(), reverse=True)
        b = sorted(w[n:n + m].tolist(), reverse=True)
        if a[0] < min_top or b[0] < min_top:
            continue
        if not (_separated(a, gap) and _separated(b, gap)):
            continue
        out.append(_renormalized(a, b, not with_gamma))
    return out


def omega0_points(seed: int, count: int = 20, gap: float = 0.05,
                  min_top: float = 0.4, top_gap: float = 0.2) -> list[ThomaPoint]:
    """Omega_0 points with distinct coordinates and a dominant alpha_1.

    alpha_1 >= min_top and alpha_1 - alpha_2 >= top_gap keep the O(1/C)
    remainder of A chi_C bounded (see ``a_chi_remainder``).
    """
    rng = np.random.default_rng(seed)
    out: list[ThomaPoint] = []
    while len(out) < count:
        n = int(rng.integers(1, 4))
        m = int(rng.integers(0, 3))
        a1 = float(rng.uniform(min_top, 0.9))
        k = n - 1 + m
        rest = (rng.dirichlet(np.ones(k)) * (1 - a1)).tolist() if k else []
        if not rest:
            a1 = 1.0
        a = [a1] + sorted(rest[:n - 1], reverse=True)
        b = sorted(rest[n - 1:], reverse=True)
        if len(a) > 1 and a[0] - a[1] < top_gap:
            continue
        if not _separated(a, gap) or not _separated(b, gap):
            continue
        out.append(_renormalized(a, b, True))
    return out


def a_chi_remainder(p: ThomaPoint, params: NumParams) -> float:
    """K with A chi_C = limit + K / C + o(1/C) at Omega_0 points with a simple alpha_1."""
    th, s1, s2 = params.theta, params.s1, params.s2
    a1 = p.alpha1
    s = math.fsum([a / (a1 - a) for a in p.alpha[1:]] + [b / (a1 + th * b) for b in p.beta])
    return (s1 - 1 - th) / a1 + 1 - s2 / th + 2 * th * s / a1


def _separated(seq, gap: float) -> bool:
    vals = list(seq) + [0.0]
    return all(u - v >= gap for u, v in zip(vals, vals[1:]))


# -- bounds ----------------------------------------------------------------------

def _le(lhs: SignedLog | float, rhs_log: float) -> bool:
    """|lhs| <= e^{rhs_log}, with relative slack."""
    if isinstance(lhs, SignedLog):
        if lhs.sign == 0:
            return True
        return lhs.log <= rhs_log + LOG_SLACK * max(1.0, abs(rhs_log))
    if lhs == 0:
        return True
    return math.log(abs(lhs)) <= rhs_log + LOG_SLACK * max(1.0, abs(rhs_log))


def _log(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def envelope(x: float, C: float, lam: float) -> float:
    """(lam x + 1/C) / (x + e^{-lam x C})."""
    return (lam * x + 1.0 / C) / (x + math.exp(-lam * x * C))


def _point_checks(p: ThomaPoint, C: float, theta: float, max_k: int) -> list[tuple[str, bool]]:
    res: list[tuple[str, bool]] = []
    a1, b1 = p.alpha1, p.beta1
    mu = thoma_measure(p, theta)
    pos = C > 0
    c = abs(C)
    for k in range(max_k + 1):
        q = eval_Q(p, ExpPoly.term(k, C), theta)
        if pos:
            rhs = max(k * _log(a1) + a1 * c if k else a1 * c, k * math.log(theta))
            res.append((f"exp-upper-pos k={k}", _le(q, rhs)))
        else:
            rhs = max(k * (math.log(theta) + _log(b1)) + theta * b1 * c if k else theta * b1 * c, 0.0)
            res.append((f"exp-upper-neg k={k}", _le(q, rhs)))
        # pointwise envelopes at every atom
        ok = True
        for t, _w in mu.atoms:
            if t == 0 and k:
                continue
            lv = (k * math.log(abs(t)) if k else 0.0) + C * t
            if pos and t >= 0:
                bound = (k * _log(a1) if k else 0.0) + c * a1
            elif pos:
                bound = k * math.log(theta)
            elif t >= 0:
                bound = 0.0
            else:
                bound = (k * math.log(theta * b1) if k else 0.0) + theta * b1 * c
            ok &= lv <= bound + LOG_SLACK * max(1.0, abs(bound))
        res.append((f"envelope-{'pos' if pos else 'neg'} k={k}", ok))
    q0 = eval_Q(p, ExpPoly.term(0, C), theta)
    if pos:
        lower = _log(a1) + a1 * c
    else:
        lower = _log(b1) + theta * b1 * c
    res.append((f"exp-lower-{'pos' if pos else 'neg'}",
                lower == -math.inf or lower <= q0.log + LOG_SLACK * max(1.0, abs(q0.log))))
    if c >= 1:
        res.append(("chi-bound", abs(chi(p, C, theta)) <= 1 + theta + math.log(2) + 1e-12))
    if pos:
        for lam, x in ((1.0, a1), (theta, b1)):
            if C > 2 / lam:
                bound = lam + lam / math.log(2)
                res.append(("ineq-envelope", envelope(x, C, lam) <= bound * (1 + 1e-12)))
                xs = math.log(C * lam) / (C * lam)
                if xs <= 1:
                    res.append(("ineq-switch", envelope(xs, C, lam) <= lam * (1 + 1e-12)))
    return res


def check_bounds(points: Sequence[ThomaPoint], grid: Sequence[float], theta: float,
                 max_k: int = MAX_K) -> dict:
    """Inequalities for Q[t^k e^{Ct}], the lower bounds, the chi bound and the envelope."""
    violations = []
    total = 0
    for pid, p in enumerate(points):
        for C in grid:
            for name, ok in _point_checks(p, float(C), theta, max_k):
                total += 1
                if not ok:
                    violations.append({"point_id": pid, "C": C, "check": name,
                                       "point": p.to_json()})
    return {"theta": theta, "grid": list(grid), "points": len(points), "checks": total,
            "violations": violations, "status": "pass" if not violations else "fail"}


# -- limits -----------------------------------------------------------------------

def top_mass(p: ThomaPoint, theta: float, positive: bool) -> tuple[float, float]:
    """(location, merged mass) of the extreme atom, merging within MULTIPLICITY_TOL."""
    mu = thoma_measure(p, theta)
    loc = mu.locations[0] if positive else mu.locations[-1]
    return loc, mu.mass_at(loc, MULTIPLICITY_TOL)


def limit_value(p: ThomaPoint, target: str, C: float, params: NumParams,
                phi_coeffs: Sequence[float] = (1.0,), v=("q", 1), level=(0, 0)) -> tuple[float, float]:
    """(value at C, claimed limit) for a named limit."""
    th = params.theta
    if target in ("top-atom-pos", "top-atom-neg"):
        pos = target.endswith("pos")
        loc, mass = top_mass(p, th, pos)
        phi = ExpPoly.poly_times_exp(phi_coeffs, C)
        q = eval_Q(p, phi, th)
        val = SignedLog(q.sign, q.log - C * loc).value() if q.sign else 0.0
        claimed = sum(c * loc ** k for k, c in enumerate(phi_coeffs)) * mass
        return val, claimed
    if target == "chi-pos":
        return chi(p, C, th), p.alpha1
    if target == "chi-neg":
        return chi(p, C, th), -th * p.beta1
    if target in ("gammaCD-pos", "gammaCD-neg"):
        return gamma_CD_num(p, C, C, level, params), gamma_CD_limit(p, level, params, C > 0)
    if target == "gammaC-v":
        return gamma_C_num(p, C, v, level, params), gamma_C_limit(p, v, level, params, C > 0)
    if target == "a-chi":
        return a_chi_num(p, C, params), nat_limit_alpha1(p, params)
    raise UnknownLimit(f"unknown limit {target!r}; known: {', '.join(LIMITS)}")


def _grid_for(target: str, grid: Sequence[float]) -> list[float]:
    if target.endswith("-pos") or target == "a-chi":
        g = [c for c in grid if c > 0]
    elif target.endswith("-neg"):
        g = [c for c in grid if c < 0]
    else:
        g = list(grid)
    return sorted(g, key=lambda c: (c < 0, abs(c)))


def limit_sweep(p: ThomaPoint, target: str, grid: Sequence[float] | None = None,
                params: NumParams | None = None, *, tol_const: float = TOL_CONST,
                **kw) -> dict:
    """Table of (C, value, claimed, abs_err) plus a convergence verdict.

    Each row must satisfy abs_err <= tol_const / |C|, and along each sign of C
    the errors over the last three grid values must be non-increasing (up to
    1e-9 of floating noise).
    """
    if target not in LIMITS:
        raise UnknownLimit(f"unknown limit {target!r}; known: {', '.join(LIMITS)}")
    params = params or NumParams()
    rows = []
    for C in _grid_for(target, grid if grid is not None else default_grid()):
        val, claimed = limit_value(p, target, C, params, **kw)
        err = abs(val - claimed)
        rows.append({"C": C, "value": val, "claimed_limit": claimed, "abs_err": err,
                     "within_tol": err <= tol_const / abs(C)})
    monotone = True
    for sign in (1, -1):
        errs = [r["abs_err"] for r in rows if (r["C"] > 0) == (sign > 0)]
        tail = errs[-3:]
        monotone &= all(b <= a + 1e-9 for a, b in zip(tail, tail[1:]))
    ok = monotone and all(r["within_tol"] for r in rows)
    return {"target": target, "rows": rows, "monotone_tail": monotone,
            "status": "pass" if ok else "fail"}
