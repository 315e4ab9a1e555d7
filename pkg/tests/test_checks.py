import math

import pytest

from thomalab.checks import (
    DEFAULT_GRID, LIMITS, UnknownLimit, bounds_points, check_bounds, envelope, limit_points,
    limit_sweep, limit_value, omega0_points,
)
from thomalab.thoma import NumParams, chi, make_point

W0 = make_point([0.5, 0.3], [0.2])


def test_default_grid():
    assert sorted(DEFAULT_GRID) == sorted(s * 10.0 ** e for s in (1, -1) for e in range(6))


def test_chi_bound_at_huge_exponent():
    assert chi(make_point([1.0]), 700.0, 1.0) <= 2 + math.log(2)
    assert math.isfinite(chi(make_point([1.0]), 1e5, 1.0))


def test_envelope_switch_point():
    for C in (10.0, 1e3, 1e5):
        for lam in (0.5, 1.0, 2.0):
            x = math.log(C * lam) / (C * lam)
            assert envelope(x, C, lam) <= lam * (1 + 1e-12)


def test_top_atom_multiplicity():
    p = make_point([0.4, 0.4, 0.2])
    val, claimed = limit_value(p, "top-atom-pos", 1e3, NumParams())
    assert claimed == pytest.approx(0.8)
    assert val == pytest.approx(0.8, abs=1e-9)


def test_chi_pos_sweep():
    rep = limit_sweep(W0, "chi-pos", DEFAULT_GRID)
    assert rep["status"] == "pass"
    assert all(r["claimed_limit"] == 0.5 for r in rep["rows"])
    assert [r["C"] for r in rep["rows"]] == [1.0, 10.0, 100.0, 1e3, 1e4, 1e5]


def test_gamma_cd_sweep_limit():
    rep = limit_sweep(W0, "gammaCD-pos", DEFAULT_GRID, NumParams())
    assert rep["rows"][-1]["claimed_limit"] == pytest.approx(0.25)
    assert rep["rows"][-1]["abs_err"] <= 1e-2


def test_unknown_limit():
    with pytest.raises(UnknownLimit):
        limit_sweep(W0, "nope")
    assert "chi-neg" in LIMITS


def test_bounds_small_sample():
    pts = bounds_points(5, 30)
    for th in (0.5, 1.0, 2.0):
        rep = check_bounds(pts, DEFAULT_GRID, th)
        assert rep["violations"] == []
        assert rep["checks"] > 0


def test_point_generators_deterministic_and_constrained():
    a, b = limit_points(3, 10), limit_points(3, 10)
    assert a == b
    for p in a:
        assert p.alpha1 >= 0.1 and p.beta1 >= 0.1
        assert p.alpha1 - (p.alpha[1] if len(p.alpha) > 1 else 0) >= 0.05
    for p in omega0_points(3, 10):
        assert p.in_omega0()
