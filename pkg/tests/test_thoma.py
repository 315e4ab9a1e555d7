import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thomalab.checks import random_point
from thomalab.thoma import (
    CoincidentAtomsError, ExpPoly, NumParams, PointError, a_chi_num, chi, eval_Q, eval_q,
    gamma_C_num, gamma_CD_num, make_point, nat_limit_alpha1, thoma_measure,
)
import numpy as np

W0 = make_point([0.5, 0.3], [0.2])
P1 = NumParams(1.0, 0.0, 1.0)


def test_points():
    assert W0.gamma == 0 and W0.in_omega0()
    assert make_point([0.5, 0.3], [0.1]).gamma == pytest.approx(0.1)
    with pytest.raises(PointError):
        make_point([0.3, 0.5])
    with pytest.raises(PointError):
        make_point([0.7], [0.5])


def test_measure_atoms():
    mu = thoma_measure(W0, 1.0)
    got = sorted((round(x, 12), round(w, 12)) for x, w in mu.atoms)
    assert got == [(-0.2, 0.2), (0.3, 0.3), (0.5, 0.5)]
    assert thoma_measure(make_point([1.0]), 1.0).atoms == [(1.0, 1.0)]
    assert thoma_measure(make_point([]), 1.0).atoms == [(0.0, 1.0)]


def test_moments():
    assert eval_q(W0, 1, 1.0) == pytest.approx(0.30, abs=1e-12)
    assert eval_q(W0, 2, 1.0) == pytest.approx(0.16, abs=1e-12)
    assert eval_q(W0, 0, 1.0) == pytest.approx(1.0)


def test_Q_examples():
    assert eval_Q(W0, ExpPoly.term(), 1.0).value() == pytest.approx(1.0)
    e = 0.5 * math.exp(0.5) + 0.3 * math.exp(0.3) + 0.2 * math.exp(-0.2)
    assert eval_Q(W0, ExpPoly.term(0, 1.0), 1.0).value() == pytest.approx(e, rel=1e-12)
    r = eval_Q(make_point([1.0]), ExpPoly.term(0, 1000.0), 1.0)
    assert r.sign == 1 and r.log == pytest.approx(1000.0)


def test_chi_examples():
    assert chi(W0, 1.0, 1.0) == pytest.approx(0.87258, abs=1e-5)
    assert abs(chi(W0, 1e4, 1.0) - 0.5) <= 1e-3
    assert abs(chi(W0, -1e4, 1.0) + 0.2) <= 1e-3


def test_gamma_cd_examples():
    assert abs(gamma_CD_num(W0, 1e4, 1e4, (0, 0), P1) - 0.25) <= 1e-2
    assert abs(gamma_CD_num(W0, -1e4, -1e4, (0, 0), P1) - 0.16) <= 1e-2
    assert gamma_CD_num(W0, 3.0, 70.0, (0, 0), P1) == gamma_CD_num(W0, 70.0, 3.0, (0, 0), P1)


def test_gamma_c_examples():
    assert abs(gamma_C_num(W0, 1e4, ("q", 1), (0, 0), P1) - 0.2) <= 1e-2
    assert abs(gamma_C_num(W0, 1e4, ("x", -1), (0, 1), P1) + 0.1) <= 1e-2
    th, b1 = 1.0, 0.2
    for k in (1, 2):
        qk = eval_q(W0, k, th)
        lim = -th * (k + 1) * ((-th) ** k * b1 ** (k + 1) - b1 * qk)
        assert abs(gamma_C_num(W0, -1e4, ("q", k), (0, 0), P1) - lim) <= 1e-2


def test_a_chi_examples():
    prm = NumParams(1.0, 2.0, 2.0)
    assert nat_limit_alpha1(W0, prm) == pytest.approx(3.5714286, abs=1e-6)
    vals = [a_chi_num(W0, C, prm) for C in (1e2, 1e3, 1e4, 1e5)]
    assert max(vals[1:]) - min(vals[1:]) < 1e-1
    assert nat_limit_alpha1(make_point([1.0]), P1) == pytest.approx(-2.0)
    with pytest.raises(CoincidentAtomsError):
        a_chi_num(make_point([0.4, 0.4, 0.2]), 1e3, prm)


def test_nat_limit_theta_two():
    # -theta + s1 - (s2/theta) a1 + 2 theta (0.3/(0.6-0.3) + 0.1/(0.6+theta*0.1))
    p = make_point([0.6, 0.3], [0.1])
    assert nat_limit_alpha1(p, NumParams(2.0, 1.0, 2.0)) == pytest.approx(2.9, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32), st.sampled_from([0.5, 1.0, 2.0]))
def test_measure_invariants(seed, th):
    p = random_point(np.random.default_rng(seed))
    assert thoma_measure(p, th).total_mass() == pytest.approx(1.0, abs=1e-12)
    one = eval_Q(p, ExpPoly.term(), th)
    assert one.sign == 1 and one.log == pytest.approx(0.0, abs=1e-12)
    for k in range(0, 13):
        ref = eval_Q(p, ExpPoly.term(k), th).value()
        assert eval_q(p, k, th) == pytest.approx(ref, rel=1e-12, abs=1e-300)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 32), st.lists(st.floats(-3, 3), min_size=1, max_size=4))
def test_Q_operator_norm(seed, coeffs):
    th = 1.0
    p = random_point(np.random.default_rng(seed))
    phi = ExpPoly.poly_times_exp(coeffs, 0.0)
    lo, hi = -th * p.beta1, p.alpha1
    grid = np.linspace(lo, hi, 401) if hi > lo else np.array([lo])
    sup = max(abs(phi(t)) for t in list(grid) + [0.0])
    assert abs(eval_Q(p, phi, th).value()) <= sup * (1 + 1e-9) + 1e-12


def test_chi_refined_rate():
    for a in ([0.6, 0.3], [0.5, 0.2, 0.1]):
        p = make_point(a, [0.05])
        nu = thoma_measure(p, 1.0).mass_at(p.alpha1, 1e-9)
        for C in (1e3, 1e4):
            assert abs(C * (chi(p, C, 1.0) - p.alpha1) - math.log(nu)) <= 1e-3
