from fractions import Fraction

from hypothesis import strategies as st

from thomalab.poly import ExtPoly, MomentPoly, NatPoly, pa, ptau, s1, s2, theta

RATIONALS = st.fractions(min_value=-5, max_value=5, max_denominator=6)


@st.composite
def coeffs(draw, petrov=False):
    """A rational times a Laurent monomial in theta and monomials in s1, s2."""
    c = draw(RATIONALS.filter(lambda f: f != 0))
    out = theta(draw(st.integers(-2, 2))) * s1() ** draw(st.integers(0, 2)) \
        * s2() ** draw(st.integers(0, 1))
    if petrov:
        out = out * pa() ** draw(st.integers(0, 1)) * ptau() ** draw(st.integers(0, 1))
    return out * Fraction(c)


def _build(draw, gens, one, max_terms=4, max_deg=3):
    p = one * 0
    for _ in range(draw(st.integers(0, max_terms))):
        term = one * draw(coeffs())
        for _ in range(draw(st.integers(0, max_deg))):
            term = term * draw(st.sampled_from(gens))
        p = p + term
    return p


@st.composite
def moment_polys(draw, max_k=4, max_terms=4, max_deg=3):
    gens = [MomentPoly.q(k) for k in range(1, max_k + 1)]
    return _build(draw, gens, MomentPoly.const(1), max_terms, max_deg)


@st.composite
def nat_polys(draw, trunc=None, max_terms=4, max_deg=3):
    n, m = trunc if trunc else (draw(st.integers(0, 3)), draw(st.integers(0, 3)))
    if n + m == 0:
        n = 1
    gens = [NatPoly.x(i, (n, m)) for i in list(range(-m, 0)) + list(range(1, n + 1))]
    return _build(draw, gens, NatPoly.const(1, (n, m)), max_terms, max_deg)


@st.composite
def ext_polys(draw, max_terms=4, max_deg=3):
    lvl = (draw(st.integers(0, 2)), draw(st.integers(0, 2)))
    gens = [ExtPoly.qs(k, lvl) for k in range(1, 4)]
    gens += [ExtPoly.x(i, lvl) for i in list(range(-lvl[1], 0)) + list(range(1, lvl[0] + 1))]
    return _build(draw, gens, ExtPoly.const(1, lvl), max_terms, max_deg)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(mod.RESULTS):
            terminalreporter.write_line(mod.RESULTS[n])
