"""Differential and bilinear operators on the polynomial families.

All operators are exact.  Infinite sums over moment indices truncate because
only finitely many partial derivatives of a polynomial are nonzero.
"""

from __future__ import annotations

from .poly import (
    ONE_M, ONE_P, CoeffElem, ExtPoly, LevelMismatch, MomentPoly, NatPoly,
    PhiPoly, PolyError, substitute_moments,
)


class DegenerationError(PolyError):
    """A negative power of theta survived the Petrov substitution."""


def _cp(entries) -> CoeffElem:
    """Coefficient from ``[(c, (theta, s1, s2, pa, ptau)), ...]``."""
    return CoeffElem({(ONE_M, pm): c for c, pm in entries})


def _q(k: int) -> MomentPoly:
    return MomentPoly.q(k)


def _q_indices(u) -> list[int]:
    return sorted(idx for kind, idx in u.generators() if kind == "q")


# -- moment-coordinate generators ----------------------------------------------

def gamma(u: MomentPoly, v: MomentPoly) -> MomentPoly:
    """Carré du champ in moment coordinates."""
    _need(u, MomentPoly)
    _need(v, MomentPoly)
    du = {k: u.diff(("q", k)) for k in _q_indices(u)}
    dv = {l: v.diff(("q", l)) for l in _q_indices(v)}
    out = MomentPoly()
    for k, a in du.items():
        for l, b in dv.items():
            w = (k + 1) * (l + 1) * (_q(k + l) - _q(k) * _q(l))
            out = out + w * a * b
    return out


def _second_order_moment(u: MomentPoly) -> MomentPoly:
    ks = _q_indices(u)
    out = MomentPoly()
    for k in ks:
        dk = u.diff(("q", k))
        for l in _q_indices(dk):
            w = (k + 1) * (l + 1) * (_q(k + l) - _q(k) * _q(l))
            out = out + w * dk.diff(("q", l))
    return out


def apply_A(u: MomentPoly) -> MomentPoly:
    """Image of ``u`` under the moment-form generator with parameters theta, s1, s2."""
    _need(u, MomentPoly)
    out = _second_order_moment(u)
    for k in _q_indices(u):
        dk = u.diff(("q", k))
        # ((1-theta)k + s1) q_{k-1} - (k + s2/theta) q_k
        down = _cp([(k, ONE_P), (-k, (1, 0, 0, 0, 0)), (1, (0, 1, 0, 0, 0))])
        diag = _cp([(k, ONE_P), (1, (-1, 0, 1, 0, 0))])
        out = out + (k + 1) * (down * _q(k - 1) - diag * _q(k)) * dk
        if k >= 2:
            conv = MomentPoly()
            for a in range(k - 1):
                conv = conv + _q(a) * _q(k - 2 - a)
            out = out + _cp([(k + 1, (1, 0, 0, 0, 0))]) * conv * dk
    return out


def apply_A_petrov(u: MomentPoly) -> MomentPoly:
    """Two-parameter (pa, ptau) generator on the Kingman simplex, moment form."""
    _need(u, MomentPoly)
    out = _second_order_moment(u)
    for k in _q_indices(u):
        dk = u.diff(("q", k))
        diag = _cp([(-(k + 1) * k, ONE_P), (-(k + 1), (0, 0, 0, 0, 1))])
        down = _cp([((k + 1) * k, ONE_P), (-(k + 1), (0, 0, 0, 1, 0))])
        out = out + (diag * _q(k) + down * _q(k - 1)) * dk
    return out


def _petrov_limit(pm):
    th, a1, a2, pa, pt = pm
    # s2 -> ptau*theta, s1 -> -pa
    th += a2
    pt += a2
    pa += a1
    sign = -1 if a1 % 2 else 1
    if th < 0:
        raise DegenerationError(f"theta^{th} remains after s2 -> ptau*theta")
    if th > 0:
        return None
    return sign, (0, 0, 0, pa, pt)


def degenerate_to_petrov(u: MomentPoly) -> MomentPoly:
    """apply_A(u) with s2 -> ptau*theta, s1 -> -pa, then theta -> 0."""
    return apply_A(u).map_params(_petrov_limit)


# -- shifted levels ----------------------------------------------------------

def _level(lvl) -> tuple[int, int]:
    n, m = int(lvl[0]), int(lvl[1])
    if n < 0 or m < 0:
        raise PolyError(f"shift level entries must be >= 0, got {lvl}")
    return (n, m)


def _at_level(p: ExtPoly, lvl) -> ExtPoly:
    _need(p, ExtPoly)
    if p.level != lvl:
        raise LevelMismatch(f"polynomial at level {p.level}, operator at {lvl}")
    return p


def _x_range(lvl):
    n, m = lvl
    return [i for i in range(-m, n + 1) if i != 0]


def _qs_indices(p: ExtPoly) -> list[int]:
    return sorted(idx for kind, idx in p.generators() if kind == "qs")


def gamma_NM(u: ExtPoly, v: ExtPoly, lvl) -> ExtPoly:
    lvl = _level(lvl)
    _at_level(u, lvl)
    _at_level(v, lvl)
    X = lambda i: ExtPoly.x(i, lvl)  # noqa: E731
    Q = lambda k: ExtPoly.qs(k, lvl)  # noqa: E731
    xs = _x_range(lvl)
    dux = {i: u.diff(("x", i)) for i in xs}
    dvx = {i: v.diff(("x", i)) for i in xs}
    duq = {k: u.diff(("qs", k)) for k in _qs_indices(u)}
    dvq = {k: v.diff(("qs", k)) for k in _qs_indices(v)}
    out = ExtPoly(level=lvl)
    # block 1: (1_{i=j} x_i - x_i x_j)
    su = ExtPoly(level=lvl)
    sv = ExtPoly(level=lvl)
    for i in xs:
        if dux[i] and dvx[i]:
            out = out + X(i) * dux[i] * dvx[i]
        su = su + X(i) * dux[i]
        sv = sv + X(i) * dvx[i]
    out = out - su * sv
    # block 2: mixed x / q terms
    for i in xs:
        for k in set(duq) | set(dvq):
            t = ExtPoly(level=lvl)
            if k in dvq and dux[i]:
                t = t + dux[i] * dvq[k]
            if k in duq and dvx[i]:
                t = t + dvx[i] * duq[k]
            if t:
                out = out - (k + 1) * X(i) * Q(k) * t
    # block 3: moment part
    for k, a in duq.items():
        for l, b in dvq.items():
            out = out + (k + 1) * (l + 1) * (Q(k + l) - Q(k) * Q(l)) * a * b
    return out


def q_nm_of_phi(phi: PhiPoly, lvl) -> ExtPoly:
    """Linear map t^k -> q_k^(N,M), 1 -> 1."""
    _need(phi, PhiPoly)
    lvl = _level(lvl)
    terms = {}
    for (mono, pm), c in phi.items():
        k = mono[0][1] if mono else 0
        m = ((("qs", k), 1),) if k else ONE_M
        terms[(m, pm)] = c
    return ExtPoly(terms, lvl)


def _dt_of_t_times(phi: PhiPoly) -> PhiPoly:
    """(t phi)'."""
    return phi.times_t().d_dt()


def gamma_bracket_double(phi: PhiPoly, psi: PhiPoly, lvl) -> ExtPoly:
    lvl = _level(lvl)
    a = _dt_of_t_times(phi)
    b = _dt_of_t_times(psi)
    return q_nm_of_phi(a * b, lvl) - q_nm_of_phi(a, lvl) * q_nm_of_phi(b, lvl)


def gamma_bracket_single(phi: PhiPoly, u: ExtPoly, lvl) -> ExtPoly:
    lvl = _level(lvl)
    _at_level(u, lvl)
    a = _dt_of_t_times(phi)
    qa = q_nm_of_phi(a, lvl)
    shifted = q_nm_of_phi(a - phi.at_zero(), lvl)
    out = ExtPoly(level=lvl)
    for i in _x_range(lvl):
        d = u.diff(("x", i))
        if d:
            out = out - ExtPoly.x(i, lvl) * shifted * d
    for k in _qs_indices(u):
        d = u.diff(("qs", k))
        term = q_nm_of_phi(a * PhiPoly.t(k), lvl) - qa * ExtPoly.qs(k, lvl)
        out = out + (k + 1) * term * d
    return out


def shift_rewrite(p: ExtPoly, frm, to) -> ExtPoly:
    """Rewrite a level-``frm`` polynomial at the adjacent level ``to``."""
    frm, to = _level(frm), _level(to)
    _at_level(p, frm)
    dn, dm = to[0] - frm[0], to[1] - frm[1]
    if (dn, dm) not in ((1, 0), (0, 1)):
        raise PolyError(f"levels {frm} -> {to} are not adjacent")
    new_x = frm[0] + 1 if dn else -(frm[1] + 1)
    mapping = {}
    for g in p.generators():
        kind, idx = g
        if kind == "qs":
            extra = ExtPoly.x(new_x, to) ** (idx + 1)
            if dm:
                extra = extra * CoeffElem({(ONE_M, (idx, 0, 0, 0, 0)): (-1) ** idx})
            mapping[g] = ExtPoly.qs(idx, to) + extra
        else:
            mapping[g] = ExtPoly.x(idx, to)
    return p.substitute(mapping, ExtPoly, to)


# -- natural coordinates -------------------------------------------------------

def _trunc_of(u: NatPoly, v: NatPoly):
    _need(u, NatPoly)
    _need(v, NatPoly)
    if u.level != v.level:
        raise LevelMismatch(f"truncations {u.level} vs {v.level}")
    return u.level


def gamma_alpha_beta(u: NatPoly, v: NatPoly) -> NatPoly:
    """sum_i x_i du/dx_i dv/dx_i - E(u) E(v), E the Euler operator."""
    tr = _trunc_of(u, v)
    out = NatPoly(level=tr)
    for i in _x_range(tr):
        a = u.diff(("x", i))
        if not a:
            continue
        b = v.diff(("x", i))
        if b:
            out = out + NatPoly.x(i, tr) * a * b
    return out - u.euler() * v.euler()


def _second_diag(f: NatPoly) -> NatPoly:
    """sum_i x_i d^2 f / dx_i^2 - (E^2 - E) f."""
    tr = f.level
    out = NatPoly(level=tr)
    for i in _x_range(tr):
        d2 = f.diff(("x", i)).diff(("x", i)) if ("x", i) in f.generators() else None
        if d2:
            out = out + NatPoly.x(i, tr) * d2
    terms = {}
    for (mono, pm), c in f.items():
        d = sum(e for _g, e in mono)
        if d > 1:
            terms[(mono, pm)] = c * d * (d - 1)
    return out - NatPoly(terms, tr)


def _tilde(i: int, tr) -> NatPoly:
    x = NatPoly.x(i, tr)
    return x if i > 0 else x * CoeffElem({(ONE_M, (1, 0, 0, 0, 0)): -1})


def singular_image(k: int, n: int, m: int) -> NatPoly:
    """Pairwise-symmetrized singular drift applied to q_k, divided by (k+1).

    Equals 2 theta sum_{i<j} x_i x_j h_{k-2}(xt_i, xt_j), which is zero for k <= 1.
    """
    tr = (n, m)
    out = NatPoly(level=tr)
    if k < 2:
        return out
    xs = _x_range(tr)
    tpow = {i: [NatPoly.const(1, tr)] for i in xs}
    for i in xs:
        t = _tilde(i, tr)
        for _ in range(k - 2):
            tpow[i].append(tpow[i][-1] * t)
    two_theta = CoeffElem({(ONE_M, (1, 0, 0, 0, 0)): 2})
    for a, i in enumerate(xs):
        for j in xs[a + 1:]:
            h = NatPoly(level=tr)
            for l in range(k - 1):
                h = h + tpow[i][l] * tpow[j][k - 2 - l]
            out = out + two_theta * NatPoly.x(i, tr) * NatPoly.x(j, tr) * h
    return out


def apply_A_nat(u: MomentPoly, n: int, m: int) -> NatPoly:
    """Natural-coordinate generator applied to the truncated image of ``u``."""
    _need(u, MomentPoly)
    if n < 0 or m < 0:
        raise PolyError("truncation sizes must be >= 0")
    if n == 0 and m == 0:
        raise PolyError("empty truncation")
    tr = (n, m)
    f = substitute_moments(u, n, m)
    out = _second_diag(f)
    pos = _cp([(1, (0, 1, 0, 0, 0)), (-1, (1, 0, 0, 0, 0))])  # s1 - theta
    neg = _cp([(-1, (-1, 1, 0, 0, 0)), (-1, (-1, 0, 0, 0, 0))])  # -(s1 + 1)/theta
    for i in _x_range(tr):
        d = f.diff(("x", i))
        if d:
            out = out + (pos if i > 0 else neg) * d
    out = out - CoeffElem({(ONE_M, (-1, 0, 1, 0, 0)): 1}) * f.euler()
    for k in _q_indices(u):
        if k < 2:
            continue
        du = substitute_moments(u.diff(("q", k)), n, m)
        out = out + (k + 1) * du * singular_image(k, n, m)
    return out


def _need(p, cls):
    if not isinstance(p, cls):
        raise PolyError(f"expected {cls.__name__}, got {type(p).__name__}")


__all__ = [
    "DegenerationError", "apply_A", "gamma", "apply_A_petrov", "degenerate_to_petrov",
    "gamma_NM", "q_nm_of_phi", "gamma_bracket_double", "gamma_bracket_single",
    "shift_rewrite", "gamma_alpha_beta", "apply_A_nat", "singular_image",
]
