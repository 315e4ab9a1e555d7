"""Exact identity sweeps over finite generator ranges.

Each checker yields cases ``{identity, case, status, witness?}``; a witness
holds the printed left and right sides when they differ.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement
from typing import Callable, Iterator

from .operators import (
    apply_A, apply_A_nat, apply_A_petrov, degenerate_to_petrov, gamma, gamma_NM,
    gamma_alpha_beta, gamma_bracket_double, gamma_bracket_single, q_nm_of_phi,
    shift_rewrite,
)
from .poly import ExtPoly, MomentPoly, PhiPoly, reduce_mod_simplex, substitute_moments
from .printing import to_text

IDENTITIES = (
    "product-rule", "bracket-double", "bracket-single", "consistent-shift",
    "gamma-nat-vs-moment", "a-nat-vs-a", "petrov-degeneration",
)


class UnknownIdentity(ValueError):
    pass


@dataclass(frozen=True)
class Ranges:
    max_k: int = 6
    max_level: int = 3
    max_trunc: int = 5
    max_grading: int = 10
    max_phi: int = 5
    max_petrov_k: int = 8

    @classmethod
    def from_mapping(cls, d: dict | None) -> "Ranges":
        d = dict(d or {})
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown range keys: {sorted(unknown)}")
        for k, v in d.items():
            if not isinstance(v, int) or isinstance(v, bool) or v < 0:
                raise ValueError(f"range {k} must be a non-negative integer")
        return cls(**d)


def moment_monomials(max_index: int, max_grading: int) -> list[MomentPoly]:
    """All monomials in q_1..q_max_index with grading in [1, max_grading]."""
    out: list[MomentPoly] = []

    def rec(k: int, left: int, mono: list):
        if k > max_index:
            if mono:
                out.append(MomentPoly({(tuple(mono), (0,) * 5): 1}))
            return
        e = 0
        while e * (k + 1) <= left:
            rec(k + 1, left - e * (k + 1), mono + ([(("q", k), e)] if e else []))
            e += 1

    rec(1, max_grading, [])
    out.sort(key=lambda p: (p.degree(), to_text(p)))
    return out


def _case(name: str, case: str, lhs, rhs) -> dict:
    rec = {"identity": name, "case": case, "status": "pass" if lhs == rhs else "fail"}
    if rec["status"] == "fail":
        rec["witness"] = {"lhs": to_text(lhs), "rhs": to_text(rhs)}
    return rec


def _product_rule(r: Ranges) -> Iterator[dict]:
    monos = moment_monomials(r.max_k, r.max_grading)
    images = {to_text(u): apply_A(u) for u in monos}
    for u, v in combinations_with_replacement(monos, 2):
        su, sv = to_text(u), to_text(v)
        lhs = apply_A(u * v) - images[su] * v - u * images[sv]
        yield _case("product-rule", f"u={su}, v={sv}", lhs, 2 * gamma(u, v))


def _levels(max_level: int):
    for n in range(max_level + 1):
        for m in range(max_level + 1):
            yield (n, m)


def _generators(lvl, max_k: int) -> list[tuple[str, ExtPoly]]:
    n, m = lvl
    gens = [(f"x{i}", ExtPoly.x(i, lvl)) for i in range(-m, n + 1) if i]
    gens += [(f"qs{k}", ExtPoly.qs(k, lvl)) for k in range(1, max_k + 1)]
    return gens


def _bracket_double(r: Ranges) -> Iterator[dict]:
    top = min(r.max_phi, r.max_k)
    for lvl in _levels(r.max_level):
        for k in range(top + 1):
            for l in range(k, top + 1):
                phi, psi = PhiPoly.t(k), PhiPoly.t(l)
                lhs = gamma_NM(q_nm_of_phi(phi, lvl), q_nm_of_phi(psi, lvl), lvl)
                yield _case("bracket-double", f"level={lvl}, phi=t^{k}, psi=t^{l}", lhs,
                            gamma_bracket_double(phi, psi, lvl))


def _bracket_single(r: Ranges) -> Iterator[dict]:
    top = min(r.max_phi, r.max_k)
    for lvl in _levels(r.max_level):
        for k in range(top + 1):
            phi = PhiPoly.t(k)
            qphi = q_nm_of_phi(phi, lvl)
            for name, u in _generators(lvl, top):
                yield _case("bracket-single", f"level={lvl}, phi=t^{k}, u={name}",
                            gamma_NM(qphi, u, lvl), gamma_bracket_single(phi, u, lvl))


def _consistent_shift(r: Ranges) -> Iterator[dict]:
    for lvl in _levels(r.max_level):
        gens = _generators(lvl, r.max_k)
        n, m = lvl
        for to in ((n + 1, m), (n, m + 1)):
            lifted = {name: shift_rewrite(g, lvl, to) for name, g in gens}
            for a in range(len(gens)):
                for b in range(a, len(gens)):
                    (na, ua), (nb, ub) = gens[a], gens[b]
                    lhs = shift_rewrite(gamma_NM(ua, ub, lvl), lvl, to)
                    rhs = gamma_NM(lifted[na], lifted[nb], to)
                    yield _case("consistent-shift", f"{lvl}->{to}, ({na}, {nb})", lhs, rhs)


def _gamma_nat(r: Ranges) -> Iterator[dict]:
    top = r.max_k
    for n in range(r.max_trunc + 1):
        for m in range(r.max_trunc + 1):
            if n == m == 0:
                continue
            subs = {k: substitute_moments(MomentPoly.q(k), n, m) for k in range(1, top + 1)}
            for k in range(1, top + 1):
                for l in range(k, top + 1):
                    lhs = gamma_alpha_beta(subs[k], subs[l])
                    rhs = substitute_moments(gamma(MomentPoly.q(k), MomentPoly.q(l)), n, m)
                    yield _case("gamma-nat-vs-moment", f"n={n}, m={m}, k={k}, l={l}", lhs, rhs)


def a_nat_inputs() -> list[MomentPoly]:
    q = MomentPoly.q
    return [q(1), q(2), q(3), q(4), q(5), q(1) * q(2), q(1) ** 2, q(1) * q(3)]


def _a_nat(r: Ranges) -> Iterator[dict]:
    for u in a_nat_inputs():
        au = apply_A(u)
        for n in range(r.max_trunc + 1):
            for m in range(r.max_trunc + 1):
                if n == m == 0:
                    continue
                diff = apply_A_nat(u, n, m) - substitute_moments(au, n, m)
                red = reduce_mod_simplex(diff)
                yield _case("a-nat-vs-a", f"u={to_text(u)}, n={n}, m={m}", red, red.zero_like())


def _petrov(r: Ranges) -> Iterator[dict]:
    for k in range(1, r.max_petrov_k + 1):
        u = MomentPoly.q(k)
        yield _case("petrov-degeneration", f"u=q{k}", degenerate_to_petrov(u), apply_A_petrov(u))


_CHECKERS: dict[str, Callable[[Ranges], Iterator[dict]]] = {
    "product-rule": _product_rule,
    "bracket-double": _bracket_double,
    "bracket-single": _bracket_single,
    "consistent-shift": _consistent_shift,
    "gamma-nat-vs-moment": _gamma_nat,
    "a-nat-vs-a": _a_nat,
    "petrov-degeneration": _petrov,
}


def verify_identity(name: str, ranges: Ranges | dict | None = None) -> dict:
    """Run one named identity over its case range and return a report dict."""
    if name not in _CHECKERS:
        raise UnknownIdentity(f"unknown identity {name!r}; known: {', '.join(IDENTITIES)}")
    r = ranges if isinstance(ranges, Ranges) else Ranges.from_mapping(ranges)
    cases = list(_CHECKERS[name](r))
    failed = sum(c["status"] != "pass" for c in cases)
    return {
        "identity": name,
        "ranges": r.__dict__.copy(),
        "cases": cases,
        "total": len(cases),
        "failed": failed,
        "status": "pass" if failed == 0 else "fail",
    }
