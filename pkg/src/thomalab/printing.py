"""Textual forms of polynomials.

``to_text`` is the canonical printer: one term per monomial, deterministic
order, and output that re-parses to a structurally equal value.  ``to_grouped``
collects terms by generator monomial and pulls out the integer content of each
parameter coefficient, which is easier to read for operator images.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd

from .poly import PARAM_NAMES, ONE_M, Poly, mono_degree

_PARAM_TEXT = ("theta", "s1", "s2", "pa", "ptau")


def gen_text(g, level=None) -> str:
    kind, idx = g
    if kind == "q":
        return f"q{idx}"
    if kind == "qs":
        n, m = level
        return f"qs{idx}@{n},{m}"
    if kind == "x":
        return f"a{idx}" if idx > 0 else f"b{-idx}"
    if kind == "t":
        return "t"
    raise ValueError(f"unknown generator {g}")


def _pow(name: str, e: int) -> str:
    return name if e == 1 else f"{name}^{e}"


def _gen_order(g):
    # q-type first, then a's ascending, then b's ascending
    kind, idx = g
    rank = {"q": 0, "qs": 0, "t": 0, "x": 1}[kind]
    return (rank, 0 if idx > 0 else 1, abs(idx))


def _term_sort_key(key):
    mono, pm = key
    return (-mono_degree(mono),
            tuple((_gen_order(g), -e) for g, e in sorted(mono, key=lambda ge: _gen_order(ge[0]))),
            tuple(-e for e in pm[1:]), -pm[0])


def _factors(mono, pm, level) -> tuple[list[str], list[str]]:
    num: list[str] = []
    den: list[str] = []
    for i, e in enumerate(pm):
        if e > 0:
            num.append(_pow(_PARAM_TEXT[i], e))
        elif e < 0:
            den.append(_pow(_PARAM_TEXT[i], -e))
    for g, e in sorted(mono, key=lambda ge: _gen_order(ge[0])):
        num.append(_pow(gen_text(g, level), e))
    return num, den


def _term_text(c, mono, pm, level) -> tuple[str, str]:
    """(sign, body) for a single term with a nonzero rational coefficient."""
    sign = "-" if c < 0 else "+"
    c = abs(c)
    c = Fraction(c)
    num, den = _factors(mono, pm, level)
    parts: list[str] = []
    if c.numerator != 1 or not num:
        parts.append(str(c.numerator))
    parts.extend(num)
    body = "*".join(parts)
    dens = list(den)
    if c.denominator != 1:
        dens.insert(0, str(c.denominator))
    for d in dens:
        body += "/" + d
    return sign, body


def to_text(p: Poly) -> str:
    if p.is_zero():
        return "0"
    out = []
    for key in sorted(p.items(), key=lambda kv: _term_sort_key(kv[0])):
        (mono, pm), c = key
        sign, body = _term_text(c, mono, pm, p.level)
        if not out:
            out.append(("-" if sign == "-" else "") + body)
        else:
            out.append(f" {sign} {body}")
    return "".join(out)


def _coeff_text(terms: dict) -> str:
    parts = []
    for pm, c in sorted(terms.items(), key=lambda kv: (sum(kv[0][1:]) + abs(kv[0][0]), tuple(-e for e in kv[0][1:]), -kv[0][0])):
        sign, body = _term_text(c, ONE_M, pm, None)
        if not parts:
            parts.append(("-" if sign == "-" else "") + body)
        else:
            parts.append(f" {sign} {body}")
    return "".join(parts).replace(" ", "")


def to_grouped(p: Poly) -> str:
    """Terms grouped by generator monomial, with integer content pulled out."""
    if p.is_zero():
        return "0"
    groups: dict = {}
    for (mono, pm), c in p.items():
        groups.setdefault(mono, {})[pm] = c
    out = []
    for mono in sorted(groups, key=lambda m: _term_sort_key((m, (0,) * 5))):
        coeffs = groups[mono]
        vals = [Fraction(c) for c in coeffs.values()]
        g = 0
        for v in vals:
            g = gcd(g, v.numerator)
        lcm_den = 1
        for v in vals:
            lcm_den = lcm_den * v.denominator // gcd(lcm_den, v.denominator)
        content = Fraction(g, lcm_den)
        if all(v < 0 for v in vals):
            content = -content
        inner = {pm: Fraction(c) / content for pm, c in coeffs.items()}
        inner = {pm: (int(v) if v.denominator == 1 else v) for pm, v in inner.items()}
        num, _ = _factors(mono, (0,) * 5, p.level)
        sign = "-" if content < 0 else "+"
        content = abs(content)
        pieces = []
        if len(inner) == 1:
            (pm, v), = inner.items()
            s, body = _term_text(v * content, mono, pm, p.level)
            text = body
        else:
            if content != 1:
                pieces.append(str(content.numerator))
            pieces.append("(" + _coeff_text(inner) + ")")
            pieces.extend(num)
            text = "*".join(pieces)
            if content.denominator != 1:
                text += "/" + str(content.denominator)
        if not out:
            out.append(("-" if sign == "-" else "") + text)
        else:
            out.append(f" {sign} {text}")
    return "".join(out)


__all__ = ["to_text", "to_grouped", "gen_text", "PARAM_NAMES"]
