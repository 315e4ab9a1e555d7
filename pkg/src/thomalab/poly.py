"""Exact sparse polynomials over the parameter ring.

Every polynomial is a map from a term key ``(monomial, pmono)`` to a
rational coefficient, where

* ``monomial`` is a sorted tuple of ``(generator, exponent)`` pairs with
  generator ids ``("q", k)``, ``("qs", k)``, ``("x", i)`` or ``("t", 0)``;
* ``pmono`` is the exponent vector ``(theta, s1, s2, pa, ptau)`` of the
  parameter monomial.  Only the ``theta`` exponent may be negative.

The concrete families differ only in which generators they accept and in
the meaning of ``level``: the shift level ``(N, M)`` for :class:`ExtPoly`,
the truncation ``(n, m)`` for :class:`NatPoly`.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Callable, ClassVar, Iterable, Mapping

Gen = tuple[str, int]
Monomial = tuple[tuple[Gen, int], ...]
PMono = tuple[int, int, int, int, int]
Key = tuple[Monomial, PMono]

PARAM_NAMES = ("theta", "s1", "s2", "pa", "ptau")
ONE_P: PMono = (0, 0, 0, 0, 0)
ONE_M: Monomial = ()


class PolyError(ValueError):
    """Raised for ill-formed polynomials or incompatible operands."""


class LevelMismatch(PolyError):
    pass


class UnknownGenerator(PolyError):
    pass


def _norm(c):
    if isinstance(c, Fraction) and c.denominator == 1:
        return int(c.numerator)
    return c


def _as_rational(c) -> int | Fraction:
    if isinstance(c, bool):
        raise TypeError("bool is not a coefficient")
    if isinstance(c, int):
        return c
    if isinstance(c, Rational):
        return _norm(Fraction(c))
    raise TypeError(f"not an exact rational: {c!r}")


def mono_mul(a: Monomial, b: Monomial) -> Monomial:
    if not a:
        return b
    if not b:
        return a
    d = dict(a)
    for g, e in b:
        d[g] = d.get(g, 0) + e
    return tuple(sorted(d.items()))


def pmono_mul(a: PMono, b: PMono) -> PMono:
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3], a[4] + b[4])


def gen_degree(g: Gen) -> int:
    kind, idx = g
    if kind in ("q", "qs"):
        return idx + 1
    return 1


def mono_degree(m: Monomial) -> int:
    return sum(gen_degree(g) * e for g, e in m)


class Poly:
    """Base class; use one of the concrete families."""

    __slots__ = ("_terms", "level")

    family: ClassVar[str] = "poly"
    kinds: ClassVar[frozenset[str]] = frozenset()

    def __init__(self, terms: Mapping[Key, object] | None = None, level=None):
        self.level = self._check_level(level)
        clean: dict[Key, int | Fraction] = {}
        for (mono, pm), c in (terms or {}).items():
            c = _as_rational(c)
            if c == 0:
                continue
            mono = self._canon_mono(mono)
            if mono is None:
                # q_0 rewritten to the unit already happened in _canon_mono
                continue
            pm = tuple(int(e) for e in pm)
            if len(pm) != 5 or any(e < 0 for e in pm[1:]):
                raise PolyError(f"bad parameter exponents {pm}")
            key = (mono, pm)
            v = _norm(clean.get(key, 0) + c)
            if v == 0:
                clean.pop(key, None)
            else:
                clean[key] = v
        self._terms = clean

    # -- construction helpers -------------------------------------------

    @classmethod
    def _make(cls, terms: dict, level):
        obj = cls.__new__(cls)
        obj._terms = terms
        obj.level = level
        return obj

    @classmethod
    def _check_level(cls, level):
        if level is not None:
            raise PolyError(f"{cls.family} polynomials carry no level")
        return None

    def _canon_mono(self, mono) -> Monomial:
        d: dict[Gen, int] = {}
        for g, e in mono:
            g = (str(g[0]), int(g[1]))
            e = int(e)
            if e < 0:
                raise PolyError("negative generator exponent")
            if e == 0:
                continue
            if g[0] in ("q", "qs") and g[1] == 0:
                continue  # q_0 = 1
            self._check_gen(g)
            d[g] = d.get(g, 0) + e
        return tuple(sorted(d.items()))

    def _check_gen(self, g: Gen) -> None:
        if g[0] not in self.kinds:
            raise UnknownGenerator(f"generator {g} not in {self.family} family")
        if g[0] in ("q", "qs") and g[1] < 1:
            raise UnknownGenerator(f"moment index must be >= 1, got {g}")

    @classmethod
    def const(cls, c, level=None):
        return cls({(ONE_M, ONE_P): c}, level)

    @classmethod
    def gen(cls, kind: str, idx: int, level=None):
        return cls({((((kind, idx), 1),), ONE_P): 1}, level)

    @classmethod
    def param(cls, name: str, exp: int = 1, level=None):
        pm = [0] * 5
        pm[PARAM_NAMES.index(name)] = exp
        return cls({(ONE_M, tuple(pm)): 1}, level)

    def zero_like(self):
        return self._make({}, self.level)

    # -- basic protocol -------------------------------------------------

    @property
    def terms(self) -> dict[Key, int | Fraction]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __len__(self) -> int:
        return len(self._terms)

    def __bool__(self) -> bool:
        return bool(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            return self._terms == (Poly.const_terms(other))
        if not isinstance(other, Poly):
            return NotImplemented
        return (self.family == other.family and self.level == other.level
                and self._terms == other._terms)

    @staticmethod
    def const_terms(c) -> dict:
        c = _as_rational(c)
        return {(ONE_M, ONE_P): c} if c else {}

    def __hash__(self):
        return hash((self.family, self.level, frozenset(self._terms.items())))

    def __repr__(self) -> str:
        from .printing import to_text
        lvl = f", level={self.level}" if self.level is not None else ""
        return f"{type(self).__name__}({to_text(self)!r}{lvl})"

    def __str__(self) -> str:
        from .printing import to_text
        return to_text(self)

    # -- arithmetic -----------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Poly):
            if type(other) is type(self):
                if other.level != self.level:
                    raise LevelMismatch(
                        f"{self.family} level {self.level} vs {other.level}")
                return other._terms
            if isinstance(other, CoeffElem):
                return other._terms
            if isinstance(self, CoeffElem):
                return None  # handled by reflected op on the richer operand
            raise PolyError(f"cannot combine {self.family} with {other.family}")
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return self.const_terms(other)
        return NotImplemented

    def __add__(self, other):
        t = self._coerce(other)
        if t is NotImplemented:
            return NotImplemented
        if t is None:
            return other.__add__(self)
        out = dict(self._terms)
        for k, c in t.items():
            v = out.get(k, 0) + c
            if v == 0:
                out.pop(k, None)
            else:
                out[k] = _norm(v)
        return self._make(out, self.level)

    __radd__ = __add__

    def __neg__(self):
        return self._make({k: -c for k, c in self._terms.items()}, self.level)

    def __sub__(self, other):
        t = self._coerce(other)
        if t is NotImplemented:
            return NotImplemented
        if t is None:
            return (-other).__add__(self)
        out = dict(self._terms)
        for k, c in t.items():
            v = out.get(k, 0) - c
            if v == 0:
                out.pop(k, None)
            else:
                out[k] = _norm(v)
        return self._make(out, self.level)

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        t = self._coerce(other)
        if t is NotImplemented:
            return NotImplemented
        if t is None:
            return other.__mul__(self)
        return self._make(_mul_terms(self._terms, t), self.level)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise PolyError("only non-negative integer powers")
        result = self.const(1, self.level)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def scale(self, c):
        """Multiply by a rational or a :class:`CoeffElem`."""
        return self * c

    # -- structure ------------------------------------------------------

    def generators(self) -> set[Gen]:
        return {g for (mono, _), _c in self._terms.items() for g, _e in mono}

    def degree(self) -> int | None:
        """Grading with deg x_i = 1 and deg q_k = k + 1; ``None`` for zero."""
        if not self._terms:
            return None
        return max(mono_degree(m) for m, _ in self._terms)

    def diff(self, g: Gen):
        self._check_gen(g)
        out: dict[Key, int | Fraction] = {}
        for (mono, pm), c in self._terms.items():
            for i, (h, e) in enumerate(mono):
                if h == g:
                    nm = mono[:i] + ((h, e - 1),) + mono[i + 1:] if e > 1 else mono[:i] + mono[i + 1:]
                    k = (nm, pm)
                    v = out.get(k, 0) + c * e
                    if v == 0:
                        out.pop(k, None)
                    else:
                        out[k] = _norm(v)
                    break
        return self._make(out, self.level)

    def coefficient(self, mono: Monomial) -> CoeffElem:
        """Parameter coefficient of a generator monomial."""
        mono = tuple(sorted(mono))
        return CoeffElem._make({(ONE_M, pm): c for (m, pm), c in self._terms.items()
                                if m == mono}, None)

    def by_monomial(self) -> dict[Monomial, CoeffElem]:
        groups: dict[Monomial, dict] = {}
        for (m, pm), c in self._terms.items():
            groups.setdefault(m, {})[(ONE_M, pm)] = c
        return {m: CoeffElem._make(t, None) for m, t in groups.items()}

    def substitute(self, mapping: Mapping[Gen, Poly], target: type[Poly] | None = None,
                   level=None) -> Poly:
        """Replace generators by polynomials of the target family."""
        target = target or type(self)
        if target is type(self) and level is None:
            level = self.level
        cache: dict[tuple[Gen, int], dict] = {}

        def power(g: Gen, e: int) -> dict:
            key = (g, e)
            if key not in cache:
                if g in mapping:
                    base = mapping[g]
                    if not isinstance(base, Poly):
                        base = target.const(base, level)
                    cache[key] = (base ** e)._terms if not isinstance(base, CoeffElem) \
                        else (base ** e)._terms
                else:
                    cache[key] = {(((g, e),), ONE_P): 1}
            return cache[key]

        out: dict[Key, int | Fraction] = {}
        for (mono, pm), c in self._terms.items():
            acc = {(ONE_M, pm): c}
            for g, e in mono:
                acc = _mul_terms(acc, power(g, e))
            for k, v in acc.items():
                w = out.get(k, 0) + v
                if w == 0:
                    out.pop(k, None)
                else:
                    out[k] = _norm(w)
        return target(out, level) if target is not type(self) or level != self.level \
            else target._make(out, level)

    def map_params(self, fn: Callable[[PMono], tuple[int | Fraction, PMono] | None]):
        """Apply a monomial-wise parameter map; ``fn`` returns (factor, pmono)."""
        out: dict[Key, int | Fraction] = {}
        for (mono, pm), c in self._terms.items():
            r = fn(pm)
            if r is None:
                continue
            f, npm = r
            k = (mono, npm)
            v = out.get(k, 0) + c * f
            if v == 0:
                out.pop(k, None)
            else:
                out[k] = _norm(v)
        return self._make(out, self.level)

    def evaluate(self, gens: Mapping[Gen, float] | Callable[[Gen], float],
                 params: Mapping[str, float] | None = None):
        """Numeric (or exact, given Fractions) value at an assignment."""
        params = params or {}
        pv = [params.get(n) for n in PARAM_NAMES]
        get = gens if callable(gens) else gens.__getitem__
        total = 0
        for (mono, pm), c in self._terms.items():
            v = c
            for i, e in enumerate(pm):
                if e:
                    if pv[i] is None:
                        raise PolyError(f"parameter {PARAM_NAMES[i]} is unbound")
                    v = v * pv[i] ** e
            for g, e in mono:
                v = v * get(g) ** e
            total = total + v
        return total

    def bind_params(self, values: Mapping[str, int | Fraction]):
        """Substitute rational values for some parameters, exactly."""
        idx = {PARAM_NAMES.index(n): _as_rational(v) for n, v in values.items()}
        for i, v in idx.items():
            if i == 0 and v == 0:
                raise PolyError("theta must be nonzero")

        def fn(pm):
            f = Fraction(1)
            npm = list(pm)
            for i, v in idx.items():
                if pm[i]:
                    f *= Fraction(v) ** pm[i]
                    npm[i] = 0
            return _norm(f), tuple(npm)

        return self.map_params(fn)


def _mul_terms(a: dict, b: dict) -> dict:
    if len(a) > len(b):
        a, b = b, a
    out: dict[Key, int | Fraction] = {}
    get = out.get
    for (m1, p1), c1 in a.items():
        for (m2, p2), c2 in b.items():
            k = (mono_mul(m1, m2),
                 (p1[0] + p2[0], p1[1] + p2[1], p1[2] + p2[2], p1[3] + p2[3], p1[4] + p2[4]))
            out[k] = get(k, 0) + c1 * c2
    return {k: _norm(v) for k, v in out.items() if v != 0}


class CoeffElem(Poly):
    """Element of Q[theta, theta^-1, s1, s2, pa, ptau]."""

    __slots__ = ()
    family = "coeff"
    kinds = frozenset()

    def _canon_mono(self, mono):
        if mono:
            raise UnknownGenerator("coefficients carry no generators")
        return ONE_M


class MomentPoly(Poly):
    """Polynomial in the moment coordinates q_1, q_2, ..."""

    __slots__ = ()
    family = "moment"
    kinds = frozenset({"q"})

    @classmethod
    def q(cls, k: int) -> MomentPoly:
        return cls.const(1) if k == 0 else cls.gen("q", k)


def _check_pair(level, name: str):
    if level is None:
        raise PolyError(f"{name} requires a level")
    a, b = level
    a, b = int(a), int(b)
    if a < 0 or b < 0:
        raise PolyError(f"{name} entries must be >= 0, got {level}")
    return (a, b)


class ExtPoly(Poly):
    """Polynomial in x_{-M..N} and shifted moments q_k^(N,M)."""

    __slots__ = ()
    family = "ext"
    kinds = frozenset({"x", "qs"})

    @classmethod
    def _check_level(cls, level):
        return _check_pair(level, "shift level")

    def _check_gen(self, g):
        super()._check_gen(g)
        if g[0] == "x":
            n, m = self.level
            if g[1] == 0 or not (-m <= g[1] <= n):
                raise UnknownGenerator(f"x_{g[1]} outside level {self.level}")

    @classmethod
    def qs(cls, k: int, level) -> ExtPoly:
        return cls.const(1, level) if k == 0 else cls.gen("qs", k, level)

    @classmethod
    def x(cls, i: int, level) -> ExtPoly:
        return cls.gen("x", i, level)

    def x_indices(self) -> list[int]:
        n, m = self.level
        return [i for i in range(-m, n + 1) if i != 0]


class NatPoly(Poly):
    """Polynomial in the natural coordinates x_{-m..-1}, x_{1..n}."""

    __slots__ = ()
    family = "nat"
    kinds = frozenset({"x"})

    @classmethod
    def _check_level(cls, level):
        return _check_pair(level, "truncation")

    def _check_gen(self, g):
        super()._check_gen(g)
        n, m = self.level
        if g[1] == 0 or not (-m <= g[1] <= n):
            raise UnknownGenerator(f"x_{g[1]} outside truncation {self.level}")

    @classmethod
    def x(cls, i: int, trunc) -> NatPoly:
        return cls.gen("x", i, trunc)

    def x_indices(self) -> list[int]:
        n, m = self.level
        return [i for i in range(-m, n + 1) if i != 0]

    def euler(self) -> NatPoly:
        """sum_i x_i d/dx_i, i.e. each term times its x-degree."""
        out = {}
        for (mono, pm), c in self._terms.items():
            d = sum(e for _g, e in mono)
            if d:
                out[(mono, pm)] = c * d
        return self._make(out, self.level)


class PhiPoly(Poly):
    """Polynomial in the auxiliary variable t."""

    __slots__ = ()
    family = "phi"
    kinds = frozenset({"t"})

    T: ClassVar[Gen] = ("t", 0)

    @classmethod
    def t(cls, k: int = 1) -> PhiPoly:
        return cls.const(1) if k == 0 else cls({(((cls.T, k),), ONE_P): 1})

    @classmethod
    def from_coeffs(cls, coeffs: Iterable) -> PhiPoly:
        terms = {}
        for k, c in enumerate(coeffs):
            terms[((((cls.T, k),),) if k else ONE_M, ONE_P)] = c
        return cls(terms)

    def d_dt(self) -> PhiPoly:
        return self.diff(self.T)

    def times_t(self) -> PhiPoly:
        return self * self.t(1)

    def at_zero(self) -> CoeffElem:
        return self.coefficient(ONE_M)

    def t_degree_terms(self) -> dict[int, CoeffElem]:
        out: dict[int, dict] = {}
        for (mono, pm), c in self._terms.items():
            k = mono[0][1] if mono else 0
            out.setdefault(k, {})[(ONE_M, pm)] = c
        return {k: CoeffElem._make(t, None) for k, t in out.items()}


# -- parameter shorthands ----------------------------------------------------

def theta(exp: int = 1) -> CoeffElem:
    return CoeffElem.param("theta", exp)


def s1() -> CoeffElem:
    return CoeffElem.param("s1")


def s2() -> CoeffElem:
    return CoeffElem.param("s2")


def pa() -> CoeffElem:
    return CoeffElem.param("pa")


def ptau() -> CoeffElem:
    return CoeffElem.param("ptau")


def coeff(c) -> CoeffElem:
    return CoeffElem.const(c)


def neg_theta_pow(k: int) -> CoeffElem:
    """(-theta)^k."""
    return CoeffElem({(ONE_M, (k, 0, 0, 0, 0)): (-1) ** k})


def sgn_theta_inv(i: int) -> CoeffElem:
    """1 / sgn_theta(i): 1 for i > 0, -1/theta for i < 0."""
    if i > 0:
        return coeff(1)
    return CoeffElem({(ONE_M, (-1, 0, 0, 0, 0)): -1})


# -- moment substitution and the simplex ideal ---------------------------------

def moment_image(k: int, n: int, m: int) -> NatPoly:
    """q_k as a polynomial in x_{-m..n}: sum a_i^{k+1} + (-theta)^k sum b_j^{k+1}."""
    trunc = (n, m)
    if k == 0:
        return NatPoly.const(1, trunc)
    terms: dict[Key, int] = {}
    for i in range(1, n + 1):
        terms[(((("x", i), k + 1),), ONE_P)] = 1
    sign = (-1) ** k
    for j in range(1, m + 1):
        terms[(((("x", -j), k + 1),), (k, 0, 0, 0, 0))] = sign
    return NatPoly._make(terms, trunc)


def substitute_moments(p: MomentPoly, n: int, m: int) -> NatPoly:
    """Image of ``p`` under q_k -> truncated moment coordinate (family member f_{n,m})."""
    if not isinstance(p, MomentPoly):
        raise PolyError("substitute_moments expects a MomentPoly")
    if n < 0 or m < 0:
        raise PolyError("truncation sizes must be >= 0")
    mapping = {g: moment_image(g[1], n, m) for g in p.generators()}
    return p.substitute(mapping, NatPoly, (n, m))


def _eliminated_index(trunc) -> int:
    n, m = trunc
    if n >= 1:
        return n
    if m >= 1:
        return -m
    raise PolyError("cannot reduce modulo the simplex relation with an empty truncation")


def reduce_mod_simplex(p: NatPoly) -> NatPoly:
    """Normal form modulo (sum_i x_i - 1), eliminating the last positive variable.

    With no positive variables the last negative one is eliminated instead.
    Substitution of x_e = 1 - rest is done by Horner's scheme in x_e.
    """
    if not isinstance(p, NatPoly):
        raise PolyError("reduce_mod_simplex expects a NatPoly")
    elim = _eliminated_index(p.level)
    g = ("x", elim)
    n, m = p.level
    rest = [("x", i) for i in range(-m, n + 1) if i not in (0, elim)]
    by_exp: dict[int, dict[Key, int | Fraction]] = {}
    for (mono, pm), c in p.items():
        e = 0
        for i, (h, k) in enumerate(mono):
            if h == g:
                e = k
                mono = mono[:i] + mono[i + 1:]
                break
        by_exp.setdefault(e, {})[(mono, pm)] = c
    if not by_exp:
        return p
    top = max(by_exp)
    acc: dict[Key, int | Fraction] = dict(by_exp.get(top, {}))
    for e in range(top - 1, -1, -1):
        # acc <- acc * (1 - sum(rest)) + c_e
        nxt: dict[Key, int | Fraction] = dict(acc)
        for (mono, pm), c in acc.items():
            for h in rest:
                k = (mono_mul(mono, ((h, 1),)), pm)
                nxt[k] = nxt.get(k, 0) - c
        for k, c in by_exp.get(e, {}).items():
            nxt[k] = nxt.get(k, 0) + c
        acc = {k: v for k, v in nxt.items() if v != 0}
    return NatPoly._make({k: _norm(v) for k, v in acc.items()}, p.level)


def simplex_relation(n: int, m: int) -> NatPoly:
    """sum_i x_i - 1 over the truncation."""
    terms: dict[Key, int] = {(ONE_M, ONE_P): -1}
    for i in range(-m, n + 1):
        if i:
            terms[(((("x", i), 1),), ONE_P)] = 1
    return NatPoly._make(terms, (n, m))


def grading(p: Poly) -> int | None:
    return p.degree()
