"""Numeric evaluation on finitely supported points of the Thoma simplex.

Every Q-transform is a finite atomic sum evaluated per atom in signed
log-space, so arguments like e^{C t} with C = 1e5 never overflow.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .signedlog import NEG_INF, SignedLog, signed_logsumexp, signed_sum

EPS_VAL = 1e-12
MULTIPLICITY_TOL = 1e-9
OMEGA0_TOL = 1e-9


class PointError(ValueError):
    """Invalid Thoma-simplex point."""


class PreconditionError(ValueError):
    pass


class CoincidentAtomsError(PreconditionError):
    pass


# -- points and measures ---------------------------------------------------

@dataclass(frozen=True)
class ThomaPoint:
    alpha: tuple[float, ...]
    beta: tuple[float, ...]
    gamma: float

    @property
    def alpha1(self) -> float:
        return self.alpha[0] if self.alpha else 0.0

    @property
    def beta1(self) -> float:
        return self.beta[0] if self.beta else 0.0

    def in_omega0(self, tol: float = OMEGA0_TOL) -> bool:
        return self.gamma <= tol

    def natural(self) -> dict[int, float]:
        """Natural coordinates x_i: alpha_i for i > 0, beta_{-i} for i < 0."""
        out = {i + 1: a for i, a in enumerate(self.alpha)}
        out.update({-(j + 1): b for j, b in enumerate(self.beta)})
        return out

    def x(self, i: int) -> float:
        if i > 0:
            return self.alpha[i - 1] if i <= len(self.alpha) else 0.0
        if i < 0:
            return self.beta[-i - 1] if -i <= len(self.beta) else 0.0
        raise PointError("x_0 is not a coordinate")

    def shifted(self, n: int, m: int) -> ThomaPoint:
        """Drop the first n alphas and m betas; their mass moves to the atom at 0."""
        if n < 0 or m < 0:
            raise PointError("shift counts must be >= 0")
        dropped = sum(self.alpha[:n]) + sum(self.beta[:m])
        return ThomaPoint(self.alpha[n:], self.beta[m:], self.gamma + dropped)

    def to_json(self) -> dict:
        return {"alpha": list(self.alpha), "beta": list(self.beta)}


def make_point(alpha: Iterable[float], beta: Iterable[float] = ()) -> ThomaPoint:
    """Validated point; only the gamma rounding slack is repaired."""
    a = tuple(float(v) for v in alpha)
    b = tuple(float(v) for v in beta)
    for name, seq in (("alpha", a), ("beta", b)):
        for v in seq:
            if not math.isfinite(v) or v < 0 or v > 1:
                raise PointError(f"{name} entries must lie in [0, 1], got {v}")
        for u, v in zip(seq, seq[1:]):
            if v > u:
                raise PointError(f"{name} must be non-increasing: {u} < {v}")
    mass = math.fsum(a) + math.fsum(b)
    if mass > 1 + EPS_VAL:
        raise PointError(f"total mass {mass!r} exceeds 1")
    gamma = max(0.0, 1.0 - mass)
    return ThomaPoint(a, b, gamma)


def point_from_json(d: Mapping) -> ThomaPoint:
    if not isinstance(d, Mapping) or "alpha" not in d:
        raise PointError('point JSON needs "alpha" (and optionally "beta")')
    return make_point(d["alpha"], d.get("beta", ()))


@dataclass(frozen=True)
class ThomaMeasure:
    locations: tuple[float, ...]
    weights: tuple[float, ...]

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.locations, self.weights))

    def total_mass(self) -> float:
        return math.fsum(self.weights)

    def mass_at(self, loc: float, tol: float = 0.0) -> float:
        return math.fsum(w for x, w in self.atoms if abs(x - loc) <= tol)


def thoma_measure(p: ThomaPoint, theta: float) -> ThomaMeasure:
    """Atoms alpha_i (weight alpha_i), -theta*beta_j (weight beta_j), 0 (weight gamma)."""
    if theta <= 0:
        raise ValueError("theta must be positive")
    merged: dict[float, float] = {}
    for a in p.alpha:
        if a > 0:
            merged[a] = merged.get(a, 0.0) + a
    for b in p.beta:
        if b > 0:
            loc = -theta * b
            merged[loc] = merged.get(loc, 0.0) + b
    if p.gamma > 0:
        merged[0.0] = merged.get(0.0, 0.0) + p.gamma
    if not merged:
        merged[0.0] = 1.0
    locs = sorted(merged, reverse=True)
    return ThomaMeasure(tuple(locs), tuple(merged[x] for x in locs))


# -- exponential polynomials ------------------------------------------------

class ExpPoly:
    """Finite sum of c * t^k * e^{C t}, keyed by (k, C)."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[tuple[int, float], float] | None = None):
        clean: dict[tuple[int, float], float] = {}
        for (k, c_exp), c in (terms or {}).items():
            k = int(k)
            if k < 0:
                raise ValueError("t-exponent must be >= 0")
            key = (k, float(c_exp) + 0.0)
            v = clean.get(key, 0.0) + float(c)
            if v == 0:
                clean.pop(key, None)
            else:
                clean[key] = v
        self._terms = dict(sorted(clean.items()))

    @classmethod
    def term(cls, k: int = 0, C: float = 0.0, c: float = 1.0) -> ExpPoly:
        return cls({(k, C): c})

    @classmethod
    def poly_times_exp(cls, coeffs: Sequence[float], C: float) -> ExpPoly:
        """(sum_k coeffs[k] t^k) e^{C t}."""
        return cls({(k, C): c for k, c in enumerate(coeffs) if c})

    @property
    def terms(self) -> dict[tuple[int, float], float]:
        return dict(self._terms)

    def __add__(self, other: ExpPoly) -> ExpPoly:
        d = dict(self._terms)
        for k, c in other._terms.items():
            d[k] = d.get(k, 0.0) + c
        return ExpPoly(d)

    def __neg__(self) -> ExpPoly:
        return ExpPoly({k: -c for k, c in self._terms.items()})

    def __sub__(self, other: ExpPoly) -> ExpPoly:
        return self + (-other)

    def __mul__(self, other) -> ExpPoly:
        if isinstance(other, (int, float)):
            return ExpPoly({k: c * other for k, c in self._terms.items()})
        d: dict[tuple[int, float], float] = {}
        for (k1, c1), a in self._terms.items():
            for (k2, c2), b in other._terms.items():
                key = (k1 + k2, c1 + c2)
                d[key] = d.get(key, 0.0) + a * b
        return ExpPoly(d)

    __rmul__ = __mul__

    def __call__(self, t: float) -> float:
        return sum(c * t ** k * math.exp(C * t) for (k, C), c in self._terms.items())

    def __eq__(self, other) -> bool:
        return isinstance(other, ExpPoly) and self._terms == other._terms

    def __repr__(self) -> str:
        return f"ExpPoly({self._terms!r})"


# -- parameters ----------------------------------------------------------------

@dataclass(frozen=True)
class NumParams:
    theta: float = 1.0
    s1: float = 0.0
    s2: float = 1.0
    enforce_admissible: bool = False
    admissible: bool = field(init=False)

    def __post_init__(self):
        if not (self.theta > 0 and math.isfinite(self.theta)):
            raise ValueError("theta must be a positive real")
        for v in (self.s1, self.s2):
            if not math.isfinite(v):
                raise ValueError("s1, s2 must be finite")
        ok = self.s2 > 0
        object.__setattr__(self, "admissible", ok)
        if not ok:
            msg = f"s2 = {self.s2} <= 0 is outside the principal-series range"
            if self.enforce_admissible:
                raise ValueError(msg)
            warnings.warn(msg, stacklevel=3)


# -- Q transforms ------------------------------------------------------------------

def _atoms(p: ThomaPoint, theta: float, level=(0, 0)):
    mu = thoma_measure(p.shifted(*level), theta)
    return np.asarray(mu.locations, dtype=np.float64), np.asarray(mu.weights, dtype=np.float64)


def eval_q(p: ThomaPoint, k: int, theta: float, level=(0, 0)) -> float:
    """Moment coordinate q_k at the (shifted) point; q_0 = 1."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if k == 0:
        return 1.0
    s = p.shifted(*level)
    return math.fsum(a ** (k + 1) for a in s.alpha) + (-theta) ** k * math.fsum(
        b ** (k + 1) for b in s.beta)


def _q_from_atoms(locs: np.ndarray, wts: np.ndarray, phi: ExpPoly) -> SignedLog:
    signs: list[np.ndarray] = []
    logs: list[np.ndarray] = []
    const = 0.0
    logw = np.log(wts)
    abs_l = np.abs(locs)
    with np.errstate(divide="ignore"):
        log_abs = np.log(abs_l)
    sgn_l = np.sign(locs).astype(np.int64)
    for (k, C), c in phi.terms.items():
        if k == 0 and C == 0.0:
            const += c  # Q[1] = 1 exactly
            continue
        if k == 0:
            lg = logw + C * locs
            sg = np.full(locs.shape, 1, dtype=np.int64)
        else:
            nz = locs != 0
            lg = np.where(nz, logw + k * np.where(nz, log_abs, 0.0) + C * locs, NEG_INF)
            sg = np.where(nz, sgn_l ** k, 0)
        sg = sg * (1 if c > 0 else -1)
        lg = lg + math.log(abs(c))
        keep = sg != 0
        signs.append(sg[keep])
        logs.append(lg[keep])
    if const:
        signs.append(np.array([1 if const > 0 else -1]))
        logs.append(np.array([math.log(abs(const))]))
    if not signs:
        return SignedLog.zero()
    return signed_logsumexp(np.concatenate(signs), np.concatenate(logs))


def eval_Q(p: ThomaPoint, phi: ExpPoly, theta: float, level=(0, 0)) -> SignedLog:
    """Q^(N,M)[phi] at ``p``: integral of phi against the (shifted) Thoma measure."""
    locs, wts = _atoms(p, theta, level)
    return _q_from_atoms(locs, wts, phi)


def chi(p: ThomaPoint, C: float, theta: float, level=(0, 0)) -> float:
    """C^{-1} ln(1 + Q[e^{C t}])."""
    if C == 0:
        raise ValueError("C must be nonzero")
    q = eval_Q(p, ExpPoly.term(0, C), theta, level)
    return q.log1p() / C


def _one_plus(x: SignedLog) -> SignedLog:
    return x + SignedLog.one()


def gamma_CD_num(p: ThomaPoint, C: float, D: float, level=(0, 0),
                 params: NumParams | None = None) -> float:
    """Gamma_{C,D}: the double bracket at e^{Ct}, e^{Dt} over CD(1+Q[e^{Ct}])(1+Q[e^{Dt}])."""
    params = params or NumParams()
    if C == 0 or D == 0:
        raise ValueError("C and D must be nonzero")
    th = params.theta
    locs, wts = _atoms(p, th, level)
    both = ExpPoly.poly_times_exp([1.0, C + D, C * D], C + D)
    fc = ExpPoly.poly_times_exp([1.0, C], C)
    fd = ExpPoly.poly_times_exp([1.0, D], D)
    num = _q_from_atoms(locs, wts, both) - _q_from_atoms(locs, wts, fc) * _q_from_atoms(locs, wts, fd)
    den = (_one_plus(_q_from_atoms(locs, wts, ExpPoly.term(0, C)))
           * _one_plus(_q_from_atoms(locs, wts, ExpPoly.term(0, D))))
    return (num / den).value() / (C * D)


def _parse_gen(v) -> tuple[str, int]:
    if isinstance(v, str):
        s = v.strip()
        if s.startswith("q"):
            return ("q", int(s[1:]))
        if s.startswith("x"):
            return ("x", int(s[1:]))
        raise ValueError(f"unknown generator {v!r}")
    kind, idx = v
    if kind not in ("x", "q"):
        raise ValueError(f"unknown generator kind {kind!r}")
    return (kind, int(idx))


def gamma_C_num(p: ThomaPoint, C: float, v, level=(0, 0),
                params: NumParams | None = None) -> float:
    """Gamma_C(v) for a generator v = ("x", i) or ("q", k) of the level-(N,M) algebra."""
    params = params or NumParams()
    if C == 0:
        raise ValueError("C must be nonzero")
    kind, idx = _parse_gen(v)
    n, m = level
    th = params.theta
    locs, wts = _atoms(p, th, level)
    den = _one_plus(_q_from_atoms(locs, wts, ExpPoly.term(0, C)))
    lead = ExpPoly.poly_times_exp([1.0, C], C)
    if kind == "x":
        if idx == 0 or not (-m <= idx <= n):
            raise ValueError(f"x_{idx} is not a generator at level {level}")
        xi = p.x(idx)
        num = _q_from_atoms(locs, wts, lead - ExpPoly.term(0, 0.0))
        return -xi * (num / den).value() / C
    if idx < 1:
        raise ValueError("moment index must be >= 1")
    qk = eval_q(p, idx, th, level)
    tk = ExpPoly.poly_times_exp([0.0] * idx + [1.0, C], C)
    num = _q_from_atoms(locs, wts, tk) - _q_from_atoms(locs, wts, lead) * SignedLog.from_float(qk)
    return (idx + 1) * (num / den).value() / C


def gamma_C_limit(p: ThomaPoint, v, level, params: NumParams, positive: bool) -> float:
    """Pointwise limit of Gamma_C(v) as C -> +inf (positive) or -inf."""
    kind, idx = _parse_gen(v)
    n, m = level
    th = params.theta
    s = p.shifted(n, m)
    if positive:
        a = s.alpha1
        if kind == "x":
            return -a * p.x(idx)
        return (idx + 1) * (a ** (idx + 1) - a * eval_q(p, idx, th, level))
    b = s.beta1
    if kind == "x":
        return th * b * p.x(idx)
    return -th * (idx + 1) * ((-th) ** idx * b ** (idx + 1) - b * eval_q(p, idx, th, level))


def gamma_CD_limit(p: ThomaPoint, level, params: NumParams, positive: bool) -> float:
    s = p.shifted(*level)
    if positive:
        a = s.alpha1
        return a - a * a
    b = s.beta1
    return params.theta ** 2 * (b - b * b)


# -- the generator applied to chi_C ---------------------------------------------

_BIG = 30.0


def _sl_exp_poly(P: float, u: float, r: float) -> SignedLog:
    """P e^u + r for large u, in signed log-space."""
    return SignedLog.from_float(P) * SignedLog.exp(u) + SignedLog.from_float(r)


def _g(u: float) -> SignedLog:
    """(1+u)e^u - 1."""
    if u > _BIG:
        return _sl_exp_poly(1.0 + u, u, -1.0)
    return SignedLog.from_float((1.0 + u) * math.expm1(u) + u)


def _D(u: float) -> SignedLog:
    """sum_n (n+3)(n+1)u^n/(n+2)! = ((u^2+u-1)e^u + 1)/u^2."""
    if abs(u) < 1e-2:
        s, term = 0.0, 1.0
        for n in range(10):
            s += (n + 3) * (n + 1) * term / math.factorial(n + 2)
            term *= u
        return SignedLog.from_float(s)
    if u > _BIG:
        return _sl_exp_poly((u * u + u - 1.0) / (u * u), u, 1.0 / (u * u))
    return SignedLog.from_float(((u * u + u - 1.0) * math.exp(u) + 1.0) / (u * u))


def _R(u: float) -> SignedLog:
    """sum_n (n+3)u^{n+1}/(n+2)! = ((1+u)e^u - 1 - 2u)/u."""
    if abs(u) < 1e-2:
        s, term = 0.0, u
        for n in range(10):
            s += (n + 3) * term / math.factorial(n + 2)
            term *= u
        return SignedLog.from_float(s)
    if u > _BIG:
        return _sl_exp_poly((1.0 + u) / u, u, -(1.0 + 2.0 * u) / u)
    return SignedLog.from_float(((1.0 + u) * math.expm1(u) - u) / u)


def _F(u: float, C: float, prm: NumParams) -> SignedLog:
    """Closed form of the first-order series at u = C t, divided by C."""
    th, s1, s2 = prm.theta, prm.s1, prm.s2
    P = (1 - th) * (u + 2) + s1 - (u * (u + 2) + (s2 / th) * (1 + u)) / C
    tail = s2 / (th * C)
    if u > _BIG:
        return _sl_exp_poly(P + s1 / u, u, tail - s1 / u)
    e1 = 1.0 if u == 0 else math.expm1(u) / u
    return SignedLog.from_float(P * math.exp(u) + s1 * e1 + tail)


def _check_top(p: ThomaPoint, theta: float) -> None:
    if not p.alpha or p.alpha1 <= 0:
        raise PreconditionError("the limit needs alpha_1 > 0")
    if len(p.alpha) > 1 and p.alpha[0] - p.alpha[1] < MULTIPLICITY_TOL:
        raise CoincidentAtomsError("coinciding top atoms: alpha_1 = alpha_2")


def _check_distinct(p: ThomaPoint, theta: float) -> None:
    _check_top(p, theta)
    for seq, name in ((p.alpha, "alpha"), (p.beta, "beta")):
        for u, v in zip(seq, seq[1:]):
            if u - v < MULTIPLICITY_TOL and v > 0:
                raise CoincidentAtomsError(f"coinciding {name} coordinates {u}, {v}")


def a_chi_terms(p: ThomaPoint, C: float, params: NumParams) -> dict[str, float]:
    """The four pieces of A chi_C at finite C, each as a float."""
    if C == 0:
        raise ValueError("C must be nonzero")
    _check_distinct(p, params.theta)
    if not p.in_omega0():
        raise PreconditionError(f"point not in Omega_0 (gamma = {p.gamma})")
    th = params.theta
    mu = thoma_measure(p, th)
    locs, wts = mu.locations, mu.weights
    us = [C * a for a in locs]
    E = _one_plus(signed_sum(SignedLog.from_float(w) * SignedLog.exp(u) for w, u in zip(wts, us)))
    gs = [_g(u) for u in us]
    Qg = signed_sum(SignedLog.from_float(w) * g for w, g in zip(wts, gs))
    Qg2 = signed_sum(SignedLog.from_float(w) * g * g for w, g in zip(wts, gs))
    QF = signed_sum(SignedLog.from_float(w) * _F(u, C, params) for w, u in zip(wts, us))
    E2 = E * E
    t1 = -(Qg2 / E2).value() / C
    t2 = (Qg * Qg / E2).value() / C
    t3 = (QF / E).value()
    pieces = []
    Rs = [_R(u) for u in us]
    for i, (a, wa) in enumerate(zip(locs, wts)):
        for j, (b, wb) in enumerate(zip(locs, wts)):
            ww = SignedLog.from_float(wa * wb)
            if i == j or abs(us[i] - us[j]) < 1e-9 * max(1.0, abs(us[i])):
                s = _D(0.5 * (us[i] + us[j])) * SignedLog.from_float(C)
            else:
                s = (Rs[i] - Rs[j]) / SignedLog.from_float(a - b)
            pieces.append(ww * s)
    t4 = th * (signed_sum(pieces) / E).value()
    return {"term1": t1, "term2": t2, "term3": t3, "term4": t4}


def a_chi_num(p: ThomaPoint, C: float, params: NumParams) -> float:
    """A chi_C at finite C via the four closed-form terms."""
    t = a_chi_terms(p, C, params)
    return math.fsum(t.values())


def nat_limit_alpha1(p: ThomaPoint, params: NumParams) -> float:
    """-theta + s1 - s2 alpha_1 / theta + 2 theta sum_{i != 1} x_i / (alpha_1 - xt_i)."""
    th = params.theta
    if not p.alpha:
        raise PreconditionError("the limit needs alpha_1")
    a1 = p.alpha[0]
    acc = []
    for a in p.alpha[1:]:
        if a1 == a:
            raise CoincidentAtomsError("alpha_1 coincides with another coordinate")
        acc.append(a / (a1 - a))
    for b in p.beta:
        if a1 == -th * b:
            raise CoincidentAtomsError("alpha_1 coincides with another coordinate")
        acc.append(b / (a1 + th * b))
    return -th + params.s1 - params.s2 * a1 / th + 2 * th * math.fsum(acc)
