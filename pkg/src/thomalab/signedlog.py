"""Reals stored as (sign, log|value|) so that e^{C t} never overflows."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

NEG_INF = -math.inf


@dataclass(frozen=True)
class SignedLog:
    sign: int
    log: float

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or 1, got {self.sign}")
        if math.isnan(self.log):
            raise ValueError("log-magnitude is NaN")
        if (self.sign == 0) != (self.log == NEG_INF):
            raise ValueError("sign 0 must pair with log-magnitude -inf")

    # -- constructors ---------------------------------------------------

    @classmethod
    def zero(cls) -> SignedLog:
        return cls(0, NEG_INF)

    @classmethod
    def one(cls) -> SignedLog:
        return cls(1, 0.0)

    @classmethod
    def from_float(cls, x: float) -> SignedLog:
        if x == 0:
            return cls.zero()
        if not math.isfinite(x):
            raise ValueError(f"cannot represent {x}")
        return cls(1 if x > 0 else -1, math.log(abs(x)))

    @classmethod
    def exp(cls, a: float, sign: int = 1) -> SignedLog:
        """sign * e^a."""
        return cls(sign, float(a)) if sign else cls.zero()

    # -- queries ---------------------------------------------------------

    def is_zero(self) -> bool:
        return self.sign == 0

    def value(self) -> float:
        """Plain float; overflows to +-inf when the magnitude exceeds the range."""
        if self.sign == 0:
            return 0.0
        if self.log > 709.78:
            return self.sign * math.inf
        return self.sign * math.exp(self.log)

    def __float__(self) -> float:
        return self.value()

    # -- arithmetic -----------------------------------------------------

    def __neg__(self) -> SignedLog:
        return SignedLog(-self.sign, self.log)

    def __abs__(self) -> SignedLog:
        return SignedLog(abs(self.sign), self.log)

    def __mul__(self, other) -> SignedLog:
        other = _lift(other)
        if self.sign == 0 or other.sign == 0:
            return SignedLog.zero()
        return SignedLog(self.sign * other.sign, self.log + other.log)

    __rmul__ = __mul__

    def __truediv__(self, other) -> SignedLog:
        other = _lift(other)
        if other.sign == 0:
            raise ZeroDivisionError("SignedLog division by zero")
        if self.sign == 0:
            return SignedLog.zero()
        return SignedLog(self.sign * other.sign, self.log - other.log)

    def __rtruediv__(self, other) -> SignedLog:
        return _lift(other) / self

    def __add__(self, other) -> SignedLog:
        return signed_sum([self, _lift(other)])

    __radd__ = __add__

    def __sub__(self, other) -> SignedLog:
        return signed_sum([self, -_lift(other)])

    def __rsub__(self, other) -> SignedLog:
        return signed_sum([_lift(other), -self])

    def log1p(self) -> float:
        """ln(1 + x) for x > -1."""
        if self.sign == 0:
            return 0.0
        if self.sign > 0:
            return float(np.logaddexp(0.0, self.log))
        if self.log >= 0:
            raise ValueError("ln(1 + x) undefined for x <= -1")
        return math.log1p(-math.exp(self.log))

    def __repr__(self) -> str:
        return f"SignedLog(sign={self.sign}, log={self.log!r})"


def _lift(x) -> SignedLog:
    if isinstance(x, SignedLog):
        return x
    return SignedLog.from_float(float(x))


def _logsumexp(logs: np.ndarray) -> float:
    if logs.size == 0:
        return NEG_INF
    m = float(np.max(logs))
    if m == NEG_INF:
        return NEG_INF
    return m + math.log(float(np.sum(np.exp(logs - m))))


def signed_logsumexp(signs, logs) -> SignedLog:
    """Sum of sign_i * e^{log_i}, resolving cancellation between the two signs."""
    signs = np.asarray(signs, dtype=np.int64)
    logs = np.asarray(logs, dtype=np.float64)
    lp = _logsumexp(logs[signs > 0])
    ln = _logsumexp(logs[signs < 0])
    if lp == ln:
        return SignedLog.zero()
    if lp > ln:
        return SignedLog(1, lp + math.log1p(-math.exp(ln - lp)))
    return SignedLog(-1, ln + math.log1p(-math.exp(lp - ln)))


def signed_sum(items: Iterable[SignedLog]) -> SignedLog:
    items = [x for x in items if x.sign != 0]
    if not items:
        return SignedLog.zero()
    if len(items) == 1:
        return items[0]
    return signed_logsumexp([x.sign for x in items], [x.log for x in items])
