"""Sign/log-magnitude arithmetic for determinant-sized quantities.

Dirichlet determinants of an n-site block grow like lam**n and overflow
IEEE doubles beyond n ~ 40 at large coupling, so every determinant,
Green's-function entry, and long matrix product is carried as a sign in
{-1, 0, +1} plus log|value|.  Multiplication adds logs; addition resolves
through the dominant term with log1p, which keeps full relative accuracy
except in exact cancellation (which yields the exact zero element).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

__all__ = ["SignedLog"]


@dataclass(frozen=True)
class SignedLog:
    sign: int  # -1, 0, +1
    log_mag: float  # valid only when sign != 0

    @staticmethod
    def zero() -> "SignedLog":
        return SignedLog(0, float("-inf"))

    @staticmethod
    def one() -> "SignedLog":
        return SignedLog(1, 0.0)

    @staticmethod
    def from_float(x: float) -> "SignedLog":
        if x == 0.0:
            return SignedLog.zero()
        return SignedLog(1 if x > 0 else -1, math.log(abs(x)))

    def to_float(self) -> float:
        """Convert back to a double; overflows to +-inf for huge log_mag."""
        if self.sign == 0:
            return 0.0
        if self.log_mag > 709.0:
            return math.inf * self.sign
        return self.sign * math.exp(self.log_mag)

    @property
    def is_zero(self) -> bool:
        return self.sign == 0

    def __mul__(self, other: "SignedLog") -> "SignedLog":
        if self.sign == 0 or other.sign == 0:
            return SignedLog.zero()
        return SignedLog(self.sign * other.sign, self.log_mag + other.log_mag)

    def __truediv__(self, other: "SignedLog") -> "SignedLog":
        if other.sign == 0:
            raise ZeroDivisionError("SignedLog division by zero")
        if self.sign == 0:
            return SignedLog.zero()
        return SignedLog(self.sign * other.sign, self.log_mag - other.log_mag)

    def __neg__(self) -> "SignedLog":
        return SignedLog(-self.sign, self.log_mag)

    def __add__(self, other: "SignedLog") -> "SignedLog":
        if self.sign == 0:
            return other
        if other.sign == 0:
            return self
        hi, lo = (self, other) if self.log_mag >= other.log_mag else (other, self)
        d = lo.log_mag - hi.log_mag  # <= 0
        if self.sign == other.sign:
            return SignedLog(hi.sign, hi.log_mag + math.log1p(math.exp(d)))
        if d == 0.0:
            return SignedLog.zero()
        return SignedLog(hi.sign, hi.log_mag + math.log1p(-math.exp(d)))

    def __sub__(self, other: "SignedLog") -> "SignedLog":
        return self + (-other)

    def scaled(self, x: float) -> "SignedLog":
        """Multiply by a plain float."""
        return self * SignedLog.from_float(x)

    def abs_log(self) -> float:
        """log|value|; -inf for zero."""
        return self.log_mag if self.sign != 0 else float("-inf")

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        if self.sign == 0:
            return "SignedLog(0)"
        s = "+" if self.sign > 0 else "-"
        return f"SignedLog({s}exp({self.log_mag:.6g}))"
