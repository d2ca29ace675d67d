"""Points on the unit torus and mod-1 helpers."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["TorusPoint", "wrap01", "torus_dist"]


def wrap01(x):
    """Reduce scalars or arrays mod 1 into [0, 1)."""
    return np.mod(x, 1.0)


def torus_dist(a, b):
    """Distance on the circle: min(|a-b| mod 1, 1 - |a-b| mod 1)."""
    d = np.mod(np.asarray(a) - np.asarray(b), 1.0)
    return np.minimum(d, 1.0 - d)


@dataclass(frozen=True)
class TorusPoint:
    """A point of the unit torus; all arithmetic wraps mod 1.

    value is always kept in [0, 1).  Most numeric kernels take plain
    floats (reduced with wrap01); this type is for call sites where the
    wrap-around contract should be explicit.
    """

    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", float(np.mod(self.value, 1.0)))

    def __add__(self, other) -> "TorusPoint":
        return TorusPoint(self.value + _val(other))

    __radd__ = __add__

    def __sub__(self, other) -> "TorusPoint":
        return TorusPoint(self.value - _val(other))

    def shift(self, n: int, omega) -> "TorusPoint":
        """The orbit point x + n*omega."""
        return TorusPoint(self.value + n * _val(omega))

    def dist(self, other) -> float:
        return float(torus_dist(self.value, _val(other)))

    def __float__(self) -> float:
        return self.value


def _val(x) -> float:
    return x.value if isinstance(x, TorusPoint) else float(x)
