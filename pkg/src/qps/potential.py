"""Torus-periodic sampling functions and localized variations.

A potential is a 1-periodic C^3 function V together with its first three
derivatives (supplied analytically, never by internal differentiation)
and regularity metadata: the count m0 of monotonicity intervals, a Morse
constant c with |V'| + |V''| >= 2c, the minimal slope C0 away from
critical points, and C1 = max(|V'| + |V''|).

A variation is a sum of T bumps centered at m/T, each carrying a
quadratic jet (eta_m, xi_m, theta_m) bounded by delta <= T**-5 and cut
off smoothly inside radius 1/(2T):

    v_m(u) = (eta_m + xi_m*u + theta_m*u**2/2) * chi(u)

with chi a C^3 two-point Hermite step that is 1 on [0, 1/(4T)] and 0
beyond 1/(2T).  The induced cubic remainder (v_m - jet)/u**3 then
vanishes near 0, equals -u**-3 * jet outside the support, and its
x-derivatives through order 3 stay O(1/T) for small enough delta.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import QpsError
from .torus import wrap01

__all__ = [
    "PotentialSpec",
    "CutoffFunction",
    "VariationSpec",
    "potential_preset",
    "eval_variation",
    "implied_remainder",
    "verify_variation_derivative_bounds",
    "perturbed_potential",
]

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# potentials


@dataclass(frozen=True)
class PotentialSpec:
    """A 1-periodic potential with analytic derivatives and metadata.

    eval/deriv1/deriv2/deriv3 accept floats or ndarrays (vectorized).
    morse_c may be 0 for degenerate potentials (e.g. V == 0); operations
    that rely on the Morse condition check `morse_c > 0` themselves.
    """

    eval: Callable
    deriv1: Callable
    deriv2: Callable
    deriv3: Callable
    m0: int
    morse_c: float
    bound_C0: float
    bound_C1: float
    name: str = "custom"

    def __call__(self, x):
        return self.eval(wrap01(x))

    def range_interval(self, grid_n: int = 4096):
        """[min V, max V] estimated on a grid."""
        g = np.arange(grid_n) / grid_n
        v = self.eval(g)
        return float(np.min(v)), float(np.max(v))

    def validate(self, grid_n: int = 1024, rel_tol: float = 1e-6) -> dict:
        """Cross-check declared derivatives against central differences.

        Returns a report dict; raises nothing.  deriv1 is compared with
        differences of eval, deriv2 with differences of deriv1, on a
        grid_n-point grid at relative tolerance rel_tol; the Morse bound
        is re-checked on a 4096-point grid.
        """
        g = np.arange(grid_n) / grid_n
        h = 1.0 / grid_n

        def d5(fun):  # 5-point central difference, O(h^4)
            return (-fun(wrap01(g + 2 * h)) + 8 * fun(wrap01(g + h))
                    - 8 * fun(wrap01(g - h)) + fun(wrap01(g - 2 * h))) / (12 * h)

        fd1 = d5(self.eval)
        fd2 = d5(self.deriv1)
        d1 = self.deriv1(g)
        d2 = self.deriv2(g)
        scale1 = max(1.0, float(np.max(np.abs(d1))))
        scale2 = max(1.0, float(np.max(np.abs(d2))))
        err1 = float(np.max(np.abs(fd1 - d1))) / scale1
        err2 = float(np.max(np.abs(fd2 - d2))) / scale2
        gg = np.arange(4096) / 4096
        morse_min = float(np.min(np.abs(self.deriv1(gg)) + np.abs(self.deriv2(gg))))
        return {
            "deriv1_rel_err": err1,
            "deriv2_rel_err": err2,
            "deriv_consistent": bool(err1 <= rel_tol and err2 <= rel_tol),
            "morse_min": morse_min,
            "morse_ok": bool(self.morse_c <= 0.0 or morse_min >= 2 * self.morse_c * (1 - 1e-9)),
        }


def _estimate_metadata(f, d1, d2, grid_n: int = 4096):
    """Grid estimates of (m0, morse_c, C0, C1) for a periodic potential."""
    g = np.arange(grid_n) / grid_n
    v1 = d1(g)
    v2 = d2(g)
    s = np.sign(v1)
    s[s == 0] = 1.0
    m0 = int(np.count_nonzero(s != np.roll(s, 1)))
    morse_c = 0.5 * float(np.min(np.abs(v1) + np.abs(v2)))
    c1 = float(np.max(np.abs(v1) + np.abs(v2)))
    # critical points: sign changes of V', refined by bisection
    crit = []
    idx = np.nonzero(s != np.roll(s, -1))[0]
    for i in idx:
        lo, hi = g[i], g[i] + 1.0 / grid_n
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if np.sign(d1(wrap01(mid))) == np.sign(d1(wrap01(lo))):
                lo = mid
            else:
                hi = mid
        crit.append(wrap01(0.5 * (lo + hi)))
    if not crit:
        c0 = float(np.min(np.abs(v1)))
    else:
        crit_arr = np.array(sorted(crit))
        gaps = np.diff(np.concatenate([crit_arr, [crit_arr[0] + 1.0]]))
        radius = min(0.1, 0.45 * float(np.min(gaps)))
        dist = np.min(
            np.minimum(np.abs(g[:, None] - crit_arr[None, :] % 1.0),
                       1.0 - np.abs(g[:, None] - crit_arr[None, :] % 1.0)),
            axis=1,
        )
        off = dist >= radius
        c0 = float(np.min(np.abs(v1[off]))) if np.any(off) else 0.0
    return m0, morse_c, c0, c1


def potential_preset(name: str, coeffs=None) -> PotentialSpec:
    """Named sampling functions.

    "cos"       V(x) = 2 cos 2 pi x
    "two-wave"  V(x) = cos 2 pi x + (1/2) cos 4 pi x
    "coscoeff"  V(x) = sum_k coeffs[k-1] cos(2 pi k x); empty list gives V == 0
    """
    if name == "cos":
        coeffs = [2.0]
    elif name == "two-wave":
        coeffs = [1.0, 0.5]
    elif name == "coscoeff":
        coeffs = [float(c) for c in (coeffs or [])]
    else:
        raise QpsError(f"unknown potential preset {name!r}")
    c = np.asarray(coeffs, dtype=float)
    k = np.arange(1, len(c) + 1)

    def f(x, c=c, k=k):
        x = np.asarray(x, dtype=float)
        if c.size == 0:
            return np.zeros_like(x)
        return np.cos(TWO_PI * np.multiply.outer(x, k)) @ c

    def f1(x, c=c, k=k):
        x = np.asarray(x, dtype=float)
        if c.size == 0:
            return np.zeros_like(x)
        return -np.sin(TWO_PI * np.multiply.outer(x, k)) @ (TWO_PI * k * c)

    def f2(x, c=c, k=k):
        x = np.asarray(x, dtype=float)
        if c.size == 0:
            return np.zeros_like(x)
        return -np.cos(TWO_PI * np.multiply.outer(x, k)) @ ((TWO_PI * k) ** 2 * c)

    def f3(x, c=c, k=k):
        x = np.asarray(x, dtype=float)
        if c.size == 0:
            return np.zeros_like(x)
        return np.sin(TWO_PI * np.multiply.outer(x, k)) @ ((TWO_PI * k) ** 3 * c)

    if c.size == 0 or np.all(c == 0.0):
        return PotentialSpec(f, f1, f2, f3, m0=0, morse_c=0.0,
                             bound_C0=0.0, bound_C1=0.0, name=name)
    m0, morse_c, c0, c1 = _estimate_metadata(f, f1, f2)
    return PotentialSpec(f, f1, f2, f3, m0=m0, morse_c=morse_c,
                         bound_C0=c0, bound_C1=c1, name=name)


# ---------------------------------------------------------------------------
# cutoff and variations


# C^3 step s: [0,1] -> [0,1] with s(0)=0, s(1)=1 and vanishing first three
# derivatives at both ends (degree-7 two-point Hermite interpolant).
_S = np.array([0.0, 0.0, 0.0, 0.0, 35.0, -84.0, 70.0, -20.0])
_S1 = np.polynomial.polynomial.polyder(_S, 1)
_S2 = np.polynomial.polynomial.polyder(_S, 2)
_S3 = np.polynomial.polynomial.polyder(_S, 3)


@dataclass(frozen=True)
class CutoffFunction:
    """Even C^3 cutoff: 1 on [0, inner_radius], 0 beyond outer_radius.

    Between the radii the profile is 1 - s(t) with the degree-7 Hermite
    step s, so all derivatives through order 3 are continuous across both
    junctions.
    """

    inner_radius: float
    outer_radius: float

    @staticmethod
    def for_bump_count(T: int) -> "CutoffFunction":
        return CutoffFunction(1.0 / (4 * T), 1.0 / (2 * T))

    def _t(self, ax):
        w = self.outer_radius - self.inner_radius
        return np.clip((ax - self.inner_radius) / w, 0.0, 1.0), w

    def value(self, x):
        ax = np.abs(np.asarray(x, dtype=float))
        t, _ = self._t(ax)
        return 1.0 - np.polynomial.polynomial.polyval(t, _S)

    __call__ = value

    def deriv(self, x, order: int):
        if order == 0:
            return self.value(x)
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        t, w = self._t(ax)
        inside = (ax > self.inner_radius) & (ax < self.outer_radius)
        sgn = np.where(x >= 0, 1.0, -1.0)
        coef = {1: _S1, 2: _S2, 3: _S3}[order]
        out = -np.polynomial.polynomial.polyval(t, coef) / w**order
        if order % 2 == 1:
            out = out * sgn
        return np.where(inside, out, 0.0)


@dataclass(frozen=True)
class VariationSpec:
    """T localized bumps with jets (eta, xi, theta) bounded by delta.

    Bump m (1-based) is centered at m/T; index T wraps to 0.  Construction
    enforces delta <= T**-5 and all jet entries within [-delta, delta].
    """

    T: int
    delta: float
    eta: np.ndarray
    xi: np.ndarray
    theta: np.ndarray
    cutoff: CutoffFunction = field(default=None)

    def __post_init__(self):
        if self.T < 1:
            raise QpsError("variation needs T >= 1")
        if not (0 < self.delta <= self.T ** -5.0):
            raise QpsError(
                f"delta={self.delta} violates delta <= T^-5 = {self.T**-5.0:g}")
        for nm in ("eta", "xi", "theta"):
            arr = np.asarray(getattr(self, nm), dtype=float)
            if arr.shape != (self.T,):
                raise QpsError(f"{nm} must have length T={self.T}")
            if np.any(np.abs(arr) > self.delta * (1 + 1e-12)):
                raise QpsError(f"|{nm}| exceeds delta")
            object.__setattr__(self, nm, arr)
        if self.cutoff is None:
            object.__setattr__(self, "cutoff", CutoffFunction.for_bump_count(self.T))

    @staticmethod
    def zero(T: int, delta: float) -> "VariationSpec":
        z = np.zeros(T)
        return VariationSpec(T, delta, z, z.copy(), z.copy())

    @staticmethod
    def random(T: int, delta: float, rng) -> "VariationSpec":
        return VariationSpec(
            T, delta,
            rng.uniform(-delta, delta, T),
            rng.uniform(-delta, delta, T),
            rng.uniform(-delta, delta, T),
        )

    def _bump_data(self, x):
        """Displacement u from the covering bump center and its jet index."""
        x = wrap01(np.asarray(x, dtype=float))
        m = np.round(x * self.T).astype(int)  # covering center, 0..T
        u = x - m / self.T
        idx = (m - 1) % self.T  # center m/T carries jet index m (1-based)
        return u, idx

    def jet(self, u, idx):
        return (self.eta[idx] + self.xi[idx] * u + 0.5 * self.theta[idx] * u * u)

    def jet_d1(self, u, idx):
        return self.xi[idx] + self.theta[idx] * u

    def jet_d2(self, u, idx):
        return self.theta[idx] * np.ones_like(u)


def eval_variation(spec: VariationSpec, x):
    """W(x) = sum_m v_m(x - m/T); exactly 0 outside the bump supports."""
    u, idx = spec._bump_data(x)
    return spec.jet(u, idx) * spec.cutoff.value(u)


def variation_deriv(spec: VariationSpec, x, order: int):
    """d^order W / dx^order, analytic (Leibniz over jet * cutoff)."""
    u, idx = spec._bump_data(x)
    chi = [spec.cutoff.deriv(u, k) for k in range(order + 1)]
    p = spec.jet(u, idx)
    p1 = spec.jet_d1(u, idx)
    p2 = spec.jet_d2(u, idx)
    if order == 0:
        return p * chi[0]
    if order == 1:
        return p1 * chi[0] + p * chi[1]
    if order == 2:
        return p2 * chi[0] + 2 * p1 * chi[1] + p * chi[2]
    if order == 3:
        return 3 * p2 * chi[1] + 3 * p1 * chi[2] + p * chi[3]
    raise QpsError("variation derivatives available through order 3")


def implied_remainder(spec: VariationSpec, m: int, x):
    """The cubic-remainder factor R_m(x) = (v_m(x) - jet_m(x)) / x**3.

    Vanishes for |x| <= inner_radius, equals -x**-3 * jet_m(x) for
    |x| >= outer_radius.  x = 0 is rejected (R_m is defined off 0).
    """
    if not (1 <= m <= spec.T):
        raise QpsError(f"bump index m={m} outside 1..T")
    x = np.asarray(x, dtype=float)
    if np.any(x == 0.0):
        raise QpsError("implied_remainder: x = 0 rejected")
    idx = m - 1
    p = spec.eta[idx] + spec.xi[idx] * x + 0.5 * spec.theta[idx] * x * x
    return p * (spec.cutoff.value(x) - 1.0) / x**3


def verify_variation_derivative_bounds(spec: VariationSpec, grid_n: int = 4096,
                                       threshold_const: float = 64.0) -> dict:
    """Finite-difference audit of |d^a R_m| <= threshold_const / T, a = 0..3.

    The hidden constant in the O(1/T) remainder bound is pinned to
    threshold_const (default 64).  R_m is sampled on a uniform grid over
    [-1/2, 1/2] minus a small hole at 0 (where R_m == 0 anyway), and
    derivatives are taken by central differences with 5-point stencils.
    """
    if grid_n < 1000:
        raise QpsError("grid_n >= 1000 required")
    h = 1.0 / grid_n
    x = (np.arange(grid_n) - grid_n // 2) * h
    x = x[np.abs(x) > 4 * h]  # avoid the excluded point 0 and its stencil
    worst = np.zeros(4)
    for m in range(1, spec.T + 1):
        r = {}
        for k in (-2, -1, 0, 1, 2):
            r[k] = implied_remainder(spec, m, x + k * h)
        d0 = np.abs(r[0])
        d1 = np.abs(r[1] - r[-1]) / (2 * h)
        d2 = np.abs(r[1] - 2 * r[0] + r[-1]) / h**2
        d3 = np.abs(-r[-2] + 2 * r[-1] - 2 * r[1] + r[2]) / (2 * h**3)
        worst = np.maximum(worst, [d0.max(), d1.max(), d2.max(), d3.max()])
    ratio = worst * spec.T  # ratio of each max to 1/T
    return {
        "max_abs_by_order": worst.tolist(),
        "ratio_to_1_over_T": ratio.tolist(),
        "threshold_const": threshold_const,
        "passed": bool(np.max(worst) <= threshold_const / spec.T),
    }


def perturbed_potential(base: PotentialSpec, variations) -> PotentialSpec:
    """base + sum of variations, with metadata re-estimated on a grid.

    Fails if the perturbations destroyed the Morse condition of a Morse
    base (re-estimated morse_c <= 0).
    """
    variations = list(variations)
    if not variations:
        return base

    def mk(order):
        if order == 0:
            def f(x):
                x = wrap01(np.asarray(x, dtype=float))
                out = base.eval(x)
                for w in variations:
                    out = out + eval_variation(w, x)
                return out
            return f

        bderiv = {1: base.deriv1, 2: base.deriv2, 3: base.deriv3}[order]

        def f(x, bd=bderiv, order=order):
            x = wrap01(np.asarray(x, dtype=float))
            out = bd(x)
            for w in variations:
                out = out + variation_deriv(w, x, order)
            return out
        return f

    f, f1, f2, f3 = mk(0), mk(1), mk(2), mk(3)
    m0, morse_c, c0, c1 = _estimate_metadata(f, f1, f2)
    if base.morse_c > 0 and morse_c <= 0.0:
        raise QpsError("perturbation destroyed the Morse condition")
    return PotentialSpec(f, f1, f2, f3, m0=m0, morse_c=morse_c,
                         bound_C0=c0, bound_C1=c1,
                         name=base.name + "+var")
