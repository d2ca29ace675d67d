"""Quantitative measure estimates, checked numerically.

Implements the implicit-function slab construction (columns of a
rectangle where a y-monotone function is bounded away from zero),
sublevel-set measure bounds for functions with second/third-derivative
control, a Monte Carlo estimator for the frequency measure of double
resonances, and the hyperplane-slab volume bound on a cube.

All "up to a constant" bounds carry an explicit documented constant
(default 8) stored in each report; Monte Carlo uses the counter-based
Philox generator with a user seed and reports 3-sigma binomial margins.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import HypothesisError, QpsError
from .sets import SimpleSet1D, SimpleSet2D

__all__ = [
    "implicit_slab",
    "sublevel_measure_check",
    "double_resonance_measure",
    "hyperplane_slab_check",
]

DEFAULT_CONST = 8.0


def implicit_slab(f, x_range, y_range, mu: float, kappa: float, rho: float,
                  m: int, grid_n: int = 96) -> tuple[SimpleSet2D, float]:
    """Column decomposition where |f| >= rho, for y-monotone f.

    f(x, y) must satisfy df/dy >= mu > 0 and |df/dx| <= kappa on
    [x_range] x [y_range] (verified on a grid_n x grid_n grid; a
    monotonicity violation raises HypothesisError).  The domain is split
    into m columns; in each, the crossing heights y+-(x_k) at the column
    midpoint are found by bisection and padded by the drift bound
    kappa * width / (2 mu), leaving a 2m-rectangle set D0 with
    |f| >= rho everywhere and uncovered measure at most

        (b - a) * (2 rho / mu + (b - a) * kappa / (m * mu)).
    """
    a, b = map(float, x_range)
    c, d = map(float, y_range)
    if m < 1:
        raise QpsError("implicit_slab needs m >= 1")
    gx = np.linspace(a, b, grid_n)
    gy = np.linspace(c, d, grid_n)
    X, Y = np.meshgrid(gx, gy, indexing="ij")
    F = f(X, Y)
    hy = gy[1] - gy[0]
    hx = gx[1] - gx[0]
    dfy = np.diff(F, axis=1) / hy
    if np.any(dfy < 0.5 * mu):
        raise HypothesisError("df/dy >= mu on the grid",
                              detail=f"min grid slope {dfy.min():.4g} < mu/2")
    dfx = np.abs(np.diff(F, axis=0) / hx)
    if np.any(dfx > 2.0 * kappa):
        raise HypothesisError("|df/dx| <= kappa on the grid",
                              detail=f"max grid drift {dfx.max():.4g} > 2*kappa")

    def crossing(xk: float, level: float) -> float:
        """y with f(xk, y) = level (f increasing in y), clipped to [c, d]."""
        flo = float(f(xk, c))
        fhi = float(f(xk, d))
        if flo >= level:
            return c
        if fhi <= level:
            return d
        lo, hi = c, d
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if float(f(xk, mid)) < level:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    width = (b - a) / m
    margin = kappa * width / (2.0 * mu)
    rects = []
    uncovered = 0.0
    for k in range(m):
        x0 = a + k * width
        x1 = x0 + width
        xk = 0.5 * (x0 + x1)
        y_plus = crossing(xk, rho)  # inf{y : f >= rho}
        y_minus = crossing(xk, -rho)  # sup{y : f <= -rho}
        y1 = min(y_plus + margin, d)
        y2 = max(y_minus - margin, c)
        if y1 < d:
            rects.append((x0, x1, y1, d))
        if y2 > c:
            rects.append((x0, x1, c, y2))
        uncovered += width * max(y1 - y2, 0.0)
    d0 = SimpleSet2D(rects)
    bound = (b - a) * (2 * rho / mu + (b - a) * kappa / (m * mu))
    if uncovered > bound + 1e-9 * (1 + bound):
        raise QpsError(
            f"uncovered measure {uncovered:.6g} exceeds bound {bound:.6g}")
    return d0, uncovered


def _refine_roots(g, lo_grid, hi_grid, iters: int = 50):
    lo = lo_grid.copy()
    hi = hi_grid.copy()
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        neg = np.sign(g(mid)) == np.sign(g(lo))
        lo = np.where(neg, mid, lo)
        hi = np.where(neg, hi, mid)
    return 0.5 * (lo + hi)


def _sublevel_set(f, a: float, b: float, eps: float, grid_n: int) -> SimpleSet1D:
    """{x in [a,b] : |f(x)| <= eps} by grid bracketing + bisection."""
    g = np.linspace(a, b, grid_n + 1)
    vals = np.abs(f(g)) - eps
    inside = vals <= 0
    sign_change = np.nonzero(inside[:-1] != inside[1:])[0]
    crossings = _refine_roots(lambda x: np.abs(f(x)) - eps,
                              g[sign_change], g[sign_change + 1])
    points = np.sort(np.concatenate([crossings,
                                     [a] if inside[0] else [],
                                     [b] if inside[-1] else []]))
    iv = []
    for i in range(0, points.size - 1, 2):
        iv.append((points[i], points[i + 1]))
    return SimpleSet1D(iv) if iv else SimpleSet1D()


def sublevel_measure_check(f, deriv1, deriv2, deriv3, interval, eps: float,
                           C: float, kappa: float | None = None,
                           const: float = DEFAULT_CONST,
                           grid_n: int = 16384) -> dict:
    """mes{|f| <= eps} against the curvature / Morse bounds.

    Two claim forms, chosen by `kappa`:
      kappa None   needs |f''| >= C on the interval (finitely many
                   monotone pieces); claimed bound  const * sqrt(eps/C).
      kappa given  needs |f'| + |f''| >= C and |f''| + |f'''| <= kappa;
                   claimed bound  const * (kappa/C) * sqrt(eps/C) * (b-a).

    Hypotheses are verified on a 4096-point grid; the sublevel measure is
    computed by bracketing + bisection on grid_n points, with a halved-grid
    convergence cross-check.
    """
    a, b = map(float, interval)
    gg = np.linspace(a, b, 4096)
    d1 = np.abs(deriv1(gg))
    d2 = np.abs(deriv2(gg))
    if kappa is None:
        if np.any(d2 < C * (1 - 1e-9)):
            raise HypothesisError("|f''| >= C", detail=f"min {d2.min():.4g}")
        bound = const * math.sqrt(eps / C)
    else:
        if np.any(d1 + d2 < C * (1 - 1e-9)):
            raise HypothesisError("|f'| + |f''| >= C",
                                  detail=f"min {(d1 + d2).min():.4g}")
        d3 = np.abs(deriv3(gg))
        if np.any(d2 + d3 > kappa * (1 + 1e-9)):
            raise HypothesisError("|f''| + |f'''| <= kappa",
                                  detail=f"max {(d2 + d3).max():.4g}")
        bound = const * (kappa / C) * math.sqrt(eps / C) * (b - a)
    if eps == 0.0:
        return {"measured": 0.0, "bound": bound, "const": const,
                "passed": True, "grid_convergence": 0.0}
    sub = _sublevel_set(f, a, b, eps, grid_n)
    sub_coarse = _sublevel_set(f, a, b, eps, grid_n // 2)
    conv = abs(sub.measure - sub_coarse.measure)
    return {
        "measured": sub.measure,
        "bound": bound,
        "const": const,
        "components": sub.complexity,
        "grid_convergence": conv,
        "passed": bool(sub.measure <= bound),
    }


def double_resonance_measure(F1, F2, n1: int, eps: float, samples: int,
                             seed: int, x_range=(0.0, 1.0),
                             omega_range=(0.0, 1.0), x_subgrid: int = 256,
                             vartheta: float = 0.5) -> dict:
    """Monte Carlo measure of frequencies carrying a double resonance.

    Estimates mes{omega : exists x with |F1(x, omega)| <= eps and
    |F2(x + n1*omega mod 1, omega)| <= eps} by sampling omega uniformly
    and scanning x over a subgrid.  F1, F2 must be vectorized callables
    of (x, omega); non-finite values are treated as "not small".  Returns
    the estimate with a 3-sigma binomial margin and the ratio to
    eps**vartheta * (area of the parameter box).
    """
    a1, b1 = map(float, x_range)
    c, d = map(float, omega_range)
    rng = np.random.Generator(np.random.Philox(key=seed))
    omegas = rng.uniform(c, d, size=samples)
    xs = a1 + (b1 - a1) * (np.arange(x_subgrid) + 0.5) / x_subgrid
    hits = 0
    chunk = max(1, int(2e6) // x_subgrid)
    for s0 in range(0, samples, chunk):
        om = omegas[s0:s0 + chunk]
        X = np.broadcast_to(xs[:, None], (x_subgrid, om.size))
        OM = np.broadcast_to(om[None, :], (x_subgrid, om.size))
        g1 = np.abs(F1(X, OM)) <= eps
        g2 = np.abs(F2(np.mod(X + n1 * OM, 1.0), OM)) <= eps
        both = g1 & g2
        hits += int(np.count_nonzero(np.any(both, axis=0)))
    p = hits / samples
    sigma = math.sqrt(max(p * (1 - p), 1.0 / samples) / samples)
    estimate = p * (d - c)
    ref = eps**vartheta * (d - c) * (b1 - a1)
    return {
        "estimate": estimate,
        "three_sigma": 3 * sigma * (d - c),
        "hits": hits,
        "samples": samples,
        "reference_eps_pow": ref,
        "ratio": estimate / ref if ref > 0 else math.inf,
        "vartheta": vartheta,
    }


def hyperplane_slab_check(a_vec, C: float, delta: float, eps: float,
                          samples: int, seed: int) -> dict:
    """Cube fraction within eps of the hyperplane a.xi = C.

    For weights a_j >= 0 summing to 1, the claim is

        (2 delta)^-N mes{xi in [-delta, delta]^N : |a.xi - C| <= eps}
            <= N * eps / delta.

    Monte Carlo with a 3-sigma binomial allowance; `passed` reflects the
    claim at that allowance.
    """
    a = np.asarray(a_vec, dtype=float)
    if np.any(a < 0) or abs(a.sum() - 1.0) > 1e-9:
        raise QpsError("weights must be nonnegative and sum to 1")
    N = a.size
    rng = np.random.Generator(np.random.Philox(key=seed))
    hits = 0
    chunk = max(1, int(4e6) // N)
    done = 0
    while done < samples:
        k = min(chunk, samples - done)
        xi = rng.uniform(-delta, delta, size=(k, N))
        hits += int(np.count_nonzero(np.abs(xi @ a - C) <= eps))
        done += k
    p = hits / samples
    sigma = math.sqrt(max(p * (1 - p), 1.0 / samples) / samples)
    bound = N * eps / delta
    return {
        "fraction": p,
        "three_sigma": 3 * sigma,
        "bound": bound,
        "passed": bool(p <= bound + 3 * sigma),
        "samples": samples,
    }
