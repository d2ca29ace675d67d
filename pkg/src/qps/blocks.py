"""Finite-volume blocks of the quasi-periodic operator.

The block on sites [a, b] is the symmetric tridiagonal matrix with
diagonal lam * V(x + n*omega) and off-diagonal entries -1 (zero Dirichlet
boundary conditions).  Its characteristic determinant

    f_[a,b](E) = det(H_[a,b] - E)

obeys the three-term recursion
f_[a,n] = (lam*V(x+n*omega) - E) * f_[a,n-1] - f_[a,n-2]
with f_[a,a-1] = 1 and f_[a,a-2] = 0, and is carried in sign/log form
(it grows like lam**n).  The same recursion drives everything else here:
Sturm counts (inertia of the LDL^T pivots f_k/f_{k-1}), bisection
eigenvalues, Green's functions via the determinant quotient

    (H - E)^{-1}(k, l) = f_[a,k-1](E) * f_[l+1,b](E) / f_[a,b](E),

Poisson reconstruction of solutions from boundary data, and
Hellmann-Feynman eigenvalue derivatives.

Eigenvalues come from bisection on Sturm counts and eigenvectors from
inverse iteration with a pivoted tridiagonal solve; dense eigensolvers
are used only in tests, as oracles.  The *_batched helpers run the same
kernels across whole families of blocks at once (the multiscale driver
and Monte Carlo samplers feed 10^4-size batches).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .errors import DegenerateGapError, QpsError
from .potential import PotentialSpec
from .signedlog import SignedLog
from .torus import wrap01

__all__ = [
    "IndexInterval",
    "HamiltonianBlock",
    "SpectrumResult",
    "det_f",
    "det_f_table",
    "sturm_count",
    "spectrum",
    "green",
    "poisson_reconstruct",
    "eig_derivative",
    "near_eigen_exists",
]

_TINY = 1e-300


@dataclass(frozen=True)
class IndexInterval:
    a: int
    b: int

    def __post_init__(self):
        if self.b < self.a:
            raise QpsError(f"empty index interval [{self.a}, {self.b}]")

    @property
    def length(self) -> int:
        return self.b - self.a + 1

    def sites(self) -> np.ndarray:
        return np.arange(self.a, self.b + 1)


@dataclass(frozen=True)
class HamiltonianBlock:
    """H_[a,b](x, omega) at coupling lam; immutable, pure queries only."""

    interval: IndexInterval
    x: float
    omega: float
    lam: float
    potential: PotentialSpec

    def diagonal(self) -> np.ndarray:
        n = self.interval.sites()
        return self.lam * self.potential.eval(wrap01(self.x + n * self.omega))

    @property
    def n(self) -> int:
        return self.interval.length

    def norm_bound(self) -> float:
        """Upper bound for the spectral norm (Gershgorin)."""
        return float(np.max(np.abs(self.diagonal()))) + 2.0

    def apply(self, v: np.ndarray, diag=None) -> np.ndarray:
        d = self.diagonal() if diag is None else diag
        out = d * v
        out[:-1] -= v[1:]
        out[1:] -= v[:-1]
        return out

    def deriv_diagonal(self, order: int = 1) -> np.ndarray:
        dfun = {1: self.potential.deriv1, 2: self.potential.deriv2}[order]
        n = self.interval.sites()
        return self.lam * dfun(wrap01(self.x + n * self.omega))


def block(a: int, b: int, x, omega, lam, potential) -> HamiltonianBlock:
    return HamiltonianBlock(IndexInterval(a, b), float(x) % 1.0, float(omega) % 1.0,
                            float(lam), potential)


# ---------------------------------------------------------------------------
# determinants


def _det_recursion(diag: np.ndarray, E: float):
    """(sign, log|f|) of det(tridiag(diag) - E) by rescaled recursion."""
    f_prev = 0.0  # f over -1 sites
    f_cur = 1.0  # f over 0 sites
    log_scale = 0.0
    for d in diag:
        f_new = (d - E) * f_cur - f_prev
        f_prev, f_cur = f_cur, f_new
        m = max(abs(f_prev), abs(f_cur))
        if m > 1e100 or (0.0 < m < 1e-100):
            f_prev /= m
            f_cur /= m
            log_scale += math.log(m)
    if f_cur == 0.0:
        return 0, float("-inf")
    return (1 if f_cur > 0 else -1), math.log(abs(f_cur)) + log_scale


def det_f(block: HamiltonianBlock, E: float) -> SignedLog:
    """f_[a,b](E) = det(H_[a,b] - E) in sign/log form."""
    s, lg = _det_recursion(block.diagonal(), float(E))
    return SignedLog(s, lg)


def det_f_table(block: HamiltonianBlock, E: float):
    """All prefix and suffix determinants at E, in sign/log arrays.

    Returns (ps, pl, ss, sl) where (ps[k], pl[k]) encode f over the first
    k sites (f_[a, a+k-1], with k = 0 the empty product 1) and
    (ss[k], sl[k]) encode f over the last k sites (f_[b-k+1, b]).
    """
    d = block.diagonal() - float(E)
    n = d.size

    def one_pass(dd):
        signs = np.empty(n + 1, dtype=np.int8)
        logs = np.empty(n + 1)
        signs[0], logs[0] = 1, 0.0
        f_prev, f_cur, log_scale = 0.0, 1.0, 0.0
        for k in range(n):
            f_new = dd[k] * f_cur - f_prev
            f_prev, f_cur = f_cur, f_new
            m = max(abs(f_prev), abs(f_cur))
            if m > 1e100 or (0.0 < m < 1e-100):
                f_prev /= m
                f_cur /= m
                log_scale += math.log(m)
            if f_cur == 0.0:
                signs[k + 1], logs[k + 1] = 0, float("-inf")
            else:
                signs[k + 1] = 1 if f_cur > 0 else -1
                logs[k + 1] = math.log(abs(f_cur)) + log_scale
        return signs, logs

    ps, pl = one_pass(d)
    ss, sl = one_pass(d[::-1])
    return ps, pl, ss, sl


# ---------------------------------------------------------------------------
# Sturm counts and bisection (batched kernels)


def count_below_batched(diag, E, offdiag_sq=None):
    """Number of eigenvalues strictly below E, via LDL^T pivot signs.

    diag: (..., n); E broadcastable against diag[..., 0]; offdiag_sq the
    squared off-diagonal entries ((n-1,) or broadcastable), default 1.
    """
    diag = np.asarray(diag, dtype=float)
    E = np.asarray(E, dtype=float)
    n = diag.shape[-1]
    q = diag[..., 0] - E
    q = np.where(q == 0.0, -_TINY, q)
    count = (q < 0).astype(np.int64)
    for j in range(1, n):
        b2 = 1.0 if offdiag_sq is None else offdiag_sq[..., j - 1]
        q = diag[..., j] - E - b2 / q
        q = np.where(q == 0.0, -_TINY, q)
        count += q < 0
    return count


def eig_by_index_batched(diag, indices, tol, offdiag_sq=None, pad=2.5):
    """k-th smallest eigenvalue (0-based, per batch row) by bisection.

    diag: (B, n); indices: (B,) ints; returns (B,) eigenvalues with
    absolute tolerance tol.
    """
    diag = np.atleast_2d(np.asarray(diag, dtype=float))
    indices = np.asarray(indices)
    lo = diag.min(axis=-1) - pad - tol
    hi = diag.max(axis=-1) + pad + tol
    target = indices + 1
    for _ in range(200):
        if np.max(hi - lo) <= tol:
            break
        mid = 0.5 * (lo + hi)
        c = count_below_batched(diag, mid, offdiag_sq)
        take_hi = c >= target
        hi = np.where(take_hi, mid, hi)
        lo = np.where(take_hi, lo, mid)
    return 0.5 * (lo + hi)


def tridiag_solve_batched(dl, dd, du, rhs):
    """Solve batched tridiagonal systems with partial pivoting (LU).

    dl, du: (B, n-1) sub/super-diagonals; dd: (B, n); rhs: (B, n).
    Near-singular systems produce large solutions rather than failures,
    which is what inverse iteration wants.
    """
    dl = np.array(dl, dtype=float, copy=True)
    d = np.array(dd, dtype=float, copy=True)
    du = np.array(du, dtype=float, copy=True)
    b = np.array(rhs, dtype=float, copy=True)
    B, n = d.shape
    du2 = np.zeros((B, max(n - 2, 0)))
    swap = np.zeros((B, max(n - 1, 0)), dtype=bool)
    for i in range(n - 1):
        no_swap = np.abs(d[:, i]) >= np.abs(dl[:, i])
        swap[:, i] = ~no_swap
        # no-swap branch
        safe_d = np.where(d[:, i] == 0.0, _TINY, d[:, i])
        fact_ns = dl[:, i] / safe_d
        d_next_ns = d[:, i + 1] - fact_ns * du[:, i]
        # swap branch
        safe_l = np.where(dl[:, i] == 0.0, _TINY, dl[:, i])
        fact_sw = d[:, i] / safe_l
        d_i_sw = dl[:, i]
        temp = du[:, i]
        du_i_sw = d[:, i + 1]
        d_next_sw = temp - fact_sw * d[:, i + 1]
        d[:, i] = np.where(no_swap, d[:, i], d_i_sw)
        du[:, i] = np.where(no_swap, du[:, i], du_i_sw)
        d[:, i + 1] = np.where(no_swap, d_next_ns, d_next_sw)
        dl[:, i] = np.where(no_swap, fact_ns, fact_sw)  # store multiplier
        if i < n - 2:
            du2[:, i] = np.where(no_swap, 0.0, du[:, i + 1])
            du[:, i + 1] = np.where(no_swap, du[:, i + 1], -fact_sw * du[:, i + 1])
    # forward substitution
    for i in range(n - 1):
        bi = b[:, i].copy()
        bn = b[:, i + 1].copy()
        b[:, i] = np.where(swap[:, i], bn, bi)
        b[:, i + 1] = np.where(swap[:, i], bi - dl[:, i] * bn, bn - dl[:, i] * bi)
    # back substitution
    d_safe = np.where(d == 0.0, _TINY, d)
    b[:, n - 1] /= d_safe[:, n - 1]
    if n >= 2:
        b[:, n - 2] = (b[:, n - 2] - du[:, n - 2] * b[:, n - 1]) / d_safe[:, n - 2]
    for i in range(n - 3, -1, -1):
        b[:, i] = (b[:, i] - du[:, i] * b[:, i + 1]
                   - du2[:, i] * b[:, i + 2]) / d_safe[:, i]
    return b


def nearest_eigen_batched(diag, E_ref, tol):
    """Eigenvalue nearest to E_ref per batch row (for local tracking)."""
    diag = np.atleast_2d(np.asarray(diag, dtype=float))
    E_ref = np.asarray(E_ref, dtype=float)
    n = diag.shape[-1]
    c = count_below_batched(diag, E_ref)
    lo_idx = np.clip(c - 1, 0, n - 1)
    hi_idx = np.clip(c, 0, n - 1)
    e_lo = eig_by_index_batched(diag, lo_idx, tol)
    e_hi = eig_by_index_batched(diag, hi_idx, tol)
    take_lo = np.abs(e_lo - E_ref) <= np.abs(e_hi - E_ref)
    return np.where(take_lo, e_lo, e_hi)


def eigenvector_batched(diag, evals, rng=None, iters: int = 3):
    """Inverse iteration for one eigenvector per batch row.

    diag: (B, n) block diagonals (off-diagonals are -1); evals: (B,)
    converged bisection eigenvalues.  Returns (vectors (B, n), residuals
    (B,)).
    """
    diag = np.atleast_2d(np.asarray(diag, dtype=float))
    evals = np.asarray(evals, dtype=float)
    B, n = diag.shape
    if rng is None:
        rng = np.random.Generator(np.random.Philox(key=20260810))
    v = rng.standard_normal((B, n))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    off = -np.ones((B, n - 1))
    shifted = diag - evals[:, None]
    for _ in range(iters):
        v = tridiag_solve_batched(off, shifted, off, v)
        nv = np.linalg.norm(v, axis=1, keepdims=True)
        nv = np.where(nv == 0.0, 1.0, nv)
        v /= nv
    hv = diag * v
    hv[:, :-1] -= v[:, 1:]
    hv[:, 1:] -= v[:, :-1]
    resid = np.linalg.norm(hv - evals[:, None] * v, axis=1)
    return v, resid


# ---------------------------------------------------------------------------
# public per-block operations


def sturm_count(blk: HamiltonianBlock, E: float) -> int:
    """Number of eigenvalues of the block strictly below E."""
    return int(count_below_batched(blk.diagonal(), float(E)))


@dataclass(frozen=True)
class SpectrumResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None  # columns, or None
    residuals: np.ndarray | None
    nonconverged: tuple  # indices whose inverse iteration missed tolerance

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues)
        if ev.size > 1 and not np.all(np.diff(ev) > 0):
            raise QpsError("spectrum not strictly increasing")


def spectrum_tolerance(blk: HamiltonianBlock) -> float:
    vmax = float(np.max(np.abs(blk.diagonal()))) if blk.n else 0.0
    return 1e-10 * (1.0 + vmax)


def spectrum(blk: HamiltonianBlock, want_vectors: bool = False) -> SpectrumResult:
    """All eigenvalues by Sturm bisection; vectors by inverse iteration.

    Eigenvalues converge to absolute tolerance 1e-10 * (1 + max|diag|).
    Eigenvectors are reorthogonalized within near-degenerate clusters;
    pairs whose residual stays above 1e-8 * ||H|| after 50 iterations are
    reported in `nonconverged` rather than raised.
    """
    if blk.n > 10**6:
        raise QpsError("block length above 1e6 not supported")
    d = blk.diagonal()
    n = d.size
    tol = spectrum_tolerance(blk)
    evals = eig_by_index_batched(np.broadcast_to(d, (n, n)), np.arange(n), tol)
    evals = np.sort(evals)
    # nudge exact ties apart (simple spectrum in exact arithmetic)
    for i in range(1, n):
        if evals[i] <= evals[i - 1]:
            evals[i] = np.nextafter(evals[i - 1], np.inf)
    if not want_vectors:
        return SpectrumResult(evals, None, None, ())

    norm_h = blk.norm_bound()
    target = 1e-8 * norm_h
    vecs = np.empty((n, n))
    resid = np.empty(n)
    bad = []
    ab = np.zeros((3, n))
    ab[0, 1:] = -1.0
    ab[2, :-1] = -1.0
    # clusters of near-degenerate eigenvalues share reorthogonalization
    cluster_start = 0
    rng = np.random.Generator(np.random.Philox(key=987654321 + n))
    for k in range(n):
        if k > 0 and evals[k] - evals[k - 1] > 1e3 * tol:
            cluster_start = k
        ab[1] = d - evals[k]
        v = rng.standard_normal(n)
        v /= np.linalg.norm(v)
        ok = False
        for it in range(50):
            v = solve_banded((1, 1), ab, v)
            for j in range(cluster_start, k):
                v -= (vecs[:, j] @ v) * vecs[:, j]
            nv = np.linalg.norm(v)
            if nv == 0.0:
                v = rng.standard_normal(n)
                nv = np.linalg.norm(v)
            v /= nv
            r = np.linalg.norm(blk.apply(v, diag=d) - evals[k] * v)
            if r <= target:
                ok = True
                break
        vecs[:, k] = v
        resid[k] = r
        if not ok:
            bad.append(k)
    return SpectrumResult(evals, vecs, resid, tuple(bad))


def green(blk: HamiltonianBlock, E: float, k: int, l: int) -> SignedLog:
    """(H - E)^{-1}(k, l) as the Cramer quotient of three determinants."""
    a, b = blk.interval.a, blk.interval.b
    if not (a <= k <= b and a <= l <= b):
        raise QpsError("green: site index outside the block")
    if k > l:
        k, l = l, k
    ps, pl, ss, sl = det_f_table(blk, E)
    n = blk.n
    tot = SignedLog(int(ps[n]), float(pl[n]))
    if tot.is_zero:
        raise QpsError("green: E is in the spectrum of the block (f = 0)")
    left = SignedLog(int(ps[k - a]), float(pl[k - a]))
    right = SignedLog(int(ss[b - l]), float(sl[b - l]))
    return left * right / tot


def poisson_reconstruct(blk: HamiltonianBlock, E: float,
                        phi_left: float, phi_right: float, m: int) -> float:
    """phi(m) from boundary data via the resolvent:

        phi(m) = G(m, a) phi(a-1) + G(m, b) phi(b+1)

    valid whenever phi solves the difference equation on [a, b] and E is
    not an eigenvalue of the block.
    """
    a, b = blk.interval.a, blk.interval.b
    out = 0.0
    if phi_left != 0.0:
        out += green(blk, E, m, a).to_float() * phi_left
    if phi_right != 0.0:
        out += green(blk, E, m, b).to_float() * phi_right
    return out


def _eig_with_vector(blk: HamiltonianBlock, k: int):
    d = blk.diagonal()
    n = d.size
    tol = spectrum_tolerance(blk)
    idx = np.array([max(k - 1, 0), k, min(k + 1, n - 1)])
    ev3 = eig_by_index_batched(np.broadcast_to(d, (3, n)), idx, tol)
    gap = np.inf
    if k > 0:
        gap = min(gap, abs(ev3[1] - ev3[0]))
    if k < n - 1:
        gap = min(gap, abs(ev3[2] - ev3[1]))
    v, resid = eigenvector_batched(d[None, :], ev3[1:2])
    return float(ev3[1]), v[0], float(resid[0]), float(gap)


def eig_derivative(blk: HamiltonianBlock, k: int):
    """(dE_k/dx, dE_k/domega) by Hellmann-Feynman:

        dE/dx     = lam * sum_j V'(x + j*omega) |phi(j)|^2
        dE/domega = lam * sum_j j * V'(x + j*omega) |phi(j)|^2

    Requires the k-th eigenvalue to be simple with gap > 1e-12.
    """
    E, v, resid, gap = _eig_with_vector(blk, k)
    if gap <= 1e-12:
        raise DegenerateGapError(f"gap {gap:g} at eigenvalue index {k}")
    sites = blk.interval.sites()
    vp = blk.potential.deriv1(wrap01(blk.x + sites * blk.omega))
    w = v * v
    de_dx = blk.lam * float(np.sum(vp * w))
    de_dom = blk.lam * float(np.sum(sites * vp * w))
    return de_dx, de_dom


def near_eigen_exists(blk: HamiltonianBlock, E: float, phi: np.ndarray,
                      eps: float | None = None) -> dict:
    """Approximate-eigenvector certificate.

    Given a unit vector phi, the residual r = ||(H - E) phi|| guarantees
    an eigenvalue within r of E; and if that eigenvalue is isolated at
    gap delta from the rest of the spectrum, the aligned distance from
    phi to its eigenvector is at most sqrt(2) * (2 r) / delta.  Returns
    the witness eigenvalue, both distances, and whether the bounds hold
    (`aligned_bound_vacuous` when the bound exceeds sqrt(2), the largest
    possible aligned distance).
    """
    phi = np.asarray(phi, dtype=float)
    if abs(np.linalg.norm(phi) - 1.0) > 1e-8:
        raise QpsError("phi must be normalized")
    d = blk.diagonal()
    n = d.size
    resid = float(np.linalg.norm(blk.apply(phi.copy(), diag=d) - E * phi))
    eps_eff = resid if eps is None else float(eps)
    tol = spectrum_tolerance(blk)
    m = int(count_below_batched(d, E))
    cand_idx = np.unique(np.clip(np.array([m - 2, m - 1, m, m + 1]), 0, n - 1))
    cand = eig_by_index_batched(np.broadcast_to(d, (cand_idx.size, n)), cand_idx, tol)
    j = int(np.argmin(np.abs(cand - E)))
    mu = float(cand[j])
    others = np.delete(cand, j)
    gap = float(np.min(np.abs(others - mu))) if others.size else np.inf
    v, _ = eigenvector_batched(d[None, :], np.array([mu]))
    psi = v[0]
    aligned = min(np.linalg.norm(phi - psi), np.linalg.norm(phi + psi))
    bound = math.sqrt(2.0) * 2.0 * resid / gap if gap > 0 else np.inf
    return {
        "residual": resid,
        "witness_eigenvalue": mu,
        "witness_gap": abs(mu - E),
        "eigenvalue_within_eps": bool(abs(mu - E) <= eps_eff + tol),
        "spectral_gap": gap,
        "aligned_distance": float(aligned),
        "aligned_bound": float(bound),
        "aligned_bound_ok": bool(aligned <= bound + 1e-12),
        "aligned_bound_vacuous": bool(bound >= math.sqrt(2.0)),
    }
