"""Validators for the mini-max / perturbation toolbox.

Each check takes concrete matrices, computes both sides of the claimed
inequality, and returns a report dict with the observed margins; nothing
here assumes the inequality, so planted counterexamples would surface.

Tridiagonal spectra reuse the Sturm-count bisection from `blocks`
(generalized to arbitrary off-diagonals).  The generic hermitian checks
(interlacing under rank-one bumps, rank-k determinant comparison) accept
dense inputs and lean on numpy's eigvalsh, since they validate statements
about arbitrary self-adjoint matrices rather than Schrodinger blocks.
"""

from __future__ import annotations

import numpy as np

from .blocks import count_below_batched, eig_by_index_batched
from .errors import QpsError

__all__ = [
    "tridiag_eigenvalues",
    "tridiag_spectral_norm",
    "weyl_check",
    "interlace_check",
    "rank_pert_det_check",
    "det_perturbation_check",
    "tridiag_normalization_check",
]


def tridiag_eigenvalues(diag, offdiag, tol: float | None = None) -> np.ndarray:
    """All eigenvalues of a symmetric tridiagonal matrix, by bisection."""
    d = np.asarray(diag, dtype=float)
    e = np.asarray(offdiag, dtype=float)
    n = d.size
    if e.shape != (n - 1,):
        raise QpsError("offdiag must have length n-1")
    if tol is None:
        scale = float(np.max(np.abs(d))) + 2 * float(np.max(np.abs(e), initial=0.0))
        tol = 1e-12 * (1.0 + scale)
    pad = 2.0 * float(np.max(np.abs(e), initial=0.0)) + tol
    esq = e * e
    ev = eig_by_index_batched(np.broadcast_to(d, (n, n)), np.arange(n), tol,
                              offdiag_sq=esq, pad=pad)
    return np.sort(ev)


def tridiag_spectral_norm(diag, offdiag, tol: float = 1e-10) -> float:
    """||A|| = max(|lambda_min|, |lambda_max|) via two bisections."""
    d = np.asarray(diag, dtype=float)
    e = np.asarray(offdiag, dtype=float)
    n = d.size
    if n == 0:
        return 0.0
    if n == 1:
        return abs(float(d[0]))
    esq = e * e
    pad = 2.0 * float(np.max(np.abs(e))) + tol
    lo_hi = eig_by_index_batched(np.broadcast_to(d, (2, n)),
                                 np.array([0, n - 1]), tol,
                                 offdiag_sq=esq, pad=pad)
    return float(np.max(np.abs(lo_hi)))


def weyl_check(a_diag, a_off, b_diag, b_off) -> dict:
    """Order-paired eigenvalue perturbation: |lambda_j - mu_j| <= ||A - B||.

    A, B symmetric tridiagonal of the same size.  Returns the largest
    |lambda_j - mu_j|, the norm bound, and the worst slack.
    """
    a_diag = np.asarray(a_diag, dtype=float)
    b_diag = np.asarray(b_diag, dtype=float)
    if a_diag.shape != b_diag.shape:
        raise QpsError("weyl_check: dimension mismatch")
    la = tridiag_eigenvalues(a_diag, a_off)
    mb = tridiag_eigenvalues(b_diag, b_off)
    dn = tridiag_spectral_norm(a_diag - b_diag,
                               np.asarray(a_off, float) - np.asarray(b_off, float))
    gaps = np.abs(la - mb)
    tol = 1e-9 * (1.0 + dn + float(np.max(np.abs(la))))
    return {
        "max_pair_gap": float(np.max(gaps)) if gaps.size else 0.0,
        "norm_bound": dn,
        "max_slack": float(dn - np.max(gaps)) if gaps.size else dn,
        "violations": int(np.count_nonzero(gaps > dn + tol)),
        "passed": bool(np.all(gaps <= dn + tol)),
    }


def interlace_check(B, y, alpha: float) -> dict:
    """Rank-one bump interlacing: with A = B + alpha * y y^T (alpha > 0),

        mu_1 <= lambda_1 <= mu_2 <= ... <= mu_n <= lambda_n.
    """
    if alpha <= 0:
        raise QpsError("interlace_check needs alpha > 0")
    B = np.asarray(B, dtype=float)
    y = np.asarray(y, dtype=float)
    A = B + alpha * np.outer(y, y)
    mu = np.linalg.eigvalsh(B)
    lam = np.linalg.eigvalsh(A)
    scale = 1.0 + float(np.max(np.abs(lam)))
    tol = 1e-9 * scale
    ok_lower = np.all(mu <= lam + tol)
    ok_upper = np.all(lam[:-1] <= mu[1:] + tol) if mu.size > 1 else True
    worst = 0.0
    if mu.size:
        worst = max(float(np.max(mu - lam, initial=0.0)),
                    float(np.max(lam[:-1] - mu[1:], initial=0.0)) if mu.size > 1 else 0.0)
    return {
        "passed": bool(ok_lower and ok_upper),
        "worst_violation": worst,
        "eigenvalues_B": mu.tolist(),
        "eigenvalues_A": lam.tolist(),
    }


def _logabsdet_from_eigs(w) -> float:
    aw = np.abs(w)
    if np.any(aw == 0.0):
        return float("-inf")
    return float(np.sum(np.log(aw)))


def rank_pert_det_check(A, B, window=None, rank_tol: float = 1e-10) -> dict:
    """Determinant comparison under low-rank perturbation.

    With k = rank(A - B) (singular values below rank_tol * sigma_max
    count as zero) and A invertible:

        log|det B| - log|det A| <= 2k log||B|| - 2k log dist(sp A, 0).

    When `window` = (E1, E2, Elo, Ehi) is supplied, also checks the
    shifted-determinant comparison with m = #(sp A in (Elo, Ehi)):

        log|det(A - E2)| - log|det(A - E1)|
            <= 1 + m log||A - E2|| - m log dist(sp A, E1).
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    sv = np.linalg.svd(A - B, compute_uv=False)
    smax = float(sv[0]) if sv.size else 0.0
    k = int(np.count_nonzero(sv > rank_tol * max(smax, 1.0)))
    wa = np.linalg.eigvalsh(A)
    wb = np.linalg.eigvalsh(B)
    dist0 = float(np.min(np.abs(wa)))
    out = {"rank": k, "dist_spA_0": dist0}
    if k == 0:
        out["main_lhs"] = 0.0
        out["main_rhs"] = 0.0
        out["main_passed"] = True
    else:
        if dist0 == 0.0:
            out["main_passed"] = True  # trivially: -inf <= anything on det A
            out["main_lhs"] = float("-inf")
            out["main_rhs"] = float("inf")
        else:
            lhs = _logabsdet_from_eigs(wb) - _logabsdet_from_eigs(wa)
            rhs = 2 * k * np.log(np.max(np.abs(wb))) - 2 * k * np.log(dist0)
            out["main_lhs"] = float(lhs)
            out["main_rhs"] = float(rhs)
            out["main_passed"] = bool(lhs <= rhs + 1e-9 * (1 + abs(rhs)))
    if window is not None:
        E1, E2, Elo, Ehi = map(float, window)
        m = int(np.count_nonzero((wa > Elo) & (wa < Ehi)))
        dist1 = float(np.min(np.abs(wa - E1)))
        lhs = _logabsdet_from_eigs(wa - E2) - _logabsdet_from_eigs(wa - E1)
        norm2 = float(np.max(np.abs(wa - E2)))
        rhs = 1.0 + m * np.log(norm2) - m * np.log(dist1)
        out["window_m"] = m
        out["window_lhs"] = float(lhs)
        out["window_rhs"] = float(rhs)
        out["window_passed"] = bool(lhs <= rhs + 1e-9 * (1 + abs(rhs)))
    return out


def det_perturbation_check(K, const: float = 3.0) -> dict:
    """|log|det(I + K)|| <= const * n * ||K|| for ||K|| < 1/2 (const 3)."""
    K = np.asarray(K, dtype=float)
    n = K.shape[0]
    nk = float(np.linalg.norm(K, 2))
    if nk >= 0.5:
        raise QpsError("det_perturbation_check requires ||K|| < 1/2")
    sign, logdet = np.linalg.slogdet(np.eye(n) + K)
    lhs = abs(float(logdet)) if sign != 0 else float("inf")
    rhs = const * n * nk
    return {"lhs": lhs, "rhs": rhs, "norm_K": nk, "passed": bool(lhs <= rhs)}


def tridiag_normalization_check(a, const: float = 6.0) -> dict:
    """Normalized-determinant bound for dominant-diagonal tridiagonals.

    For the tridiagonal matrix with diagonal a (|a_j| > 2) and unit
    off-diagonals,

        | log|det T| - sum_j log|a_j| | <= const * n / min|a_j|.

    Factoring out diag(a) leaves I + K with ||K|| <= 2 / min|a_j|, so
    const = 6 corresponds to constant 3 in the I + K comparison.
    """
    a = np.asarray(a, dtype=float)
    n = a.size
    amin = float(np.min(np.abs(a)))
    if amin <= 2.0:
        raise QpsError("tridiag_normalization_check requires min|a_j| > 2")
    # det via the three-term recursion with unit off-diagonals
    f_prev, f_cur, log_scale = 0.0, 1.0, 0.0
    for d in a:
        f_new = d * f_cur - f_prev
        f_prev, f_cur = f_cur, f_new
        m = max(abs(f_prev), abs(f_cur))
        if m > 1e100:
            f_prev /= m
            f_cur /= m
            log_scale += np.log(m)
    logdet = np.log(abs(f_cur)) + log_scale
    lhs = abs(float(logdet - np.sum(np.log(np.abs(a)))))
    rhs = const * n / amin
    return {"lhs": lhs, "rhs": rhs, "min_abs_diag": amin, "passed": bool(lhs <= rhs)}
