"""Transfer-matrix cocycles, Lyapunov exponents, and avalanche checks.

The difference equation propagates by one-step matrices

    A(t) = [[t, -1], [1, 0]],    t = lam*V(x + n*omega) - E,

whose ordered product over n in [a, b] has the Dirichlet determinants as
entries:

    M_[a,b] = [[ f_[a,b],   -f_[a+1,b]   ],
               [ f_[a,b-1], -f_[a+1,b-1] ]].

Products are renormalized to unit max-entry after every factor, with the
log of the extracted scale accumulated separately (at lam = 1e4 a plain
double product overflows within ~80 steps).  Each factor has determinant
exactly 1, so the represented determinant is tracked as a drift
diagnostic.

The avalanche checks certify, on concrete matrix sequences, the
quantitative factorization of log||A_n ... A_1|| into consecutive-pair
terms, and its determinant form where the first and last factors are
bracketed by the projector [[1,0],[0,0]] so that the full product's norm
collapses to |f| of the underlying block.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .blocks import HamiltonianBlock, IndexInterval, det_f
from .errors import HypothesisError, QpsError
from .potential import PotentialSpec
from .torus import wrap01

__all__ = [
    "ScaledMat2",
    "LyapunovEstimate",
    "monodromy",
    "monodromy_norms_batch",
    "lyapunov_estimate",
    "avalanche_verify",
    "avalanche_det",
]

PROJ = np.array([[1.0, 0.0], [0.0, 0.0]])


def mat2_spectral_norm(m: np.ndarray) -> float:
    """Closed-form largest singular value of a real 2x2 matrix."""
    a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    fro2 = a * a + b * b + c * c + d * d
    det = a * d - b * c
    disc = max(fro2 * fro2 - 4.0 * det * det, 0.0)
    return math.sqrt(0.5 * (fro2 + math.sqrt(disc)))


@dataclass(frozen=True)
class ScaledMat2:
    """A 2x2 matrix stored as unit-normalized entries plus a log factor.

    The represented matrix is exp(log_scale) * m with max|m_ij| = 1
    (except for the zero matrix).  Multiplication renormalizes, so chains
    of thousands of hyperbolic factors stay in range.
    """

    m: np.ndarray
    log_scale: float

    @staticmethod
    def identity() -> "ScaledMat2":
        return ScaledMat2(np.eye(2), 0.0)

    @staticmethod
    def from_matrix(a) -> "ScaledMat2":
        a = np.asarray(a, dtype=float)
        s = float(np.max(np.abs(a)))
        if s == 0.0:
            return ScaledMat2(np.zeros((2, 2)), float("-inf"))
        return ScaledMat2(a / s, math.log(s))

    def __matmul__(self, other: "ScaledMat2") -> "ScaledMat2":
        p = self.m @ other.m
        s = float(np.max(np.abs(p)))
        if s == 0.0:
            return ScaledMat2(np.zeros((2, 2)), float("-inf"))
        return ScaledMat2(p / s, self.log_scale + other.log_scale + math.log(s))

    def norm_log(self) -> float:
        """log of the spectral norm of the represented matrix."""
        n = mat2_spectral_norm(self.m)
        return self.log_scale + math.log(n) if n > 0 else float("-inf")

    def det_signed_log(self):
        """(sign, log|det|) of the represented matrix."""
        d = float(np.linalg.det(self.m))
        if d == 0.0:
            return 0, float("-inf")
        return (1 if d > 0 else -1), math.log(abs(d)) + 2.0 * self.log_scale

    def entry_signed_log(self, i: int, j: int):
        v = float(self.m[i, j])
        if v == 0.0:
            return 0, float("-inf")
        return (1 if v > 0 else -1), math.log(abs(v)) + self.log_scale

    def to_matrix(self) -> np.ndarray:
        """Dense matrix; overflows for log_scale beyond ~709."""
        return self.m * math.exp(self.log_scale)


def one_step(t: float) -> np.ndarray:
    return np.array([[t, -1.0], [1.0, 0.0]])


def monodromy(interval: IndexInterval, x, omega, lam, potential: PotentialSpec,
              E: float) -> ScaledMat2:
    """Ordered product of one-step matrices from site a up to site b."""
    sites = interval.sites()
    t = lam * potential.eval(wrap01(x + sites * omega)) - E
    out = ScaledMat2.identity()
    for tv in t:
        out = ScaledMat2.from_matrix(one_step(float(tv))) @ out
    return out


def monodromy_norms_batch(xs: np.ndarray, omega, lam, potential: PotentialSpec,
                          E: float, n: int):
    """(1/n) log||M_[1,n](x)|| for a whole batch of phases at once.

    Propagates the full 2x2 product per phase with per-step max-entry
    renormalization; returns per-site log-norm growth rates, shape like xs.
    """
    xs = np.asarray(xs, dtype=float)
    B = xs.shape[0]
    m = np.broadcast_to(np.eye(2), (B, 2, 2)).copy()
    log_scale = np.zeros(B)
    for k in range(1, n + 1):
        t = lam * potential.eval(wrap01(xs + k * omega)) - E
        top0 = t * m[:, 0, 0] - m[:, 1, 0]
        top1 = t * m[:, 0, 1] - m[:, 1, 1]
        m[:, 1, 0] = m[:, 0, 0]
        m[:, 1, 1] = m[:, 0, 1]
        m[:, 0, 0] = top0
        m[:, 0, 1] = top1
        s = np.max(np.abs(m), axis=(1, 2))
        s = np.where(s == 0.0, 1.0, s)
        m /= s[:, None, None]
        log_scale += np.log(s)
    fro2 = np.sum(m * m, axis=(1, 2))
    det = m[:, 0, 0] * m[:, 1, 1] - m[:, 0, 1] * m[:, 1, 0]
    disc = np.maximum(fro2 * fro2 - 4.0 * det * det, 0.0)
    sig = np.sqrt(0.5 * (fro2 + np.sqrt(disc)))
    return (log_scale + np.log(sig)) / n


@dataclass(frozen=True)
class LyapunovEstimate:
    value: float  # nats per site
    n: int
    x_samples: int
    std_error: float

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise QpsError("non-finite Lyapunov estimate")


def lyapunov_estimate(omega, E, lam, potential: PotentialSpec, n: int,
                      x_grid: int, seed: int = 0) -> LyapunovEstimate:
    """Average of (1/n) log||M_[1,n](x)|| over an equispaced phase grid.

    The grid carries a random global phase offset (seeded), which keeps
    the estimator unbiased under the ergodic shift while runs stay
    reproducible.  std_error is the sample std over phases / sqrt(count).
    """
    if n < 100 or x_grid < 10:
        raise QpsError("lyapunov_estimate needs n >= 100 and x_grid >= 10")
    rng = np.random.Generator(np.random.Philox(key=seed))
    phase = rng.uniform()
    xs = wrap01((np.arange(x_grid) + 0.5) / x_grid + phase)
    vals = monodromy_norms_batch(xs, omega, lam, potential, E, n)
    value = float(np.mean(vals))
    std_error = float(np.std(vals, ddof=1) / math.sqrt(x_grid)) if x_grid > 1 else 0.0
    return LyapunovEstimate(value=value, n=n, x_samples=x_grid, std_error=std_error)


# ---------------------------------------------------------------------------
# avalanche checks


def _check_avalanche_hypotheses(mats: list[ScaledMat2], mu: float):
    n = len(mats)
    if not (mu > n):
        raise HypothesisError("mu > n", detail=f"mu={mu}, n={n}")
    half_log_mu = 0.5 * math.log(mu)
    norms = [a.norm_log() for a in mats]
    for j, (a, nl) in enumerate(zip(mats, norms)):
        ds, dl = a.det_signed_log()
        if ds != 0 and dl > 1e-9:
            raise HypothesisError("max |det A_j| <= 1", index=j,
                                  detail=f"log|det|={dl:.3g}")
        if nl < math.log(mu) - 1e-12:
            raise HypothesisError("min ||A_j|| >= mu", index=j,
                                  detail=f"log||A||={nl:.6g} < log mu={math.log(mu):.6g}")
    for j in range(n - 1):
        pair = (mats[j + 1] @ mats[j]).norm_log()
        defect = norms[j + 1] + norms[j] - pair
        if defect >= half_log_mu:
            raise HypothesisError(
                "log||A_{j+1}|| + log||A_j|| - log||A_{j+1}A_j|| < (1/2) log mu",
                index=j, detail=f"defect={defect:.6g}")
    return norms


def avalanche_verify(matrices, mu: float) -> dict:
    """Residual of the pairwise factorization of a long product's norm.

    For matrices A_1..A_n with |det A_j| <= 1, ||A_j|| >= mu > n, and
    pairwise norm defect below (1/2) log mu, evaluates

        LHS = | log||A_n...A_1|| + sum_{j=2}^{n-1} log||A_j||
                               - sum_{j=1}^{n-1} log||A_{j+1} A_j|| |

    and reports the ratio LHS / (n/mu).  All three hypotheses are checked
    and a HypothesisError identifies the failing condition and index.
    """
    mats = [a if isinstance(a, ScaledMat2) else ScaledMat2.from_matrix(a)
            for a in matrices]
    n = len(mats)
    if n < 2:
        raise QpsError("avalanche_verify needs at least 2 matrices")
    norms = _check_avalanche_hypotheses(mats, mu)
    total = mats[0]
    for a in mats[1:]:
        total = a @ total
    pair_sum = 0.0
    for j in range(n - 1):
        pair_sum += (mats[j + 1] @ mats[j]).norm_log()
    interior = sum(norms[1:-1])
    lhs = abs(total.norm_log() + interior - pair_sum)
    return {
        "n": n,
        "mu": mu,
        "lhs": lhs,
        "bound_n_over_mu": n / mu,
        "ratio": lhs / (n / mu),
        "log_norm_product": total.norm_log(),
    }


def avalanche_det(x, omega, lam, potential: PotentialSpec, E: float,
                  cut_points, mu: float | None = None) -> dict:
    """Factorized-determinant identity over a partitioned block.

    cut_points a_0 < a_1 < ... < a_K split [a_0, a_K]; with
    A_1 = M_[a_0,a_1] P, A_l = M_(a_{l-1},a_l] for 1 < l < K, and
    A_K = P M_(a_{K-1},a_K] (P the upper-left projector), the product
    A_K...A_1 = P M_[a_0,a_K] P has norm |f_[a_0,a_K]|, and

      log|f| ~ sum_l log||A_l A_{l-1}|| - sum interior log||A_l||

    up to O(n/mu).  mu is the claimed hypothesis constant (any value
    with min ||A_l|| >= mu > K works; the residual comparison is against
    n/mu, so pick the scale the hypothesis is actually verified at, e.g.
    lam**(1/2) for single-site non-resonance).  Defaults to the smallest
    factor norm, capped to stay representable.
    """
    cp = [int(c) for c in cut_points]
    if len(cp) < 2 or any(cp[i] >= cp[i + 1] for i in range(len(cp) - 1)):
        raise QpsError("cut_points must be strictly increasing, length >= 2")
    segs = []
    proj = ScaledMat2.from_matrix(PROJ)
    for i in range(len(cp) - 1):
        lo = cp[i] if i == 0 else cp[i] + 1
        seg = monodromy(IndexInterval(lo, cp[i + 1]), x, omega, lam, potential, E)
        segs.append(seg)
    mats = list(segs)
    mats[0] = mats[0] @ proj
    mats[-1] = proj @ mats[-1]
    K = len(mats)
    min_log = min(a.norm_log() for a in mats)
    if mu is None:
        mu = math.exp(min(min_log, 700.0))
    elif math.log(mu) > min_log + 1e-12:
        raise HypothesisError("min ||A_l|| >= mu",
                              detail=f"min log norm {min_log:.4g} < log mu")
    norms = _check_avalanche_hypotheses(mats, mu)
    blk = HamiltonianBlock(IndexInterval(cp[0], cp[-1]), wrap01(x), wrap01(omega),
                           lam, potential)
    logf = det_f(blk, E).abs_log()
    pair_sum = 0.0
    for j in range(K - 1):
        pair_sum += (mats[j + 1] @ mats[j]).norm_log()
    interior = sum(norms[1:-1])
    resid = abs(logf - (pair_sum - interior))
    n_sites = cp[-1] - cp[0] + 1
    return {
        "segments": K,
        "mu": mu,
        "log_abs_f": logf,
        "factorized": pair_sum - interior,
        "residual": resid,
        "bound_n_over_mu": n_sites / mu,
        "ratio": resid / (n_sites / mu),
    }
