"""Named property suites behind the `verify` command.

Each suite runs a fixed battery of randomized and hand-built instances
through the corresponding validators and returns a JSON-able report:
{"suite": ..., "checks": [{"name", "passed", ...margins...}], "passed"}.
Randomness is Philox-seeded; identical seeds give identical reports.

A hypothesis-gate rejection (inputs that fail a validator's
preconditions) counts as "gate", not as a failed check.
"""

from __future__ import annotations

import math

import numpy as np

from .blocks import (
    HamiltonianBlock,
    IndexInterval,
    det_f,
    det_f_table,
    eig_derivative,
    green,
    near_eigen_exists,
    spectrum,
    sturm_count,
)
from .cocycle import ScaledMat2, avalanche_det, avalanche_verify, monodromy
from .errors import HypothesisError, QpsError
from .matrixlemmas import (
    det_perturbation_check,
    interlace_check,
    rank_pert_det_check,
    tridiag_normalization_check,
    weyl_check,
)
from .measure import (
    double_resonance_measure,
    hyperplane_slab_check,
    implicit_slab,
    sublevel_measure_check,
)
from .multiscale import orthogonality_separation_audit
from .potential import (
    VariationSpec,
    eval_variation,
    perturbed_potential,
    potential_preset,
    verify_variation_derivative_bounds,
)
from .torus import wrap01

SUITE_NAMES = ("appendixA", "appendixB", "appendixC", "appendixD",
               "appendixE", "appendixF", "separation", "variation")

GOLDEN = 0.6180339887498949


def _rng(seed):
    return np.random.Generator(np.random.Philox(key=seed))


def _report(suite, checks):
    return {"suite": suite, "checks": checks,
            "passed": all(c.get("passed", False) or c.get("gate", False)
                          for c in checks)}


def _rand_block(rng, n, lam_range=(10.0, 1e4)):
    pot = potential_preset("cos")
    lam = float(rng.uniform(*lam_range))
    a = int(rng.integers(-5, 5))
    return HamiltonianBlock(IndexInterval(a, a + n - 1), float(rng.uniform()),
                            float(rng.uniform()), lam, pot)


def _rq_eig(blk, k):
    """Eigenvalue k polished by a Rayleigh quotient (FD-oracle accuracy)."""
    sp = spectrum(blk, want_vectors=True)
    v = sp.eigenvectors[:, k]
    return float(v @ blk.apply(v.copy()))


def run_suite(name: str, seed: int = 0, trials: int | None = None) -> dict:
    if name not in SUITE_NAMES:
        raise QpsError(f"unknown suite {name!r}; choose from {SUITE_NAMES}")
    return globals()["_suite_" + name.lower()](seed, trials)


# ---------------------------------------------------------------------------


def _suite_appendixa(seed, trials):
    rng = _rng(seed)
    trials = trials or 50
    checks = []
    # Hellmann-Feynman first derivative vs central differences
    worst = 0.0
    for _ in range(trials):
        blk = _rand_block(rng, 8, lam_range=(5.0, 50.0))
        k = int(rng.integers(0, 8))
        try:
            de_dx, _ = eig_derivative(blk, k)
        except QpsError:
            continue
        h = 1e-6
        es = []
        for off in (-h, h):
            b2 = HamiltonianBlock(blk.interval, wrap01(blk.x + off), blk.omega,
                                  blk.lam, blk.potential)
            es.append(_rq_eig(b2, k))
        fd = (es[1] - es[0]) / (2 * h)
        rel = abs(fd - de_dx) / max(1.0, abs(fd))
        worst = max(worst, rel)
    checks.append({"name": "first_derivative_vs_fd", "worst_rel_err": worst,
                   "passed": worst <= 1e-5})
    # second-derivative bound |E''| <= ||A''|| + ||A'||^2 / (2 gap)
    ok = True
    worst_slack = math.inf
    for _ in range(trials):
        blk = _rand_block(rng, 8, lam_range=(5.0, 50.0))
        sp = spectrum(blk).eigenvalues
        k = int(rng.integers(1, 7))
        gap = min(sp[k] - sp[k - 1], sp[k + 1] - sp[k])
        if gap < 1e-6:
            continue
        h = 1e-4
        es = []
        for off in (-h, 0.0, h):
            b2 = HamiltonianBlock(blk.interval, wrap01(blk.x + off), blk.omega,
                                  blk.lam, blk.potential)
            es.append(_rq_eig(b2, k))
        e2 = (es[0] - 2 * es[1] + es[2]) / h**2
        a1 = float(np.max(np.abs(blk.deriv_diagonal(1))))
        a2 = float(np.max(np.abs(blk.deriv_diagonal(2))))
        bound = a2 + a1**2 / (2 * (gap / 2))
        worst_slack = min(worst_slack, bound - abs(e2))
        ok &= abs(e2) <= bound * (1 + 1e-4)
    checks.append({"name": "second_derivative_bound", "worst_slack": worst_slack,
                   "passed": ok})
    # approximate eigenvector certificates
    blk = _rand_block(rng, 12, lam_range=(50.0, 200.0))
    sp = spectrum(blk, want_vectors=True)
    k = 5
    phi = sp.eigenvectors[:, k]
    r = near_eigen_exists(blk, float(sp.eigenvalues[k]), phi)
    checks.append({"name": "exact_eigenvector_witness",
                   "witness_gap": r["witness_gap"],
                   "passed": r["witness_gap"] <= 1e-7})
    noise = rng.standard_normal(12)
    noise -= (noise @ phi) * phi
    noise *= 1e-6 / np.linalg.norm(noise)
    phi2 = phi + noise
    phi2 /= np.linalg.norm(phi2)
    r2 = near_eigen_exists(blk, float(sp.eigenvalues[k]), phi2)
    checks.append({"name": "perturbed_eigenvector_witness",
                   "witness_gap": r2["witness_gap"],
                   "aligned_ok": r2["aligned_bound_ok"],
                   "passed": r2["witness_gap"] <= 1e-4 and r2["aligned_bound_ok"]})
    far = rng.standard_normal(12)
    far /= np.linalg.norm(far)
    r3 = near_eigen_exists(blk, float(sp.eigenvalues[k]) + 3.0, far)
    checks.append({"name": "far_vector_bound_honored",
                   "passed": r3["aligned_bound_ok"] or r3["aligned_bound_vacuous"]})
    return _report("appendixA", checks)


def _suite_appendixb(seed, trials):
    rng = _rng(seed)
    trials = trials or 1000
    checks = []
    # exact shift: all order-paired gaps equal the norm of the shift
    n = 12
    d = rng.uniform(-3, 3, n)
    e = rng.uniform(0.5, 1.5, n - 1)
    r = weyl_check(d, e, d + 0.1, e)
    checks.append({"name": "weyl_shift_exact",
                   "max_gap": r["max_pair_gap"],
                   "passed": abs(r["max_pair_gap"] - 0.1) < 1e-8 and r["passed"]})
    r0 = weyl_check(d, e, d, e)
    checks.append({"name": "weyl_identical", "passed": r0["max_pair_gap"] < 1e-9})
    viol = 0
    for _ in range(trials):
        n = int(rng.integers(2, 21))
        dA = rng.uniform(-5, 5, n)
        eA = rng.uniform(-2, 2, n - 1)
        dB = dA + rng.uniform(-1, 1, n)
        eB = eA + rng.uniform(-0.5, 0.5, n - 1)
        if not weyl_check(dA, eA, dB, eB)["passed"]:
            viol += 1
    checks.append({"name": "weyl_randomized", "trials": trials,
                   "violations": viol, "passed": viol == 0})
    # interlacing
    B = np.diag([1.0, 3.0])
    r = interlace_check(B, np.array([1.0, 0.0]), 1.0)
    checks.append({"name": "interlace_diag_case", "passed": r["passed"]})
    viol = 0
    for _ in range(trials):
        n = int(rng.integers(2, 16))
        M = rng.standard_normal((n, n))
        B = (M + M.T) / 2
        y = rng.standard_normal(n)
        if not interlace_check(B, y, float(rng.uniform(0.1, 5.0)))["passed"]:
            viol += 1
    checks.append({"name": "interlace_randomized", "trials": trials,
                   "violations": viol, "passed": viol == 0})
    # rank-k determinant comparison
    r = rank_pert_det_check(np.diag([2.0, 2.0]), np.diag([4.0, 2.0]))
    checks.append({"name": "rank_pert_hand_case", "rank": r["rank"],
                   "passed": r["rank"] == 1 and r["main_passed"]})
    viol = 0
    nt = max(trials // 5, 10)
    for _ in range(nt):
        n = int(rng.integers(3, 12))
        M = rng.standard_normal((n, n))
        A = (M + M.T) / 2 + (n + 1) * np.eye(n)
        k = int(rng.integers(1, 4))
        U = rng.standard_normal((n, k))
        B = A + U @ U.T
        rr = rank_pert_det_check(A, B, window=(0.1, 0.3, -1.0, 2 * n + 4.0))
        if not (rr["main_passed"] and rr["window_passed"]):
            viol += 1
    checks.append({"name": "rank_pert_randomized", "trials": nt,
                   "violations": viol, "passed": viol == 0})
    return _report("appendixB", checks)


def _green_decay_instance(rng, lam=1e4, n=50):
    """A non-resonant block and energy: min |lam V - E| >= lam**0.5."""
    pot = potential_preset("cos")
    for _ in range(200):
        x = float(rng.uniform())
        om = float(rng.uniform())
        blk = HamiltonianBlock(IndexInterval(0, n - 1), x, om, lam, pot)
        d = np.sort(blk.diagonal())
        gaps = np.diff(d)
        j = int(np.argmax(gaps))
        E = 0.5 * (d[j] + d[j + 1])
        if np.min(np.abs(blk.diagonal() - E)) >= math.sqrt(lam):
            return blk, E
    raise QpsError("could not build a non-resonant instance")


def _suite_appendixc(seed, trials):
    rng = _rng(seed)
    trials = trials or 100
    checks = []
    pot = potential_preset("cos")
    # uniformly non-resonant blocks: determinant and distance lower bounds
    ok1 = True
    for _ in range(20):
        blk, E = _green_decay_instance(rng, lam=1e4, n=20)
        d = blk.diagonal()
        mu = 0.5 * float(np.min(np.abs(d - E)))
        logf = det_f(blk, E).abs_log()
        sp = spectrum(blk).eigenvalues
        dist = float(np.min(np.abs(sp - E)))
        ok1 &= logf > blk.n * math.log(mu) and dist > mu
    checks.append({"name": "uniform_nonresonant_lower_bounds", "passed": ok1})
    # one exceptional site
    ok2 = True
    for _ in range(20):
        blk, E = _green_decay_instance(rng, lam=1e4, n=20)
        d = blk.diagonal().copy()
        j0 = int(rng.integers(0, blk.n))
        E_exc = float(d[j0] + rng.uniform(-1.0, 1.0))
        mu = 0.5 * float(np.min(np.abs(np.delete(d, j0) - E_exc)))
        if mu <= 2:
            continue
        cnt_in = (sturm_count(blk, E_exc + mu) - sturm_count(blk, E_exc - mu))
        sp = spectrum(blk).eigenvalues
        dist = float(np.min(np.abs(sp - E_exc)))
        logf = det_f(blk, E_exc).abs_log()
        ok2 &= cnt_in <= 1
        if dist > 0:
            ok2 &= logf > (blk.n - 1) * math.log(mu) + math.log(dist) - 1e-6
    checks.append({"name": "single_resonance_bounds", "passed": ok2})
    # Green's function decay slope
    viol = 0
    slopes = []
    for _ in range(trials):
        blk, E = _green_decay_instance(rng)
        mu = 0.5 * float(np.min(np.abs(blk.diagonal() - E)))
        a, b = blk.interval.a, blk.interval.b
        ls = np.arange(a + 1, b + 1)
        logs = np.array([green(blk, E, a, int(l)).abs_log() for l in ls])
        dist = ls - a
        slope = float(np.polyfit(dist, logs, 1)[0])
        slopes.append(slope)
        if slope > -0.5 * math.log(mu):
            viol += 1
    checks.append({"name": "green_decay_slope", "trials": trials,
                   "violations": viol, "worst_slope": max(slopes),
                   "passed": viol == 0})
    # determinant comparison under small perturbations
    ok5 = True
    for _ in range(50):
        n = int(rng.integers(2, 15))
        K = rng.standard_normal((n, n))
        K *= rng.uniform(0.01, 0.49) / np.linalg.norm(K, 2)
        ok5 &= det_perturbation_check(K)["passed"]
    checks.append({"name": "det_I_plus_K_const3", "passed": ok5})
    ok6 = True
    for _ in range(50):
        n = int(rng.integers(2, 30))
        a = rng.uniform(2.5, 50.0, n) * rng.choice([-1.0, 1.0], n)
        ok6 &= tridiag_normalization_check(a)["passed"]
    checks.append({"name": "tridiag_normalization", "passed": ok6})
    # overlapping cover with decaying Green's functions forces E off spectrum
    blk, E = _green_decay_instance(rng, lam=1e4, n=60)
    tau = 0.5
    first_n = None
    for n_try in (20, 30, 40, 60):
        sub = HamiltonianBlock(IndexInterval(0, n_try - 1), blk.x, blk.omega,
                               blk.lam, pot)
        overlap = int(n_try**tau) + 1
        step = max(n_try // 4, overlap + 2)
        covers = []
        lo = 0
        while lo < n_try:
            hi = min(lo + step + overlap, n_try - 1)
            covers.append((lo, hi))
            if hi == n_try - 1:
                break
            lo = hi - overlap
        hyp_ok = True
        for (l0, h0) in covers:
            piece = HamiltonianBlock(IndexInterval(l0, h0), blk.x, blk.omega,
                                     blk.lam, pot)
            gl = green(piece, E, l0, h0).abs_log()
            if gl > -0.5 * (h0 - l0):
                hyp_ok = False
        if hyp_ok:
            low = sturm_count(sub, E - 1e-9)
            high = sturm_count(sub, E + 1e-9)
            if low == high:
                first_n = n_try
                break
    checks.append({"name": "cover_decay_excludes_spectrum",
                   "smallest_n": first_n, "passed": first_n is not None})
    # log-norm splitting defect bounded via dist to spectrum
    ok10 = True
    worst = -math.inf
    for _ in range(30):
        blk, E = _green_decay_instance(rng, lam=1e3, n=30)
        a, b = blk.interval.a, blk.interval.b
        c = int(rng.integers(a + 5, b - 5))
        m_all = monodromy(blk.interval, blk.x, blk.omega, blk.lam, pot, E)
        m1 = monodromy(IndexInterval(a, c), blk.x, blk.omega, blk.lam, pot, E)
        m2 = monodromy(IndexInterval(c + 1, b), blk.x, blk.omega, blk.lam, pot, E)
        sp = spectrum(blk).eigenvalues
        kappa = float(np.min(np.abs(sp - E)))
        lc0 = blk.lam * float(np.max(np.abs(
            pot.eval(wrap01(blk.x + np.arange(a, b + 1) * blk.omega)))))
        lhs = m1.norm_log() + m2.norm_log() - m_all.norm_log()
        rhs = 20 * (math.log(lc0) - math.log(kappa))
        worst = max(worst, lhs - rhs)
        ok10 &= lhs <= rhs + 1e-9
    checks.append({"name": "lognorm_split_defect", "worst_excess": worst,
                   "passed": ok10})
    return _report("appendixC", checks)


def _rand_hyperbolic(rng, mu, n):
    """Rotated diag(mu, 1/mu) factors with small random twists."""
    mats = []
    for _ in range(n):
        t1 = rng.uniform(-0.2, 0.2)
        t2 = rng.uniform(-0.2, 0.2)
        c1, s1 = math.cos(t1), math.sin(t1)
        c2, s2 = math.cos(t2), math.sin(t2)
        R1 = np.array([[c1, -s1], [s1, c1]])
        R2 = np.array([[c2, -s2], [s2, c2]])
        mats.append(R1 @ np.diag([mu, 1.0 / mu]) @ R2)
    return mats


def _suite_appendixd(seed, trials):
    rng = _rng(seed)
    trials = trials or 200
    checks = []
    r = avalanche_verify([np.diag([1000.0, 1e-3])] * 10, 1000.0)
    checks.append({"name": "commuting_diagonal_exact_zero",
                   "lhs": r["lhs"], "passed": r["lhs"] == 0.0})
    worst = 0.0
    viol = 0
    for _ in range(trials):
        n = int(rng.integers(3, 101))
        mu = 1e4
        try:
            rr = avalanche_verify(_rand_hyperbolic(rng, mu, n), mu * 0.8)
        except HypothesisError:
            viol += 1
            continue
        worst = max(worst, rr["ratio"])
    checks.append({"name": "random_hyperbolic_ratio", "trials": trials,
                   "gates": viol, "worst_ratio": worst,
                   "passed": worst <= 10.0})
    # hypothesis gate fires and identifies the condition
    small = [np.diag([2.0, 0.5])] * 10
    try:
        avalanche_verify(small, 1000.0)
        gate = False
        cond = None
    except HypothesisError as e:
        gate = True
        cond = e.condition
    checks.append({"name": "hypothesis_gate", "gate": True,
                   "condition": cond, "passed": gate})
    # determinant form on a strongly non-resonant block
    rng2 = _rng(seed + 1)
    pot = potential_preset("cos")
    worst_det = 0.0
    built = 0
    for _ in range(40):
        if built >= 10:
            break
        x = float(rng2.uniform())
        om = float(rng2.uniform())
        lam = 1e4
        blk = HamiltonianBlock(IndexInterval(0, 60), x, om, lam, pot)
        d = np.sort(blk.diagonal())
        j = int(np.argmax(np.diff(d)))
        E = 0.5 * (d[j] + d[j + 1])
        if np.min(np.abs(blk.diagonal() - E)) < math.sqrt(lam):
            continue
        try:
            rr = avalanche_det(x, om, lam, pot, E, list(range(0, 61, 10)),
                               mu=math.sqrt(lam))
        except HypothesisError:
            continue
        built += 1
        worst_det = max(worst_det, rr["ratio"])
    checks.append({"name": "determinant_form_ratio", "instances": built,
                   "worst_ratio": worst_det,
                   "passed": built > 0 and worst_det <= 10.0})
    return _report("appendixD", checks)


def _suite_appendixe(seed, trials):
    rng = _rng(seed)
    checks = []
    # linear case: excluded strip height exactly 2 rho / mu (+ margin)
    rho = 0.05
    d0, unc = implicit_slab(lambda x, y: y, (0.0, 1.0), (-1.0, 1.0),
                            mu=1.0, kappa=0.0, rho=rho, m=8)
    checks.append({"name": "implicit_slab_linear", "uncovered": unc,
                   "passed": abs(unc - 2 * rho) < 1e-6})
    d0b, uncb = implicit_slab(lambda x, y: y - x, (0.0, 1.0), (-1.0, 2.0),
                              mu=1.0, kappa=1.0, rho=rho, m=16)
    bound = 2 * rho + 1.0 / 16
    checks.append({"name": "implicit_slab_skew", "uncovered": uncb,
                   "bound": bound, "passed": uncb <= bound + 1e-9})
    xs, ys = d0b.sample(_rng(seed + 7), 10000)
    ok = bool(np.all(np.abs(ys - xs) >= rho - 1e-9))
    checks.append({"name": "implicit_slab_rejection_10k", "passed": ok})
    # sublevel fixtures
    r1 = sublevel_measure_check(lambda x: x**2, lambda x: 2 * x,
                                lambda x: 2 * np.ones_like(x),
                                lambda x: np.zeros_like(x),
                                (-1.0, 1.0), eps=0.01, C=2.0)
    checks.append({"name": "sublevel_quadratic", "measured": r1["measured"],
                   "bound": r1["bound"],
                   "passed": abs(r1["measured"] - 0.2) < 1e-6 and r1["passed"]})
    tp = 2 * math.pi
    r2 = sublevel_measure_check(
        lambda x: np.sin(tp * x), lambda x: tp * np.cos(tp * x),
        lambda x: -tp**2 * np.sin(tp * x), lambda x: -tp**3 * np.cos(tp * x),
        (0.0, 1.0), eps=0.01, C=tp, kappa=tp**3 + tp**2)
    lin = 4 * 0.01 / tp  # linearization at the two interior crossings
    checks.append({"name": "sublevel_sine", "measured": r2["measured"],
                   "linearized": lin,
                   "passed": abs(r2["measured"] - lin) < 0.05 * lin and r2["passed"]})
    # inverse-branch stability in the level parameter
    eps = 1e-3
    g = lambda x: x + 0.1 * np.sin(tp * x)
    gp_min = 1.0 - 0.1 * tp

    def inv_branch(y, t):
        lo, hi = -0.5, 1.5
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if g(mid) < y - t:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    worst = 0.0
    for y0 in np.linspace(0.2, 0.8, 13):
        sp = inv_branch(y0, eps)
        tm = inv_branch(y0, -eps)
        worst = max(worst, abs(sp - tm))
    checks.append({"name": "inverse_branch_lipschitz", "worst": worst,
                   "bound": 2 * eps / (1.0 * gp_min),
                   "passed": worst <= 2 * eps / gp_min + 1e-9})
    # double-resonance Monte Carlo fixture and eps-monotonicity
    F1 = lambda x, om: np.sin(tp * (x + om)) - 0.5
    F2 = lambda x, om: np.sin(tp * (x + 2 * om)) - 0.5
    r_hi = double_resonance_measure(F1, F2, 89, 1e-4, 20000, seed)
    r_lo = double_resonance_measure(F1, F2, 89, 5e-5, 20000, seed)
    checks.append({"name": "double_resonance_fixture",
                   "estimate": r_hi["estimate"], "ratio": r_hi["ratio"],
                   "passed": math.isfinite(r_hi["estimate"])})
    checks.append({"name": "double_resonance_monotone_in_eps",
                   "passed": r_lo["estimate"] <= r_hi["estimate"] + 1e-12})
    trivial = double_resonance_measure(F1, lambda x, om: np.ones_like(x),
                                       89, 1e-4, 5000, seed)
    checks.append({"name": "double_resonance_never_small",
                   "passed": trivial["estimate"] == 0.0})
    return _report("appendixE", checks)


def _irwin_hall_cdf(x: float, n: int) -> float:
    """CDF of the sum of n iid U[0,1] at x."""
    if x <= 0:
        return 0.0
    if x >= n:
        return 1.0
    total = 0.0
    for k in range(int(math.floor(x)) + 1):
        total += (-1) ** k * math.comb(n, k) * (x - k) ** n
    return total / math.factorial(n)


def slab_probability_oracle(N: int, delta: float, eps: float, C: float) -> float:
    """P(|mean-weighted sum - C| <= eps) for uniform weights 1/N via the
    sum-of-uniforms distribution."""
    # sum u_j with u_j = (xi_j + delta) / (2 delta) in [0,1];
    # a.xi = (2 delta / N) sum u - delta
    lo = (C - eps + delta) * N / (2 * delta)
    hi = (C + eps + delta) * N / (2 * delta)
    return _irwin_hall_cdf(hi, N) - _irwin_hall_cdf(lo, N)


def _suite_appendixf(seed, trials):
    checks = []
    samples = trials or 10**6
    N = 8
    e1 = np.zeros(N)
    e1[0] = 1.0
    r1 = hyperplane_slab_check(e1, 0.0, 0.1, 0.01, samples, seed)
    exact = 0.01 / 0.1
    checks.append({"name": "single_coordinate_exact",
                   "fraction": r1["fraction"], "exact": exact,
                   "passed": abs(r1["fraction"] - exact) <= r1["three_sigma"]
                   and r1["passed"]})
    uni = np.full(N, 1.0 / N)
    r2 = hyperplane_slab_check(uni, 0.5, 0.1, 0.01, samples, seed + 1)
    checks.append({"name": "slab_misses_cube", "fraction": r2["fraction"],
                   "passed": r2["fraction"] == 0.0})
    r3 = hyperplane_slab_check(uni, 0.0, 0.1, 0.01, samples, seed + 2)
    oracle = slab_probability_oracle(N, 0.1, 0.01, 0.0)
    checks.append({"name": "uniform_weights_vs_convolution_oracle",
                   "fraction": r3["fraction"], "oracle": oracle,
                   "passed": abs(r3["fraction"] - oracle) <= r3["three_sigma"]
                   and r3["passed"]})
    return _report("appendixF", checks)


def _suite_separation(seed, trials):
    rng = _rng(seed)
    checks = []
    lam = 1e4
    pot = potential_preset("cos")
    om = GOLDEN
    N1 = 6
    M = N1 * N1
    n_sites = 2 * M + 1  # 73
    threshold = math.exp(-float(n_sites) ** 0.75)
    win = 0.25 * math.sqrt(lam)
    x_samples = trials or 100
    min_gap = math.inf
    viol = 0
    pairs = 0
    for i in range(x_samples):
        x = float(rng.uniform())
        blk = HamiltonianBlock(IndexInterval(-M, M), x, om, lam, pot)
        sp = spectrum(blk).eigenvalues
        center = lam * float(pot.eval(x))
        inwin = sp[(sp > center - win) & (sp < center + win)]
        if inwin.size >= 2:
            gaps = np.diff(inwin)
            pairs += gaps.size
            g = float(np.min(gaps))
            min_gap = min(min_gap, g)
            viol += int(np.count_nonzero(gaps <= threshold))
    checks.append({"name": "window_eigenvalue_separation",
                   "block_sites": n_sites, "threshold": threshold,
                   "pairs": pairs, "min_gap": min_gap, "violations": viol,
                   "passed": viol == 0 and pairs > 0})
    # Dirichlet-vector machinery on a block with two window eigenvalues.
    # The log-Lipschitz / tail hypotheses additionally need every
    # resonant site inside the inner box [-N1, N1] (that is exactly what
    # the admissible-scale selection arranges), so filter for that.
    found = None
    sites = np.arange(-M, M + 1)
    for _ in range(2000):
        x = float(rng.uniform())
        blk = HamiltonianBlock(IndexInterval(-M, M), x, om, lam, pot)
        d = blk.diagonal()
        center = lam * float(pot.eval(x))
        resonant = np.abs(d - center) < 1.5 * math.sqrt(lam)
        if np.any(resonant & (np.abs(sites) > N1)):
            continue
        sp = spectrum(blk).eigenvalues
        inwin = sp[(np.abs(sp - center) < 0.7 * win)]
        if inwin.size >= 2:
            found = (blk, float(inwin[0]), float(inwin[1]))
            break
    if found is None:
        checks.append({"name": "orthogonality_audit", "passed": False,
                       "note": "no two-eigenvalue window instance found"})
    else:
        blk, E1, E2 = found
        r = orthogonality_separation_audit(blk, E1, E2, inner_radius=N1)
        checks.append({"name": "orthogonality_audit",
                       "inner_product": r["inner_product"],
                       "tail_mass": r["tail_mass"],
                       "lipschitz_max": r["lipschitz_max"],
                       "passed": r["orthogonal"] and r["tail_ok"]
                       and r["lipschitz_ok"]})
        r_same = orthogonality_separation_audit(blk, E1, E1, inner_radius=N1)
        checks.append({"name": "orthogonality_audit_equal_energies",
                       "passed": r_same["lipschitz_max"] == 0.0})
    return _report("separation", checks)


def _suite_variation(seed, trials):
    rng = _rng(seed)
    checks = []
    for T in (5, 10, 20):
        delta = 1e-13  # small enough that the cutoff's T^6 growth stays under 64/T
        var = VariationSpec.random(T, delta, rng)
        pts = rng.uniform(size=10000)
        vals = eval_variation(var, pts)
        centers = np.round(pts * T) / T
        outside = np.abs(pts - centers) >= 1.0 / (2 * T)
        support_ok = bool(np.all(vals[outside] == 0.0))
        zero = VariationSpec.zero(T, delta)
        zero_ok = bool(np.all(eval_variation(zero, pts) == 0.0))
        r = verify_variation_derivative_bounds(var, grid_n=4096)
        checks.append({"name": f"variation_T{T}",
                       "support_exact": support_ok, "zero_identity": zero_ok,
                       "deriv_max_ratio": max(r["ratio_to_1_over_T"]),
                       "deriv_ok": r["passed"],
                       "passed": support_ok and zero_ok and r["passed"]})
    # perturbed potential: pointwise change bounded by the single-bump sup
    base = potential_preset("cos")
    T, delta = 10, 1e-6
    var = VariationSpec.random(T, delta, rng)
    pert = perturbed_potential(base, [var])
    g = np.linspace(0, 1, 4097)
    change = np.max(np.abs(pert.eval(g) - base.eval(g)))
    # bumps are disjoint: |W| <= max_m sup |v_m| <= 2.5 delta <= T delta
    checks.append({"name": "perturbation_size",
                   "max_change": float(change), "bound": T * delta,
                   "passed": bool(change <= T * delta)})
    rep = pert.validate()
    checks.append({"name": "perturbed_derivative_consistency",
                   "rel_err": rep["deriv1_rel_err"],
                   "passed": rep["deriv_consistent"]})
    return _report("variation", checks)
