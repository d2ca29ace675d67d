"""Command-line experiment runner.

    qps <command> --config <file> [--seed N] [--strict] [--out DIR]

Commands: lyapunov, verify, multiscale, variation.  Config files are
JSON with a documented schema (see README); unknown keys are rejected.
Outputs are CSV (sweeps, one row per grid point, '#'-prefixed header
comments carrying the resolved config and version) and JSON (structured
reports, stable key order).  Exit codes: 0 pass, 1 a validated property
failed, 2 usage/config error.  QPS_THREADS caps the sweep worker pool.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .config import ConfigError, ExperimentConfig, resolve_omega
from .cocycle import lyapunov_estimate
from .errors import AuditFailure, QpsError
from .multiscale import ScaleParams, multiscale_run, morse_sample, first_scale_branch
from .potential import (
    VariationSpec,
    perturbed_potential,
    potential_preset,
    verify_variation_derivative_bounds,
)
from .suites import run_suite


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("QPS_THREADS", "1")))
    except ValueError:
        return 1


def _potential_from_config(cfg: dict):
    pc = cfg["potential"]
    return potential_preset(pc["preset"], pc.get("coeffs"))


def _write_json(path: str, payload: dict, cfg: ExperimentConfig):
    payload = dict(payload)
    payload["config"] = cfg.resolved
    payload["version"] = __version__
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=1)
        fh.write("\n")


def _write_csv(path: str, header: list[str], rows, cfg: ExperimentConfig):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# qps-version: {__version__}\n")
        fh.write(f"# config: {cfg.json()}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(repr(v) if isinstance(v, float) else str(v)
                              for v in row) + "\n")


def cmd_lyapunov(cfg: ExperimentConfig, outdir: str) -> int:
    c = cfg.resolved
    pot = _potential_from_config(c)
    omega = resolve_omega(c["omega"])
    lam = float(c["lambda"])
    if "E_values" in c and c["E_values"]:
        es = [float(v) for v in c["E_values"]]
    else:
        es = list(np.linspace(c["E_min"], c["E_max"], c["E_count"]))

    def one(i_e):
        i, E = i_e
        est = lyapunov_estimate(omega, E, lam, pot, n=c["n"],
                                x_grid=c["x_samples"], seed=c["seed"] + i)
        return (E, est.value, est.std_error)

    nt = _threads()
    if nt > 1:
        with ThreadPoolExecutor(max_workers=nt) as pool:
            rows = list(pool.map(one, enumerate(es)))
    else:
        rows = [one(ie) for ie in enumerate(es)]
    _write_csv(os.path.join(outdir, "lyapunov.csv"),
               ["E", "L_estimate", "std_error"], rows, cfg)
    min_L = min(r[1] for r in rows)
    thresh = 0.25 * math.log(lam) if lam > 1 else float("-inf")
    print(f"lyapunov: {len(rows)} energies, min L = {min_L:.6f}, "
          f"(1/4) log lambda = {thresh:.6f}, "
          f"{'above' if min_L >= thresh else 'BELOW'} threshold")
    return 0


def cmd_verify(cfg: ExperimentConfig, outdir: str) -> int:
    c = cfg.resolved
    report = run_suite(c["suite"], seed=c["seed"], trials=c.get("trials"))
    _write_json(os.path.join(outdir, f"verify_{c['suite']}.json"), report, cfg)
    n_fail = sum(1 for chk in report["checks"]
                 if not (chk.get("passed", False) or chk.get("gate", False)))
    print(f"verify {c['suite']}: {len(report['checks'])} checks, "
          f"{n_fail} failed")
    if c.get("strict") and n_fail:
        return 1
    return 0


def cmd_multiscale(cfg: ExperimentConfig, outdir: str) -> int:
    c = cfg.resolved
    pot = _potential_from_config(c)
    sc = c["scale"]
    params = ScaleParams(N1=sc["N1"], tau=sc["tau"], vartheta=sc["vartheta"],
                         beta=sc["beta"], gamma=sc["gamma"], nu=sc["nu"],
                         A_exp=sc["A_exp"], cap=sc["cap"],
                         n_scales=sc["n_scales"])
    try:
        states = multiscale_run(params, float(c["lambda"]), pot,
                                omega_grid=c["omega_grid"], x_grid=c["x_grid"],
                                seed=c["seed"], strict=c["strict"],
                                h4_samples=c["h4_samples"])
    except AuditFailure as e:
        print(f"multiscale: STRICT FAILURE {e.hypothesis} at scale {e.scale}")
        _write_json(os.path.join(outdir, "multiscale.json"),
                    {"failed_hypothesis": e.hypothesis, "scale": e.scale}, cfg)
        return 1
    payload = {"schedule": params.schedule, "scales": []}
    rows = []
    for st in states:
        audits = {k: {kk: vv for kk, vv in v.items() if not isinstance(vv, np.ndarray)}
                  for k, v in st.audit.items()} if st.audit else {}
        payload["scales"].append({
            "s": st.s,
            "N": st.N,
            "measures": {k: v for k, v in st.measures.items()
                         if k != "row_alive"},
            "audit": audits,
            "D_rects": st.D_s.rect_list().tolist(),
            "Omega_intervals": st.Omega_s.intervals.tolist(),
            "E_window_intervals": st.E_window.intervals.tolist(),
        })
        for br in st.branches:
            for (x, om), smp in sorted(br.samples.items()):
                rows.append((st.s, x, om, smp.E, smp.dE_dx, smp.dE_domega,
                             smp.d2E_dx2 if smp.d2E_dx2 is not None else float("nan"),
                             smp.residual, smp.decay_margin))
    _write_json(os.path.join(outdir, "multiscale.json"), payload, cfg)
    _write_csv(os.path.join(outdir, "multiscale_branches.csv"),
               ["scale", "x", "omega", "E", "dE_dx", "dE_domega", "d2E_dx2",
                "residual", "decay_margin"], rows, cfg)
    for st in states:
        flags = {k: v.get("passed") for k, v in st.audit.items()} if st.audit else {}
        print(f"multiscale scale {st.s} (N={st.N}): "
              f"mes D = {st.measures['mes_D']:.6f}, audits {flags}")
    return 0


def cmd_variation(cfg: ExperimentConfig, outdir: str) -> int:
    c = cfg.resolved
    rng = np.random.Generator(np.random.Philox(key=c["seed"]))
    var = VariationSpec.random(c["T"], float(c["delta"]), rng)
    deriv_report = verify_variation_derivative_bounds(var, grid_n=c["grid_n"])
    payload = {"T": c["T"], "delta": c["delta"],
               "derivative_bounds": deriv_report}
    mc = c.get("morse")
    if mc:
        lam = float(mc["lambda"])
        pot = potential_preset("cos")
        pert = perturbed_potential(pot, [var])
        omega = resolve_omega(mc["omega"])
        branch = first_scale_branch(mc["x"], omega, lam, pert, mc["N1"])
        ms = morse_sample(branch, var, eps=float(mc["eps"]),
                          n_samples=mc["samples"], seed=c["seed"] + 1,
                          lam=lam, potential=pert)
        payload["morse_sample"] = ms
    _write_json(os.path.join(outdir, "variation.json"), payload, cfg)
    ok = deriv_report["passed"] and payload.get("morse_sample", {}).get("passed", True)
    print(f"variation: derivative ratio "
          f"{max(deriv_report['ratio_to_1_over_T']):.4g} "
          f"(threshold {deriv_report['threshold_const']}), "
          f"{'pass' if ok else 'FAIL'}")
    return 0 if ok or not c.get("strict") else 1


_COMMANDS = {
    "lyapunov": cmd_lyapunov,
    "verify": cmd_verify,
    "multiscale": cmd_multiscale,
    "variation": cmd_variation,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qps",
        description="Quasi-periodic Schrodinger operator experiments")
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True, help="JSON config file")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--strict", action="store_true", default=None)
    parser.add_argument("--out", default=".", help="output directory")
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 2
    try:
        cfg = ExperimentConfig.load(args.config, args.command,
                                    seed=args.seed, strict=args.strict)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    os.makedirs(args.out, exist_ok=True)
    try:
        return _COMMANDS[args.command](cfg, args.out)
    except QpsError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
