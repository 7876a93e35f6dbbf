"""Command-line interface: run scenarios, verify invariants, sweep, report.

Exit codes: 0 on success, 1 when a check or criterion fails, 2 when a run
aborts on a numerical fault.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .behaviors import FttsmParams, alpha_poly, alpha_power
from .composer import nullspace_projector
from .core import damped_pinv
from .estimator import estimator_settling_bound
from .scenario import ScenarioConfig, bundled_scenarios, load_scenario, load_series, run_scenario
from .verify import (
    MonitorReport,
    VerifyConfig,
    lemma_band_check,
    monitor_v_e,
    monitor_v_io,
    power_sum_check,
    predict_bounds,
)

# Published reference values for the flagship tuning; reports show them next
# to measurements for orientation, they are not acceptance thresholds.
REFERENCE_TARGETS = {
    "settling_time_s": 0.5,
    "precision_20s": 1.126e-2,
    "precision_45s": 8.523e-3,
}


def _apply_overrides(cfg, args):
    raw = cfg.to_dict()
    if args.dt is not None:
        raw["dt_s"] = args.dt
    if args.duration is not None:
        raw["duration_s"] = args.duration
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.sample_every is not None:
        raw["sample_every"] = args.sample_every
    if getattr(args, "estimate_scale", None) is not None:
        raw["estimate_scale"] = args.estimate_scale
    return ScenarioConfig.from_dict(raw)


def _cmd_run(args):
    cfg = _apply_overrides(load_scenario(args.scenario), args)
    out = Path(args.out) if args.out else Path("runs") / cfg.name
    result = run_scenario(cfg, out)
    m = result.metrics
    print(f"run {cfg.name}: {m['samples']} samples in {result.wall_s:.1f} s -> {out}")
    if m["settling_time_max_s"] is not None:
        print(f"  settling (max over agents): {m['settling_time_max_s']:.3f} s")
    for t_q, entry in m["precision_index"].items():
        print(f"  mean error at {entry['at_s']:.1f} s: {entry['mean_error_m']:.3e} m")
    md = m["min_distance_m"]
    if md["overall"] is not None:
        after = "n/a" if md["after_settling"] is None else f"{md['after_settling']:.4f}"
        print(f"  min distance: overall {md['overall']:.4f} m, after settling {after} m")
    est = m["estimator"]
    if est["settling_time_s"] is not None:
        print(
            f"  estimator settling: {est['settling_time_s']:.3f} s "
            f"(final max error {est['final_max_error_m']:.2e} m)"
        )
    if result.fault:
        print(f"  FAULT: {result.fault}")
        return 2
    return 0


def _cmd_scenarios(_args):
    for name in bundled_scenarios():
        print(name)
    return 0


def _random_fttsm(rng):
    r0 = float(rng.uniform(0.55, 0.95))
    r1 = float(rng.uniform(1.0 / r0 + 0.05, 3.0))
    r2 = float(rng.uniform(0.05, 0.95 / r0))
    return FttsmParams(
        beta1=float(rng.uniform(0.1, 5.0)),
        beta2=float(rng.uniform(0.1, 5.0)),
        r0=r0,
        r1=r1,
        r2=r2,
        phi_s=float(10.0 ** rng.uniform(-4.0, -0.4)),
    )


def _cmd_verify(args):
    rng = np.random.default_rng(args.seed)
    failures = 0

    worst = 0.0
    for _ in range(args.continuity_sets):
        p = _random_fttsm(rng)
        for e in (p.phi_s, -p.phi_s):
            a_pow = float(alpha_power(e, p))
            a_pol = float(alpha_poly(e, p))
            worst = max(worst, abs(a_pow - a_pol) / max(1e-300, abs(a_pow)))
    ok = worst <= 1e-9
    failures += not ok
    print(f"branch continuity: worst relative mismatch {worst:.3e} "
          f"over {args.continuity_sets} parameter sets -> {'PASS' if ok else 'FAIL'}")

    worst = 0.0
    for _ in range(args.projector_sets):
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        jac = direction * rng.uniform(0.5, 10.0)
        pinv = damped_pinv(jac)
        nmat = nullspace_projector(jac)
        worst = max(
            worst,
            float(np.abs(nmat @ nmat - nmat).max()),
            float(np.abs(nmat @ pinv).max()),
            float(np.abs(jac @ nmat).max()),
        )
    ok = worst <= 1e-10
    failures += not ok
    print(f"projector algebra: worst residual {worst:.3e} "
          f"over {args.projector_sets} Jacobians -> {'PASS' if ok else 'FAIL'}")

    violations, deficit = power_sum_check(rng, args.power_sum_sets)
    ok = violations == 0
    failures += not ok
    print(f"power-sum comparisons: {violations} violations "
          f"(worst deficit {deficit:.3e}) over {args.power_sum_sets} draws -> "
          f"{'PASS' if ok else 'FAIL'}")

    return 1 if failures else 0


def _cmd_sweep(args):
    cfg = load_scenario(args.scenario)
    scales = [float(s) for s in args.scale_ic.split(",")]
    t_e, _, _ = estimator_settling_bound(cfg.graph(), cfg.estimator)
    print(f"estimator settling bound for this graph: {t_e:.3f} s")
    failures = 0
    for scale in scales:
        raw = cfg.to_dict()
        raw["estimate_scale"] = scale
        raw["name"] = f"{cfg.name}_x{scale:g}"
        scaled = ScenarioConfig.from_dict(raw)
        out = Path(args.out) if args.out else Path("runs")
        result = run_scenario(scaled, out / scaled.name)
        est = result.metrics["estimator"]
        settle = est["settling_time_s"]
        ok = (
            result.fault is None
            and settle is not None
            and settle <= t_e
            and est["final_max_error_m"] <= cfg.est_tol_m
        )
        failures += not ok
        settle_txt = "never" if settle is None else f"{settle:.3f} s"
        print(
            f"  scale x{scale:g}: settled {settle_txt}, "
            f"final max error {est['final_max_error_m']:.2e} m -> "
            f"{'PASS' if ok else 'FAIL'}"
        )
    return 1 if failures else 0


def _cmd_report(args):
    run_dir = Path(args.run_dir)
    metrics = json.loads((run_dir / "metrics.json").read_text())
    manifest = json.loads((run_dir / "manifest.json").read_text())
    cfg = ScenarioConfig.from_dict(manifest["config"])
    print(f"scenario {manifest['name']}  (config {manifest['config_sha256'][:12]}, "
          f"seed {manifest['seed']})")
    print(f"  rows {manifest['rows']}, wall {metrics['wall_s']:.1f} s")
    if metrics.get("fault"):
        print(f"  FAULT: {metrics['fault']}")
    settle = metrics["settling_time_max_s"]
    if settle is not None:
        print(f"  settling (max over agents): {settle:.3f} s "
              f"[design target {REFERENCE_TARGETS['settling_time_s']} s]")
    for key, target in (("20.0", "precision_20s"), ("45.0", "precision_45s")):
        entry = metrics["precision_index"].get(key)
        if entry:
            print(f"  mean error at {entry['at_s']:.1f} s: {entry['mean_error_m']:.3e} m "
                  f"[design target {REFERENCE_TARGETS[target]:.3e}]")
    md = metrics["min_distance_m"]
    if md["overall"] is not None:
        after = "n/a" if md["after_settling"] is None else f"{md['after_settling']:.4f}"
        print(f"  min distance: overall {md['overall']:.4f} m, after settling {after} m")
    est = metrics["estimator"]
    if est["settling_time_s"] is not None:
        print(f"  estimator settling {est['settling_time_s']:.3f} s, "
              f"final max error {est['final_max_error_m']:.2e} m")
    for name, entry in predict_bounds(cfg).items():
        print(f"  predicted {name}: " + ", ".join(f"{k}={v:.4g}" for k, v in entry.items()))

    code = 0
    if metrics.get("fault"):
        code = 2
    if args.monitors:
        series = load_series(run_dir / "series.csv")
        vcfg = VerifyConfig()
        reports: list[MonitorReport] = []
        if cfg.estimator_enabled:
            reports.append(monitor_v_e(series, cfg, vcfg=vcfg))
        if cfg.lambda_policy == "fixed":
            reports.append(monitor_v_io(series, cfg, vcfg=vcfg))
        for rep in reports:
            ok = rep.passed(vcfg)
            print(f"  monitor {rep.summary()} -> {'PASS' if ok else 'FAIL'}")
            if not ok and code == 0:
                code = 1
        if cfg.mode == "full":
            ok, rows = lemma_band_check(series, cfg)
            for row in rows:
                print(
                    f"  band box agent {row['agent']}: pos {row['pos_err_max']:.4f} "
                    f"<= {row['pos_bound']:.4f}, vel {row['vel_err_max']:.4f} "
                    f"<= {row['vel_bound']:.4f} -> "
                    f"{'PASS' if row['passed'] else 'FAIL'}"
                )
            if not ok and code == 0:
                code = 1
    return code


def build_parser():
    parser = argparse.ArgumentParser(
        prog="nsbsim",
        description="Deterministic multi-agent behavioral control simulator.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario and write csv/metrics/manifest")
    p_run.add_argument("scenario", help="bundled scenario name or path to a JSON file")
    p_run.add_argument("--dt", type=float, default=None, help="integration step override [s]")
    p_run.add_argument("--duration", type=float, default=None, help="run length override [s]")
    p_run.add_argument("--seed", type=int, default=None, help="RNG seed override")
    p_run.add_argument("--sample-every", type=int, default=None, help="log every k-th step")
    p_run.add_argument("--estimate-scale", type=float, default=None,
                       help="scale factor on the initial estimation error")
    p_run.add_argument("--out", default=None, help="output directory (default runs/<name>)")
    p_run.set_defaults(func=_cmd_run)

    p_sc = sub.add_parser("scenarios", help="list bundled scenarios")
    p_sc.set_defaults(func=_cmd_scenarios)

    p_ver = sub.add_parser("verify", help="randomized checks of the core invariants")
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.add_argument("--continuity-sets", type=int, default=1000)
    p_ver.add_argument("--projector-sets", type=int, default=10000)
    p_ver.add_argument("--power-sum-sets", type=int, default=100000)
    p_ver.set_defaults(func=_cmd_verify)

    p_sw = sub.add_parser("sweep", help="rerun a scenario over initial-error scalings")
    p_sw.add_argument("scenario")
    p_sw.add_argument("--scale-ic", default="1,10,100",
                      help="comma-separated scale factors (default 1,10,100)")
    p_sw.add_argument("--out", default=None, help="output root (default runs/)")
    p_sw.set_defaults(func=_cmd_sweep)

    p_rep = sub.add_parser("report", help="summarize a finished run directory")
    p_rep.add_argument("run_dir")
    p_rep.add_argument("--monitors", action="store_true",
                       help="re-audit the logged series with the Lyapunov monitors")
    p_rep.set_defaults(func=_cmd_report)
    return parser


def main(argv=None):
    logging.basicConfig(
        level=os.environ.get("NSB_LOG_LEVEL", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s",
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        return 0


if __name__ == "__main__":
    sys.exit(main())
