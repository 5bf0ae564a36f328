"""Command-line front end: simulate, verify, sweep.

Exit codes are fixed: 0 success, 2 configuration error, 3 trajectory or
predictor blow-up, 4 numeric failure (ill-conditioned transition matrices
or a linear-algebra fault), 5 verification failure (residual study ran but
an equation missed its threshold).  The default output root comes from the
DELAYCOMP_OUT_ROOT environment variable, falling back to ./runs.
"""

from __future__ import annotations

import argparse
import itertools
import os
import sys
import time

import numpy as np

from .config import apply_override, config_to_dict, load_config
from .errors import BlowUpError, ConfigError, IllConditionedTransitionError
from .residuals import (analysis_window_start, convergence_study,
                        evaluate_snapshot_residuals)
from .serialize import (snapshot_meta, snapshot_rows, trajectory_rows,
                        versions, write_csv, write_json)
from .simulate import run_scenario, snapshot_kernels

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BLOWUP = 3
EXIT_NUMERIC = 4
EXIT_VERIFY = 5

ENV_OUT_ROOT = "DELAYCOMP_OUT_ROOT"


def _out_dir(args, sub):
    if args.out:
        path = args.out
    else:
        path = os.path.join(os.environ.get(ENV_OUT_ROOT, "runs"), sub)
    os.makedirs(path, exist_ok=True)
    return path


def _manifest(cfg, status, wall, extra=None):
    doc = {
        "config": config_to_dict(cfg),
        "versions": versions(),
        "wall_time": wall,
        "status": status,
    }
    if extra:
        doc.update(extra)
    return doc


def _write_run(result, out):
    header, rows = trajectory_rows(result)
    write_csv(os.path.join(out, "trajectory.csv"), header, rows)
    snapdir = os.path.join(out, "snapshots")
    os.makedirs(snapdir, exist_ok=True)
    for c in result.centers:
        snap = result.snapshots[c]
        snapshot_kernels(result.model, result.controller,
                         result.config.true_delay, snap)
        header, rows = snapshot_rows(snap)
        write_csv(os.path.join(snapdir, f"step_{c:06d}.csv"), header, rows)
        write_json(os.path.join(snapdir, f"step_{c:06d}.json"),
                   snapshot_meta(snap))


def cmd_simulate(args):
    started = time.perf_counter()
    cfg = load_config(args.config)
    out = _out_dir(args, "simulate")
    try:
        result = run_scenario(cfg)
        _write_run(result, out)
    except BlowUpError as exc:
        write_json(os.path.join(out, "manifest.json"),
                   _manifest(cfg, "blow-up", time.perf_counter() - started,
                             {"failure_time": exc.time,
                              "failure": str(exc)}))
        print(f"blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    write_json(os.path.join(out, "manifest.json"),
               _manifest(cfg, "ok", time.perf_counter() - started))
    print(f"simulate: ok ({out})")
    return EXIT_OK


def _parse_ladder(text):
    """Ladder list "M:dt,M:dt,..." (dt optional, defaulting to 1/(10 M))."""
    rungs = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if ":" in part:
            m_s, dt_s = part.split(":", 1)
            rungs.append((int(m_s), float(dt_s)))
        else:
            m = int(part)
            rungs.append((m, 1.0 / (10.0 * m)))
    return rungs


def cmd_verify(args):
    cfg = load_config(args.config)
    ladder = _parse_ladder(args.ladder)
    out = _out_dir(args, "verify")
    report = convergence_study(cfg, ladder, slope_min=args.slope_min,
                               workers=args.workers)
    write_json(os.path.join(out, "report.json"), report.to_dict())
    with open(os.path.join(out, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(report.table() + "\n")
    write_csv(os.path.join(out, "convergence.csv"),
              ["rung", "M", "dt", "equation", "max_norm", "l2_norm"],
              report.csv_rows())
    print(report.table())
    if report.aborted:
        print(f"verify: aborted ({report.failure})", file=sys.stderr)
        return EXIT_BLOWUP
    if not report.passed:
        print("verify: FAIL", file=sys.stderr)
        return EXIT_VERIFY
    print("verify: ok")
    return EXIT_OK


def _sweep_cell(payload):
    cfg, cell_dir, overrides = payload
    started = time.perf_counter()
    os.makedirs(cell_dir, exist_ok=True)
    try:
        result = run_scenario(cfg)
        header, rows = trajectory_rows(result)
        write_csv(os.path.join(cell_dir, "trajectory.csv"), header, rows)
        final_norm = float(np.max(np.abs(result.states[-1])))
        start = analysis_window_start(cfg, result.schedule)
        max_res = 0.0
        for c in result.centers:
            if not (start <= result.times[c] <= cfg.horizon - cfg.dt):
                continue
            res = evaluate_snapshot_residuals(result, c)
            for val in res.values():
                max_res = max(max_res, float(np.max(np.abs(val))))
        write_json(os.path.join(cell_dir, "manifest.json"),
                   _manifest(cfg, "ok", time.perf_counter() - started,
                             {"overrides": overrides,
                              "final_norm": final_norm,
                              "max_residual": max_res}))
        return {"status": "ok", "code": EXIT_OK,
                "final_norm": final_norm, "max_residual": max_res}
    except BlowUpError as exc:
        write_json(os.path.join(cell_dir, "manifest.json"),
                   _manifest(cfg, "blow-up", time.perf_counter() - started,
                             {"overrides": overrides,
                              "failure_time": exc.time,
                              "failure": str(exc)}))
        return {"status": "blow-up", "code": EXIT_BLOWUP,
                "final_norm": float("nan"), "max_residual": float("nan")}
    except (IllConditionedTransitionError, FloatingPointError,
            np.linalg.LinAlgError) as exc:
        write_json(os.path.join(cell_dir, "manifest.json"),
                   _manifest(cfg, "numeric", time.perf_counter() - started,
                             {"overrides": overrides, "failure": str(exc)}))
        return {"status": "numeric", "code": EXIT_NUMERIC,
                "final_norm": float("nan"), "max_residual": float("nan")}


def cmd_sweep(args):
    base = load_config(args.config)
    axes = []
    for setting in args.set or []:
        if "=" not in setting:
            raise ConfigError(f"--set needs key=v1,v2 form, got {setting!r}")
        key, _, vals = setting.partition("=")
        values = [v.strip() for v in vals.split(",") if v.strip()]
        if not values:
            raise ConfigError(f"--set {key} lists no values")
        axes.append((key.strip(), values))
    if not axes:
        raise ConfigError("sweep needs at least one --set axis")
    out = _out_dir(args, "sweep")

    cells = []
    for combo in itertools.product(*(vals for _, vals in axes)):
        overrides = {key: val for (key, _), val in zip(axes, combo)}
        cfg = base
        for key, val in overrides.items():
            cfg = apply_override(cfg, key, val)
        cfg.validate()
        name = "cell_" + "_".join(
            f"{k.replace('.', '-')}-{v}" for k, v in overrides.items())
        cells.append((cfg, os.path.join(out, name), overrides, name))

    payloads = [(cfg, d, ov) for cfg, d, ov, _ in cells]
    if args.workers and args.workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            outcomes = list(pool.map(_sweep_cell, payloads))
    else:
        outcomes = [_sweep_cell(p) for p in payloads]

    keys = [k for k, _ in axes]
    rows = []
    worst = EXIT_OK
    for (cfg, _, overrides, name), outcome in zip(cells, outcomes):
        rows.append([name] + [overrides[k] for k in keys]
                    + [outcome["final_norm"], outcome["max_residual"],
                       outcome["status"]])
        worst = max(worst, outcome["code"])
    write_csv(os.path.join(out, "aggregate.csv"),
              ["cell"] + keys + ["final_norm", "max_residual", "status"],
              rows)
    print(f"sweep: {len(cells)} cells, worst status code {worst} ({out})")
    return worst


def build_parser():
    parser = argparse.ArgumentParser(
        prog="delaycomp",
        description="Predictor-feedback delay compensation: simulate "
                    "closed loops and certify the transformed systems.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one closed-loop scenario")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--out", default=None)
    p_sim.set_defaults(func=cmd_simulate)

    p_ver = sub.add_parser("verify", help="residual convergence study")
    p_ver.add_argument("--config", required=True)
    p_ver.add_argument("--out", default=None)
    p_ver.add_argument("--ladder", default="50,100,200",
                       help="comma list of M or M:dt rungs")
    p_ver.add_argument("--workers", type=int, default=None)
    p_ver.add_argument("--slope-min", type=float, default=1.7,
                       help="required fitted convergence order")
    p_ver.set_defaults(func=cmd_verify)

    p_swp = sub.add_parser("sweep", help="grid of scenario variations")
    p_swp.add_argument("--config", required=True)
    p_swp.add_argument("--out", default=None)
    p_swp.add_argument("--set", action="append",
                       help="key=v1,v2 axis; repeatable")
    p_swp.add_argument("--workers", type=int, default=None)
    p_swp.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BlowUpError as exc:
        print(f"blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except (IllConditionedTransitionError, FloatingPointError,
            np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
