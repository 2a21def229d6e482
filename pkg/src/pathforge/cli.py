"""Command-line interface.

Exit status: 0 on success, 1 on usage errors, 2 on data or processing
errors.  All outputs land under ``--out``; a short human-readable summary
goes to standard output.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import io
from .config import SessionConfig, apply_overrides, load_config
from .errors import PathforgeError
from .radius_mse import (
    VALIDATION_GRID,
    RadialModel,
    monte_carlo_mse,
    mse_closed_form,
    validate_lemmas,
)
from .simulate import (
    PROTOCOL_CONFIGS,
    anesthetized_params,
    evaluate,
    protocol_params,
    simulate_path,
)

SESSION_COMMANDS = {
    "smooth": ("smoothed", "arrests"),
    "arrests": ("arrests",),
    "segments": ("segments", "episodes"),
    "endpoints": ("endpoints",),
    "boundary": ("boundary",),
    "wall-distance": ("boundary", "walldist"),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="pathforge",
                     description="Robust path smoothing, arrest detection and "
                                 "arena-boundary estimation")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_input):
        p.add_argument("--config", help="key=value config file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one config key (repeatable)")
        if needs_input:
            p.add_argument("--input", required=True, help="session CSV (frame,t,x,y)")

    for name in SESSION_COMMANDS:
        common(sub.add_parser(name, help=f"compute {name} outputs"), True)

    p = sub.add_parser("simulate", help="generate one simulated session")
    common(p, False)
    p.add_argument("--stationary", action="store_true",
                   help="stationary-animal scenario instead of the bout protocol")

    p = sub.add_parser("evaluate", help="score smoothers on simulated ensembles")
    common(p, False)
    p.add_argument("--reps", type=int, help="replications per configuration")
    p.add_argument("--table1", action="store_true",
                   help="run the stationary ensemble instead of the 5-config protocol")

    p = sub.add_parser("mse-table", help="closed-form vs Monte-Carlo radius MSE table")
    common(p, False)
    p.add_argument("--reps", type=int, default=20000)

    p = sub.add_parser("validate-mse", help="3-SE validation gate for the MSE formulas")
    common(p, False)
    p.add_argument("--reps", type=int, default=100_000)
    return parser


def _load(args) -> SessionConfig:
    config = SessionConfig()
    if args.config:
        config = load_config(args.config, config)
    if args.set:
        config = apply_overrides(config, args.set)
    if args.seed is not None:
        config = apply_overrides(config, [f"seed={args.seed}"])
    return config


def _cmd_session(args, config: SessionConfig) -> int:
    session = io.parse_session(args.input, grid_cm=config.grid_cm)
    outputs = SESSION_COMMANDS[args.command]
    bundle = io.run_pipeline(config, session, args.out, outputs=outputs,
                             subcommand=args.command, input_path=args.input)
    print(f"{args.command}: {len(session)} frames -> "
          f"{', '.join(sorted(bundle.files))} in {bundle.out_dir}")
    for message in bundle.warnings:
        print(f"warning: {message}", file=sys.stderr)
    return 0


def _cmd_simulate(args, config: SessionConfig) -> int:
    params = config.sim_params(stationary=args.stationary)
    sim = simulate_path(params, config.seed)
    os.makedirs(args.out, exist_ok=True)
    out_csv = os.path.join(args.out, "simulated.csv")
    io.write_simulated(out_csv, sim)
    io.write_manifest(args.out, "simulate", config, [out_csv])
    print(f"simulate: {len(sim)} frames, true distance "
          f"{sim.truth.distance_m:.2f} m, rest share {sim.truth.proportion_arrest:.3f}, "
          f"{sim.outlier_idx.size} injected outliers -> {out_csv}")
    return 0


def _method_table(metrics_list, labels):
    methods = metrics_list[0].methods
    lines = []
    header = f"{'':14s}" + "".join(f"{label:>18s}" for label in labels)
    lines.append(header)
    lines.append(f"{'true dist m':14s}"
                 + "".join(f"{np.mean(m.theta_true):18.1f}" for m in metrics_list))
    for method in methods:
        lines.append(f"{method + ' dist':14s}"
                     + "".join(f"{m.mean_theta(method):18.1f}" for m in metrics_list))
        lines.append(f"{method + ' MSE':14s}"
                     + "".join(f"{m.mse_theta(method):18.3g}" for m in metrics_list))
    lines.append(f"{'true p':14s}"
                 + "".join(f"{np.mean(m.p_true):18.3f}" for m in metrics_list))
    for method in methods:
        lines.append(f"{method + ' p':14s}"
                     + "".join(f"{m.mean_p(method):18.3f}" for m in metrics_list))
        lines.append(f"{method + ' MSE(p)':14s}"
                     + "".join(f"{m.mse_p(method):18.2g}" for m in metrics_list))
    return "\n".join(lines)


def _cmd_evaluate(args, config: SessionConfig) -> int:
    reps = args.reps or config.sim_reps
    analysis = config.analysis_params()
    if args.table1:
        runs = [(anesthetized_params(config.fps), "stationary")]
    else:
        runs = [(protocol_params(sigma, p, config.sim_params()),
                 f"s={sigma} p={p}") for sigma, p in PROTOCOL_CONFIGS]
    metrics_list = [evaluate(params, reps, config.seed, analysis)
                    for params, _ in runs]
    os.makedirs(args.out, exist_ok=True)
    metrics_csv = os.path.join(args.out, "metrics.csv")
    reps_csv = os.path.join(args.out, "replications.csv")
    io.write_metrics(metrics_csv, metrics_list)
    io.write_replications(reps_csv, metrics_list)
    io.write_manifest(args.out, "evaluate", config, [metrics_csv, reps_csv],
                      seed=config.seed)
    print(_method_table(metrics_list, [label for _, label in runs]))
    print(f"evaluate: {reps} replications x {len(runs)} configuration(s) -> "
          f"{metrics_csv}")
    return 0


def _cmd_mse_table(args, config: SessionConfig) -> int:
    rows = validate_lemmas(reps=max(1000, args.reps), seed=config.seed)
    os.makedirs(args.out, exist_ok=True)
    out_csv = os.path.join(args.out, "mse_table.csv")
    io._write_csv(out_csv,
                  ["R", "n", "N", "law", "p", "estimator", "closed_form",
                   "monte_carlo", "se", "pass"],
                  [(io.fmt(m.R), m.n, m.N, m.law, "" if m.p is None else io.fmt(m.p),
                    est, io.fmt(closed), io.fmt(mc.mse), io.fmt(mc.se),
                    int(passed))
                   for m, est, closed, mc, passed in rows])
    io.write_manifest(args.out, "mse-table", config, [out_csv])
    print(f"{'R':>7} {'n':>4} {'N':>4} {'law':>8} {'p':>4} {'estimator':>10} "
          f"{'closed':>12} {'monte carlo':>12} {'se':>10} pass")
    for m, est, closed, mc, passed in rows:
        p_txt = "-" if m.p is None else f"{m.p:g}"
        print(f"{m.R:7g} {m.n:4d} {m.N:4d} {m.law:>8} {p_txt:>4} {est:>10} "
              f"{closed:12.5g} {mc.mse:12.5g} {mc.se:10.2g} {'ok' if passed else 'FAIL'}")
    return 0


def _cmd_validate_mse(args, config: SessionConfig) -> int:
    rows = validate_lemmas(reps=max(1000, args.reps), seed=config.seed)
    failures = [row for row in rows if not row[-1]]
    model = RadialModel(R=125.0, n=6, N=3)
    mc = monte_carlo_mse(model, "corrected", reps=max(1000, args.reps),
                         seed=(config.seed, 99))
    unbiased = abs(mc.mean_estimate - model.R) <= 3.0 * mc.se_mean
    os.makedirs(args.out, exist_ok=True)
    out_csv = os.path.join(args.out, "validation.csv")
    io._write_csv(out_csv, ["check", "pass"],
                  [(f"{m.law} R={m.R:g} n={m.n} N={m.N} {est}", int(passed))
                   for m, est, _, _, passed in rows]
                  + [("corrected estimator unbiased", int(unbiased))])
    io.write_manifest(args.out, "validate-mse", config, [out_csv])
    print(f"validate-mse: {len(rows)} formula checks on {len(VALIDATION_GRID)} "
          f"grid points, {len(failures)} failures; "
          f"unbiasedness {'ok' if unbiased else 'FAIL'}")
    if failures or not unbiased:
        return 2
    return 0


def cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 1
    except SystemExit as err:  # --help
        return 0 if err.code in (0, None) else 1
    try:
        config = _load(args)
        if args.command in SESSION_COMMANDS:
            return _cmd_session(args, config)
        if args.command == "simulate":
            return _cmd_simulate(args, config)
        if args.command == "evaluate":
            return _cmd_evaluate(args, config)
        if args.command == "mse-table":
            return _cmd_mse_table(args, config)
        if args.command == "validate-mse":
            return _cmd_validate_mse(args, config)
        raise UsageError(f"unknown command {args.command!r}")
    except UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return 1
    except (PathforgeError, OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


def main():
    sys.exit(cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
