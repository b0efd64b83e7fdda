"""Command-line entry point.

Subcommands:
  run          config-driven Monte Carlo coverage experiment
  verify-tails Monte Carlo falsification of the tail inequalities
  bounds       batch evaluation of the risk bounds (no sampling)
  sketch-solve rotate + subsample + solve a least squares problem
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import experiment, sketch
from .errors import RandesignError
from .rngstream import TAG_SKETCH, derive_stream


def _add_global_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="master seed (u64)")
    parser.add_argument("--trials", type=int, default=None, help="trial count override")
    parser.add_argument("--out", type=Path, default=None, help="output directory")
    parser.add_argument("--threads", type=int, default=None, help="worker threads")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="randesign",
        description="Finite-sample risk bounds for random-design least squares "
                    "and ridge regression: experiments, tail verification, and "
                    "a rotation-plus-subsampling sketch solver.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a coverage experiment from a config file")
    p_run.add_argument("config", type=Path, help="experiment config JSON")
    _add_global_flags(p_run)

    p_vt = sub.add_parser("verify-tails", help="verify tail inequalities by Monte Carlo")
    p_vt.add_argument("scenario", type=Path, help="scenario JSON")
    _add_global_flags(p_vt)

    p_b = sub.add_parser("bounds", help="evaluate risk bounds for a scenario list")
    p_b.add_argument("params", type=Path, help="JSON list of bound scenarios")
    _add_global_flags(p_b)

    p_s = sub.add_parser("sketch-solve", help="rotate, subsample, and solve Ax ~ b")
    p_s.add_argument("design", type=Path, help="CSV of A (no header, rows = observations)")
    p_s.add_argument("response", type=Path, help="CSV of b (no header)")
    p_s.add_argument("--n", type=int, required=True, help="subsample size")
    p_s.add_argument("--delta", type=float, default=0.05, help="solve failure probability")
    p_s.add_argument("--delta-prime", type=float, default=0.05,
                     help="rotation failure probability")
    p_s.add_argument("--rotation", choices=["hadamard", "orthogonal"],
                     default="hadamard")
    _add_global_flags(p_s)

    return parser


def _cmd_run(args) -> int:
    with open(args.config) as fh:
        doc = json.load(fh)
    config = experiment.config_from_dict(
        doc, out_dir=args.out, seed=args.seed, trials=args.trials,
        threads=args.threads,
    )
    summary = experiment.run_experiment(config)
    json.dump(summary, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


def _cmd_verify_tails(args) -> int:
    with open(args.scenario) as fh:
        doc = json.load(fh)
    scenarios = doc if isinstance(doc, list) else [doc]
    ok = True
    reports = []
    for scenario in scenarios:
        report = experiment.verify_tails(scenario, trials=args.trials, seed=args.seed)
        ok = ok and report["ok"]
        reports.append(report)
    out = reports if len(reports) > 1 else reports[0]
    json.dump(out, sys.stdout, indent=2)
    sys.stdout.write("\n")
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        with open(args.out / "tails.json", "w") as fh:
            json.dump(out, fh, indent=2)
    return 0 if ok else 1


def _cmd_bounds(args) -> int:
    with open(args.params) as fh:
        doc = json.load(fh)
    scenarios = doc if isinstance(doc, list) else [doc]
    for record in experiment.bounds_stream(scenarios):
        sys.stdout.write(json.dumps(record) + "\n")
    return 0


def _cmd_sketch_solve(args) -> int:
    a = np.loadtxt(args.design, delimiter=",", ndmin=2)
    b = np.loadtxt(args.response, delimiter=",").ravel()
    seed = args.seed if args.seed is not None else 0
    kind = sketch.HADAMARD if args.rotation == "hadamard" else sketch.ORTHOGONAL
    rotation = sketch.sample_rotation(kind, a.shape[0], derive_stream(seed, 0, TAG_SKETCH))
    rot_a, rot_b = sketch.apply_rotation(rotation, a, b)
    plan = sketch.SketchPlan(rotation=rotation, n_sub=args.n, delta=args.delta,
                             delta_prime=args.delta_prime)
    _, report = sketch.subsample_solve(plan, rot_a, rot_b,
                                       derive_stream(seed, 1, TAG_SKETCH))
    json.dump(report.to_dict(), sys.stdout, indent=2)
    sys.stdout.write("\n")
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        with open(args.out / "sketch.json", "w") as fh:
            json.dump(report.to_dict(), fh, indent=2)
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "verify-tails": _cmd_verify_tails,
    "bounds": _cmd_bounds,
    "sketch-solve": _cmd_sketch_solve,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except RandesignError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
