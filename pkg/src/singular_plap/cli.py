"""Command-line entry point.

    singular-plap run --config <path> [--out <dir>]
    singular-plap classify --N <int> --p <real> --alpha <real> --m <real|inf>
    singular-plap bound --N --p --m --norm-f-m --norm-f-1 [--mu --C]

``run`` exits 0 exactly when every asserted flag passes.
"""

from __future__ import annotations

import argparse
import math
import sys

from . import theory
from .config import ExperimentConfig, parse_config
from .errors import SingularPlapError
from .experiments import emit_reports, run_experiment, summary_text


def _float_or_inf(text: str) -> float:
    if text.lower() in ("inf", "+inf", "infinity"):
        return math.inf
    return float(text)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="singular-plap",
        description="Solver experiments for a quasilinear problem with a "
                    "singular lower-order source.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a config-driven experiment")
    run.add_argument("--config", required=True, help="key = value config file")
    run.add_argument("--out", default=None,
                     help="output directory (default: out_dir from the config)")

    cls = sub.add_parser("classify", help="classify a parameter tuple")
    cls.add_argument("--N", type=int, required=True)
    cls.add_argument("--p", type=float, required=True)
    cls.add_argument("--alpha", type=float, required=True)
    cls.add_argument("--m", type=_float_or_inf, required=True)
    cls.add_argument("--out", default=None, help="also write regime.csv here")

    bnd = sub.add_parser("bound", help="iterate the sup-norm bound machinery")
    bnd.add_argument("--N", type=int, required=True)
    bnd.add_argument("--p", type=float, required=True)
    bnd.add_argument("--m", type=_float_or_inf, required=True)
    bnd.add_argument("--norm-f-m", type=float, required=True)
    bnd.add_argument("--norm-f-1", type=float, required=True)
    bnd.add_argument("--mu", type=float, default=1.0)
    bnd.add_argument("--C", type=float, default=1.0)
    bnd.add_argument("--out", default=None, help="also write moser.csv here")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = parse_config(args.config)
            bundle = run_experiment(cfg)
            out_dir = args.out if args.out is not None else cfg.out_dir
            paths = emit_reports(bundle, out_dir)
            sys.stdout.write(summary_text(bundle))
            for path in paths:
                print(f"wrote {path}")
            return 0 if bundle.all_passed else 1

        if args.command == "classify":
            cfg = ExperimentConfig(kind="classify", N=args.N, p=args.p,
                                   alpha=args.alpha, m=args.m)
            bundle = run_experiment(cfg)
            sys.stdout.write(summary_text(bundle))
            if args.out is not None:
                for path in emit_reports(bundle, args.out):
                    print(f"wrote {path}")
            return 0

        if args.command == "bound":
            cfg = ExperimentConfig(kind="bound", N=args.N, p=args.p, m=args.m,
                                   norm_f_m=args.norm_f_m,
                                   norm_f_1=args.norm_f_1,
                                   mu=args.mu, C=args.C)
            bundle = run_experiment(cfg)
            sys.stdout.write(summary_text(bundle))
            if args.out is not None:
                for path in emit_reports(bundle, args.out):
                    print(f"wrote {path}")
            return 0
    except SingularPlapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except theory.OutOfRegime as exc:  # pragma: no cover - subclass above
        print(f"error: {exc}", file=sys.stderr)
        return 2
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
