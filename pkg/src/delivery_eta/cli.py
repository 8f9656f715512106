"""Command-line entry point: ``delivery-eta <command> ...``.

Exit codes: 0 success, 1 validation error, 2 data error, 3 internal error.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys

from .config import ConfigError, load_config
from .features import EncodingError
from .ingest import ExtractionError, SchemaError
from .models.base import ColumnMismatchError, ModelConfigError

EXIT_OK, EXIT_VALIDATION, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3
DATA_STAGES = ("ingest", "clean", "features", "split", "select")
_DATA_ERRORS = (SchemaError, ExtractionError, EncodingError, ColumnMismatchError, OSError, UnicodeDecodeError)

log = logging.getLogger("delivery_eta")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_VALIDATION)


def _config(args):
    cfg = load_config(args.config)
    if getattr(args, "dataset", None):
        cfg.dataset = args.dataset
    if getattr(args, "output", None):
        cfg.output_dir = args.output
    if getattr(args, "jobs", None):
        cfg.n_jobs = args.jobs
    return cfg.validate()


def _print_json(obj):
    print(json.dumps(obj, indent=2, sort_keys=True))


def cmd_train(args):
    from .runner import run_experiment

    cfg = _config(args)
    report = run_experiment(cfg)
    print(f"{'model':<14} {'mse':>10} {'r2':>8} {'cv_mean':>10} {'cv_std':>8}")
    for row in report["leaderboard"]:
        print(
            f"{row['model']:<14} {row['holdout']['mse']:>10.4f} {row['holdout']['r2']:>8.4f} "
            f"{row['cv']['mean_mse']:>10.4f} {row['cv']['std_mse']:>8.4f}"
        )
    print(f"wrote {cfg.output_dir}")


def cmd_ablate(args):
    from .runner import run_ablation

    cfg = _config(args)
    report = run_ablation(cfg, args.model, args.groups)
    base = report["baseline"]["metrics"]
    print(f"baseline {args.model}: mse {base['mse']:.4f} r2 {base['r2']:.4f}")
    for g in report["groups"]:
        print(f"- {g['group']:<11} mse {g['metrics']['mse']:.4f} ({g['pct_delta_mse']:+.1f}%)  r2 {g['metrics']['r2']:.4f} ({g['delta_r2']:+.4f})")
    print(f"wrote {cfg.output_dir}")


def cmd_compare(args):
    from .runner import run_compare

    cfg = _config(args)
    res = run_compare(cfg, args.a, args.b)
    _print_json(dataclasses.asdict(res))


def cmd_predict(args):
    from .runner import predict_cli

    _print_json(predict_cli(args.model, args.encodings, args.input, args.output, args.rejects))


def cmd_summarize(args):
    from .runner import summarize

    out = summarize(args.csv)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            json.dump(out, fh, indent=2, sort_keys=True)
    else:
        _print_json(out)


def cmd_synth(args):
    from .synth import synth_csv

    synth_csv(
        args.output,
        n=args.rows,
        seed=args.seed,
        include_target=not args.no_target,
        signal=args.signal,
        noise=args.noise,
        missing_rate=args.missing_rate,
    )
    print(f"wrote {args.rows} rows to {args.output}")


def build_parser():
    p = _Parser(prog="delivery-eta", description="Delivery-time regression experiments.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def with_config(name, help):
        s = sub.add_parser(name, help=help)
        s.add_argument("config", help="JSON experiment config")
        s.add_argument("--dataset", help="override the config's dataset path")
        s.add_argument("--output", help="override the config's output directory")
        s.add_argument("--jobs", type=int, help="worker threads")
        return s

    s = with_config("train", "tune, fit and score every configured model")
    s.set_defaults(func=cmd_train)
    s = with_config("ablate", "drop feature groups one at a time for one model")
    s.add_argument("--model", required=True)
    s.add_argument("--groups", nargs="+", help="feature groups (default: config ablation_groups)")
    s.set_defaults(func=cmd_ablate)
    s = with_config("compare", "paired t-test between two models on the hold-out rows")
    s.add_argument("--a", required=True)
    s.add_argument("--b", required=True)
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("predict", help="score new orders with a saved model")
    s.add_argument("--model", required=True)
    s.add_argument("--encodings", required=True)
    s.add_argument("--input", required=True)
    s.add_argument("--output", required=True)
    s.add_argument("--rejects", help="rejects CSV (default: <output>.rejects.csv)")
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("summarize", help="exploratory summary tables for a raw CSV")
    s.add_argument("csv")
    s.add_argument("--output", help="write JSON here instead of stdout")
    s.set_defaults(func=cmd_summarize)

    s = sub.add_parser("synth", help="write a synthetic dataset in the raw layout")
    s.add_argument("--rows", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--signal", choices=("full", "traffic_only"), default="full")
    s.add_argument("--noise", type=float, default=2.0)
    s.add_argument("--missing-rate", type=float, default=0.0)
    s.add_argument("--no-target", action="store_true")
    s.add_argument("--output", required=True)
    s.set_defaults(func=cmd_synth)
    return p


def exit_code_for(exc) -> int:
    from .runner import StageError

    if isinstance(exc, (ConfigError, ModelConfigError)):
        return EXIT_VALIDATION
    if isinstance(exc, StageError):
        if isinstance(exc.cause, (ConfigError, ModelConfigError)):
            return EXIT_VALIDATION
        if isinstance(exc.cause, _DATA_ERRORS) or exc.stage in DATA_STAGES:
            return EXIT_DATA
        return EXIT_INTERNAL
    if isinstance(exc, _DATA_ERRORS):
        return EXIT_DATA
    return EXIT_INTERNAL


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        args.func(args)
    except Exception as exc:  # mapped to an exit code
        code = exit_code_for(exc)
        print(f"error: {exc}", file=sys.stderr)
        if code == EXIT_INTERNAL:
            log.debug("internal error", exc_info=True)
        return code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
