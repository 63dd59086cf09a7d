"""Command line entry point: ``phishstack run|report|predict``."""

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from ..errors import PhishstackError
from .config import load_config
from .experiment import ExperimentError, run_experiment
from .predict import predict_batch
from .report import emit_report, load_result, write_result


def _cmd_run(args):
    cfg = load_config(args.config)
    out = args.output or cfg.output_dir or str(Path(args.config).with_suffix("")) + "_out"
    cfg = replace(cfg, output_dir=out)
    try:
        res = run_experiment(cfg)
    except ExperimentError as exc:
        if exc.result is not None:
            write_result(exc.result, out)
        raise
    write_result(res, out)
    emit_report(res, out)
    s = res.stacked_summary
    print(f"stacked accuracy {100 * s.accuracy:.2f}% over {cfg.outer_k} folds; results in {out}")
    return 0


def _cmd_report(args):
    res = load_result(args.result)
    paths = emit_report(res, args.output or args.result)
    for p in paths.values():
        print(p)
    return 0


def _cmd_predict(args):
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            predict_batch(args.model, args.data, args.schema, args.threshold, out=fh)
    else:
        predict_batch(args.model, args.data, args.schema, args.threshold, out=sys.stdout)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="phishstack", description="Stacked phishing-website classifier.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="nested cross-validation experiment")
    r.add_argument("--config", required=True)
    r.add_argument("--output", help="output directory (overrides the config)")
    r.set_defaults(func=_cmd_run)

    rep = sub.add_parser("report", help="write report tables from a result directory")
    rep.add_argument("--result", required=True)
    rep.add_argument("--output", help="directory for the tables (default: the result directory)")
    rep.set_defaults(func=_cmd_report)

    pr = sub.add_parser("predict", help="score a CSV with a saved model")
    pr.add_argument("--model", required=True)
    pr.add_argument("--data", required=True)
    pr.add_argument("--schema", required=True)
    pr.add_argument("--threshold", type=float, default=0.5)
    pr.add_argument("--output", help="write predictions here instead of stdout")
    pr.set_defaults(func=_cmd_predict)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.INFO if args.verbose or os.environ.get("PHISHSTACK_VERBOSE") else logging.WARNING
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(message)s")
    try:
        return args.func(args)
    except (PhishstackError, OSError) as exc:
        print(f"phishstack {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
