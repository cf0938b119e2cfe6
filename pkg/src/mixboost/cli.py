"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

import argparse
import dataclasses
import json
import logging
import os
import sys

from . import config as cfgmod
from . import experiment as ex
from .data.cifar import FormatError
from .data.splits import DataError
from .interactions import DegenerateProfileError, InteractionProfile, ProxyParams, proxy_m
from .nn.checkpoint import CheckpointError
from .reporting import rows_to_csv
from .training import TrainingError

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load_config(args):
    if not args.config:
        raise UsageError("--config is required")
    cfg = cfgmod.load(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = dataclasses.replace(cfg, experiment=dataclasses.replace(cfg.experiment, seed=args.seed))
    return cfg


def cmd_train(args):
    cfg = _load_config(args)
    exp = ex.run_train(cfg, args.out, force=args.force)
    print(exp)


def cmd_eval(args):
    cfg = _load_config(args)
    report = ex.run_eval(cfg, args.out, args.checkpoint)
    print(report.to_json())


def cmd_interactions(args):
    cfg = _load_config(args)
    prof = ex.run_interactions(cfg, args.out, args.checkpoint)
    print(json.dumps({"orders": prof.orders, "J": prof.J, "M": proxy_m(prof)}))


def cmd_proxy(args):
    with open(args.profile) as fh:
        prof = InteractionProfile.from_json(fh.read())
    print(repr(proxy_m(prof, ProxyParams(args.a, args.b, args.c))))


def cmd_correlate(args):
    rows, corr = ex.run_correlate(args.directory, args.out)
    sys.stdout.write(rows_to_csv(rows))
    sys.stdout.write(rows_to_csv([{"metric": m, "pearson_r": r} for m, r in corr.items()]))


def cmd_grid(args):
    cfg = _load_config(args)
    rows = ex.run_grid(cfg, args.out, jobs=args.jobs, force=args.force)
    sys.stdout.write(rows_to_csv(rows, list(ex.GRID_COLUMNS)))


def cmd_report(args):
    rows = ex.summary_rows(args.directory)
    if not rows:
        raise DataError(f"no complete experiments under {args.directory!r}")
    text = rows_to_csv(rows)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, "summary.csv"), "w") as fh:
            fh.write(text)
    sys.stdout.write(text)


def build_parser():
    p = _Parser(prog="mixboost", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def common(sp, seed=True):
        sp.add_argument("--config", help="experiment config file (INI)")
        sp.add_argument("--out", help="output root (default: experiment.output_dir)")
        if seed:
            sp.add_argument("--seed", type=int, help="override experiment.seed")

    sp = sub.add_parser("train", help="train one model")
    common(sp)
    sp.add_argument("--force", action="store_true")
    sp.set_defaults(func=cmd_train)

    sp = sub.add_parser("eval", help="safety report for a checkpoint")
    common(sp)
    sp.add_argument("--checkpoint")
    sp.set_defaults(func=cmd_eval)

    sp = sub.add_parser("interactions", help="interaction profile + SVG")
    common(sp)
    sp.add_argument("--checkpoint")
    sp.set_defaults(func=cmd_interactions)

    sp = sub.add_parser("proxy", help="proxy M(a, b, c) of a profile JSON")
    sp.add_argument("profile")
    sp.add_argument("--a", type=float, default=0.2)
    sp.add_argument("--b", type=float, default=0.2)
    sp.add_argument("--c", type=float, default=0.8)
    sp.set_defaults(func=cmd_proxy)

    sp = sub.add_parser("correlate", help="Pearson(M, metric) across experiments")
    sp.add_argument("directory")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_correlate)

    sp = sub.add_parser("grid", help="(r1, lambda) grid search")
    common(sp)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--force", action="store_true")
    sp.set_defaults(func=cmd_grid)

    sp = sub.add_parser("report", help="summary table of experiments")
    sp.add_argument("directory")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        args.func(args)
    except (UsageError, cfgmod.ConfigError, ex.ExistsError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, FormatError, CheckpointError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (TrainingError, DegenerateProfileError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
