"""Command line front end.

Usage::

    cscli <kind> --config experiment.json [--out DIR] [--set key=value ...]
                 [--replot]

Exit codes: 0 success, 2 configuration or input errors (bad JSON, bad field,
malformed weight file, unsupported latent dimension, usage errors), 3 numeric
failures (non-finite values, power iteration stall, warm-start rejection cap).
"""

from __future__ import annotations

import argparse
import sys

from . import harness
from .exceptions import (ConfigError, NonFiniteError, PowerIterationError,
                         RejectionCapError, UnsupportedDimensionError,
                         WeightFileError)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cscli",
        description="Compressed sensing with generative priors: run recovery, "
                    "method comparison, phase transition, assumption validation "
                    "and low-dimensional chain diagnostics from JSON configs.")
    sub = parser.add_subparsers(dest="kind", metavar="|".join(harness.KINDS))
    for kind in harness.KINDS:
        sp = sub.add_parser(kind, help="run a %s experiment" % kind)
        sp.add_argument("--config", required=True, help="path to a JSON config")
        sp.add_argument("--out", default=None,
                        help="output directory (overrides config out_dir)")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        dest="overrides",
                        help="override a config entry via dotted path, value "
                             "parsed as JSON (repeatable)")
        sp.add_argument("--replot", action="store_true",
                        help="regenerate SVG plots from existing CSV outputs "
                             "without rerunning the experiment")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.kind is None:
        parser.print_usage(sys.stderr)
        print("cscli: error: an experiment kind is required", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = harness.load_config(args.config, args.kind, overrides=args.overrides,
                                  out_dir=args.out)
        if args.replot:
            harness.REPLOTTERS[args.kind](cfg)
        else:
            harness.RUNNERS[args.kind](cfg)
    except ConfigError as exc:
        print("cscli: config error (%s): %s" % (exc.field or "?", exc), file=sys.stderr)
        return EXIT_CONFIG
    except (WeightFileError, UnsupportedDimensionError) as exc:
        print("cscli: input error: %s" % exc, file=sys.stderr)
        return EXIT_CONFIG
    except (NonFiniteError, PowerIterationError, RejectionCapError) as exc:
        print("cscli: numeric failure: %s" % exc, file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
