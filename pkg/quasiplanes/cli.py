__description__ = \
"""
Command line front end.  Exit status 0 on success, 1 when a verification
suite finds a violation, 2 on bad input.
"""
__author__ = "quasiplanes developers"
__date__ = "2026-10-16"

import argparse
import sys

from .config import ExperimentConfig
from .errors import QuasiplanesError
from .project import ExperimentProject

COMMANDS = {"flatness": "compute_flatness",
            "qs": "compute_distortion",
            "extend": "compute_extension",
            "verify": "compute_verification",
            "generate": "compute_generation"}


def _parser():

    parser = argparse.ArgumentParser(
        prog="quasiplanes",
        description="Flatness, distortion and extension experiments on sampled sets and maps.")
    parser.add_argument("command", choices=sorted(COMMANDS),
                        help="computation to run")
    parser.add_argument("--config", required=True,
                        help="JSON experiment config")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    parser.add_argument("--out", default=None,
                        help="override the config output directory")
    parser.add_argument("--suite", default=None,
                        help="suite to run (verify only)")
    parser.add_argument("--quiet", action="store_true",
                        help="no progress messages")
    return parser


def main(argv=None):
    """Run one command; returns the exit status."""

    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 2 if e.code else 0

    try:
        config = ExperimentConfig.from_json(args.config)
        config = config.override(seed=args.seed, out_dir=args.out, suite=args.suite)
        project = ExperimentProject(config, quiet=args.quiet)
        result = getattr(project, COMMANDS[args.command])()
    except (QuasiplanesError, FileNotFoundError, ValueError) as e:
        # json.JSONDecodeError is a ValueError
        print("quasiplanes: error: {}".format(str(e).strip()), file=sys.stderr)
        return 2

    if args.command == "verify" and not result:
        print("quasiplanes: error: suite {} found violations.".format(
            config.verify["suite"]), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
