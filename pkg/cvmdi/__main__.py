#!/usr/bin/env python3

import argparse
import json
import logging
import os
import sys

# Let me import cvmdi
sys.path.append(os.path.dirname(os.path.dirname(os.path.realpath(__file__))))

import cvmdi
from cvmdi import commands
from cvmdi import config as cfg
from cvmdi.base import ParameterError
from cvmdi.gaussian import DegenerateStateError
from cvmdi.inforates import ConsistencyError
from cvmdi.optimize import OptimizationError
from cvmdi.utils import get_cpu_time_with_children

parser = argparse.ArgumentParser(description="Post-selected CV-MDI key rates")

parser.add_argument("command", choices=sorted(commands.COMMANDS), help="What to compute")

parser.add_argument(
    "--config", type=str, default=None, help="File of 'key = value' lines"
)

parser.add_argument(
    "--set",
    type=str,
    action="append",
    default=[],
    metavar="KEY=VALUE",
    help="Override one config value (may be repeated)",
)

parser.add_argument(
    "--preset",
    type=str,
    default=None,
    help="Start from a named parameter set: " + ", ".join(sorted(cfg.PRESETS)),
)

parser.add_argument(
    "--threads", type=int, default=None, help="Number of worker processes"
)

parser.add_argument(
    "--debuginfo", action="store_true", help="Print (lots) of debugging info"
)

parser.add_argument(
    "--info", action="store_true", help="Print (some) debugging info"
)

_HANDLED = (cfg.ConfigError, ParameterError, DegenerateStateError, ConsistencyError, OptimizationError)


def resolve_config(args):
    if args.preset is not None:
        config = cfg.getPresetConfig(args.preset)
    else:
        config = cfg.getDefaultConfig()
    if args.config is not None:
        cfg.LoadConfigFromFile(config, args.config)
    cfg.LoadOverrides(config, args.set)
    if config["format"] not in ("csv", "json"):
        raise cfg.ConfigError("format must be csv or json", key="format")
    return config


def error_record(e):
    return json.dumps({
        "error": type(e).__name__,
        "message": str(e),
        "key": getattr(e, "key", None),
        "line": getattr(e, "line", None),
    })


def main(argv=None):
    args = parser.parse_args(argv)

    if args.info:
        logging.basicConfig(
            level=logging.INFO,
            format="%(levelname)s:%(pathname)s:%(lineno)d:%(name)s:%(message)s",
        )

    if args.debuginfo:
        logging.basicConfig(
            level=logging.DEBUG,
            format="%(levelname)s:%(pathname)s:%(lineno)d:%(name)s:%(message)s",
        )

    try:
        config = resolve_config(args)
        # The worker count stays out of the config so it never reaches the output
        threads = args.threads if args.threads else cfg.resolveThreads(config)
        logging.info("cvmdi %s, %s with %s threads", cvmdi.__version__, args.command, threads)
        table = commands.COMMANDS[args.command](config, threads)
        table.write(config["output"], config["format"])
        logging.info("%s finished, %.2fs CPU", args.command, get_cpu_time_with_children())
    except _HANDLED as e:
        sys.stderr.write(error_record(e) + "\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
