#!/usr/bin/env python
# -*- coding: utf-8 -*-

""" moderr, iterative updating of model-error distributions """

from __future__ import division, print_function

# Standard library.
import argparse
import logging
import os
import sys
from time import time

# Third-party.
import numpy as np
import yaml

# Module-specific.
import moderr
from moderr.config import ConfigurationError, load_configuration
from moderr.experiments import EXPERIMENTS
from moderr.utils import NumericalError

logger = logging.getLogger("moderr")

# Usage: moderr source1d --small --check
#        moderr darcy --config darcy.yaml --out results/darcy --threads 4

EXIT_SUCCESS, EXIT_CONFIGURATION, EXIT_NUMERICAL, EXIT_CHECK = 0, 1, 2, 3

# Configurations are validated before an experiment starts, so any of these
# raised while it runs is a numerical failure.
NUMERICAL_ERRORS = (NumericalError, np.linalg.LinAlgError, ArithmeticError,
    ValueError, RuntimeError)


def _overrides(args):
    overrides = {}
    if args.seed is not None:
        overrides.setdefault("settings", {})["seed"] = args.seed
    if args.threads is not None:
        overrides.setdefault("settings", {})["threads"] = args.threads
    if args.output_directory is not None:
        overrides.setdefault("output", {})["directory"] = args.output_directory
    return overrides


def run(args):
    """ Run one experiment and write its results. """

    try:
        config = load_configuration(args.config, experiment=args.command,
            overrides=_overrides(args), small=args.small)
    except ConfigurationError as e:
        logger.error("Invalid configuration: {}".format(e))
        if args.debug: raise
        return EXIT_CONFIGURATION

    path = config["output"]["directory"]
    if os.path.exists(os.path.join(path, "manifest.txt")) and not args.overwrite:
        logger.error("Output directory {} already holds results; use "
            "--overwrite to replace them".format(path))
        return EXIT_CONFIGURATION

    moderr.io.ensure_directory(path)
    with open(os.path.join(path, "config.yaml"), "w") as fp:
        yaml.safe_dump(config, fp, default_flow_style=False)

    logger.info("Running the {0} experiment with seed {1} into {2}".format(
        args.command, config["settings"]["seed"], path))

    t_init = time()
    try:
        report = EXPERIMENTS[args.command](config, path,
            threads=config["settings"].get("threads", 1))

    except NUMERICAL_ERRORS as e:
        logger.exception("Numerical failure in the {} experiment".format(
            args.command))
        if args.debug: raise
        return EXIT_NUMERICAL

    logger.info("Completed in {0:.1f} seconds; results are in {1}".format(
        time() - t_init, path))
    for name, table in sorted(report.tables.items()):
        print("\n{}:".format(name))
        table.pprint(max_lines=-1, max_width=-1)

    if args.check:
        failed = [name for name, passed, detail in report.checks if not passed]
        if failed:
            logger.error("{0} of {1} checks failed: {2}".format(len(failed),
                len(report.checks), ", ".join(failed)))
            return EXIT_CHECK
        logger.info("All {} checks passed".format(len(report.checks)))

    return EXIT_SUCCESS


def parser(input_args=None):

    parser = argparse.ArgumentParser(
        description="moderr, iterative updating of model-error distributions",
        epilog="See 'moderr COMMAND -h' for help on a specific command.")

    # Create subparsers
    subparsers = parser.add_subparsers(title="command", dest="command",
        description="Specify the experiment to run.")
    subparsers.required = True

    # Create a parent subparser
    parent_parser = argparse.ArgumentParser(add_help=False)
    parent_parser.add_argument(
        "-v", "--verbose", dest="verbose", action="store_true", default=False,
        help="Verbose mode")
    parent_parser.add_argument(
        "--debug", dest="debug", action="store_true", default=False,
        help="Enable debug mode. Any suppressed exception during run-time will "
            "be re-raised")
    parent_parser.add_argument(
        "--overwrite", dest="overwrite", action="store_true", default=False,
        help="Overwrite existing results in the output directory")
    parent_parser.add_argument(
        "--config", dest="config", default=None,
        help="A YAML configuration file or preset name merged over the "
            "experiment's preset")
    parent_parser.add_argument(
        "--seed", dest="seed", type=int, default=None,
        help="The master seed for every random stream")
    parent_parser.add_argument(
        "--out", dest="output_directory", default=None,
        help="The output directory")
    parent_parser.add_argument(
        "--threads", dest="threads", type=int, default=None,
        help="Worker processes for accurate model evaluations")
    parent_parser.add_argument(
        "--small", dest="small", action="store_true", default=False,
        help="Run the reduced-size version of the experiment")
    parent_parser.add_argument(
        "--check", dest="check", action="store_true", default=False,
        help="Exit with status 3 if any acceptance check fails")

    descriptions = {
        "source1d": "Conventional and iterative error models for the "
            "one-dimensional Poisson source problem.",
        "darcy": "Conventional, enhanced and particle iterative error models "
            "for the Darcy permeability problem.",
        "rates": "Fitted convergence rates against the contraction bound.",
        "toy-particle": "Particle errors against ensemble size for a "
            "one-dimensional linear toy."
    }
    for command in sorted(EXPERIMENTS):
        command_parser = subparsers.add_parser(command, parents=[parent_parser],
            help=descriptions[command])
        command_parser.set_defaults(func=run)

    args = parser.parse_args(input_args)
    logger.setLevel(logging.DEBUG if args.verbose else logging.INFO)
    return args


def main(input_args=None):
    args = parser(input_args)
    return args.func(args)

if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
