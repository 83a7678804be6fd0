# coding: utf-8

""" Experiment configuration: presets, YAML files and validation. """

from __future__ import division, print_function

__all__ = ["ConfigurationError", "load_configuration", "load_presets",
    "validate_configuration", "PRESETS_PATH"]

import copy
import logging
import os

import yaml

from .errormodels import ErrorModelKind
from .utils import update_recursively

logger = logging.getLogger("moderr")

PRESETS_PATH = os.path.join(os.path.dirname(__file__), "presets.yaml")

EXPERIMENTS = {
    "source1d": "paper-source1d",
    "darcy": "paper-darcy-noise2",
    "rates": "rates",
    "toy-particle": "toy-particle"
}

SECTIONS = ("experiment", "model", "prior", "noise", "inference", "output",
    "settings")


class ConfigurationError(ValueError):
    pass


def load_presets(path=PRESETS_PATH):
    with open(path, "r") as fp:
        return yaml.safe_load(fp)


def _read_source(source):
    """ A dict, a preset name, a filename or a YAML string, as a dict. """

    if source is None:
        return {}

    if isinstance(source, dict):
        return copy.deepcopy(source)

    presets = load_presets()
    if source in presets and source != "small":
        return copy.deepcopy(presets[source])

    if os.path.exists(source):
        with open(source, "r") as fp:
            try:
                contents = yaml.safe_load(fp)
            except yaml.YAMLError as e:
                raise ConfigurationError("configuration file {0} is not valid "
                    "YAML: {1}".format(source, e))
    else:
        try:
            contents = yaml.safe_load(source)
        except yaml.YAMLError:
            contents = None
        if not isinstance(contents, dict):
            raise ConfigurationError("'{0}' is not a preset ({1}), an existing"
                " file, or a YAML string describing a dictionary".format(source,
                    ", ".join(sorted(k for k in presets if k != "small"))))

    if contents is None:
        contents = {}
    if not isinstance(contents, dict):
        raise ConfigurationError("configuration {} does not describe a "
            "dictionary".format(source))
    return contents


def load_configuration(source=None, experiment=None, overrides=None,
    small=False, validate=True):
    """
    Build an experiment configuration.

    The preset for the experiment is taken as the default configuration. The
    source and then the overrides are merged over it, and the ``small``
    overlay is applied last when requested.

    :param source: [optional]
        A preset name, a configuration filename, a YAML string or a dict.

    :param experiment: [optional]
        The experiment name. If not given it is read from the source.

    :param overrides: [optional]
        A nested dictionary of values that take precedence (command line
        flags).

    :param small: [optional]
        Apply the reduced-size overlay.

    :param validate: [optional]
        Validate the merged configuration.

    :returns:
        The configuration dictionary.

    :raises ConfigurationError:
        If the configuration is incomplete or invalid.
    """

    supplied = _read_source(source)
    experiment = experiment or supplied.get("experiment", None)
    if experiment not in EXPERIMENTS:
        raise ConfigurationError("unknown experiment '{0}' (available: {1})"\
            .format(experiment, ", ".join(sorted(EXPERIMENTS))))

    if supplied.get("experiment", experiment) != experiment:
        raise ConfigurationError("configuration is for the '{0}' experiment, "
            "not '{1}'".format(supplied["experiment"], experiment))

    presets = load_presets()
    configuration = copy.deepcopy(presets[EXPERIMENTS[experiment]])
    configuration = update_recursively(configuration, supplied)
    if overrides:
        configuration = update_recursively(configuration,
            copy.deepcopy(overrides))
    if small:
        configuration = update_recursively(configuration,
            copy.deepcopy(presets["small"].get(experiment, {})))

    if validate:
        validate_configuration(configuration)
    return configuration


def _require(condition, message, *args):
    if not condition:
        raise ConfigurationError(message.format(*args))


def validate_configuration(configuration):
    """
    Check a merged configuration.

    :raises ConfigurationError:
        On unknown sections, a missing seed or out-of-range values.
    """

    unknown = set(configuration.keys()).difference(SECTIONS)
    _require(not unknown, "unknown configuration sections: {}",
        ", ".join(sorted(unknown)))

    experiment = configuration.get("experiment", None)
    _require(experiment in EXPERIMENTS, "unknown experiment '{}'", experiment)

    settings = configuration.get("settings", {}) or {}
    seed = settings.get("seed", None)
    _require(seed is not None, "settings.seed is required")
    _require(isinstance(seed, int) and not isinstance(seed, bool) \
        and 2**64 > seed >= 0,
        "settings.seed must be an integer in [0, 2^64), not {}", seed)
    threads = settings.get("threads", 1)
    _require(isinstance(threads, int) and threads >= 1,
        "settings.threads must be a positive integer")

    _require(configuration.get("output", {}).get("directory", None),
        "output.directory is required")

    model = configuration.get("model", {})
    inference = configuration.get("inference", {})
    noise = configuration.get("noise", {})
    prior = configuration.get("prior", {})

    if experiment == "source1d":
        levels = model.get("coarse_levels", [])
        _require(len(levels) > 0, "model.coarse_levels must not be empty")
        for level in levels:
            _require(isinstance(level, int) and 9 >= level >= 3,
                "coarse levels must be integers in [3, 9], not {}", level)
            _require(model.get("fine_level", 10) > level,
                "coarse level {} is not below the fine level", level)
        _require(noise.get("variance", 0) > 0, "noise.variance must be positive")
        _require(inference.get("iterations", 0) >= 1,
            "inference.iterations must be at least 1")
        _require(prior.get("kind") == "brownian-motion",
            "the source1d experiment uses the brownian-motion prior")

    elif experiment == "darcy":
        _require(noise.get("index") in (1, 2, 3), "noise.index must be 1, 2 or 3")
        fine, coarse = model.get("fine_cells", 0), model.get("coarse_cells", 0)
        _require(coarse >= 2 and fine >= coarse and fine % coarse == 0,
            "model.coarse_cells must divide model.fine_cells")
        _require(inference.get("iterations", 0) >= 1,
            "inference.iterations must be at least 1")
        _require(inference.get("particles", 0) >= 1,
            "inference.particles must be at least 1")
        for tag in inference.get("error_models", ErrorModelKind.tags):
            try:
                ErrorModelKind.from_config(tag, inference)
            except ValueError as e:
                raise ConfigurationError("inference.error_models: {}".format(e))
        _require(inference.get("component_weights", "evidence") in ("evidence",
            "ensemble"), "inference.component_weights must be evidence or "
            "ensemble")
        _require(prior.get("kind") == "whittle-matern",
            "the darcy experiment uses the whittle-matern prior")
        _require(prior.get("lambda", 0) > 0 and prior.get("zeta", 0) > 0,
            "prior.lambda and prior.zeta must be positive")

    elif experiment == "rates":
        _require(len(inference.get("deltas", [])) > 0,
            "inference.deltas must not be empty")
        _require(all(d >= 0 for d in inference["deltas"]),
            "inference.deltas must be non-negative")
        _require(inference.get("iterations", 0) >= 3,
            "inference.iterations must be at least 3 to fit rates")
        _require(inference.get("monotone_instances", 100) >= 1
            and inference.get("monotone_iterations", 50) >= 1,
            "inference.monotone_instances and monotone_iterations must be "
            "positive")
        _require(noise.get("variance", 0) > 0, "noise.variance must be positive")

    elif experiment == "toy-particle":
        counts = inference.get("particle_counts", [])
        _require(len(counts) >= 2 and all(n >= 1 for n in counts),
            "inference.particle_counts needs at least two positive counts")
        _require(inference.get("replicates", 0) >= 16,
            "inference.replicates must be at least 16")
        _require(inference.get("generations", 0) >= 1,
            "inference.generations must be at least 1")
        _require(1 >= noise.get("kappa", 0) > 0, "noise.kappa must be in (0, 1]")
        _require(noise.get("mode", "clamped") in ("clamped", "exact-gaussian"),
            "noise.mode must be clamped or exact-gaussian")
        _require(inference.get("consistency_replicates", 100) >= 1
            and inference.get("consistency_particles", 5000) >= 1
            and inference.get("consistency_generations", 5) >= 1,
            "the inference.consistency_* sizes must be positive")

    return True
