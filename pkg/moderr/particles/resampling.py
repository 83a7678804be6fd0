# coding: utf-8

""" Index resampling. """

from __future__ import division, print_function

__all__ = ["cumulative_weights", "search_cumulative", "systematic_resample",
    "multinomial_resample"]

import numpy as np


def cumulative_weights(weights):
    """
    Return the normalized cumulative sum of non-negative weights, set to
    exactly one from the last positive weight onward.
    """

    weights = np.asarray(weights, dtype=float).flatten()
    positive = np.flatnonzero(weights > 0)
    if positive.size == 0 or np.any(weights < 0) \
    or not np.all(np.isfinite(weights)):
        raise ValueError("weights must be finite, non-negative and not all "
            "zero")
    cumulative = np.cumsum(weights)
    cumulative /= cumulative[-1]
    cumulative[positive[-1]:] = 1.0
    return cumulative


def search_cumulative(cumulative, positions):
    """
    Map positions in [0, 1] to indices through a :func:`cumulative_weights`
    array. Particles of zero weight are never selected, including for
    positions that round up to one.
    """

    last = np.searchsorted(cumulative, 1.0, side="left")
    return np.minimum(np.searchsorted(cumulative, positions, side="right"),
        last)


def systematic_resample(weights, generator):
    """
    Draw len(weights) indices with one uniform offset shared by all strata.

    :param weights:
        Non-negative weights summing to one.

    :param generator:
        The source of randomness (one uniform variate is consumed).

    :type generator:
        :class:`numpy.random.Generator`

    :returns:
        An integer array of indices into the weights.
    """

    cumulative = cumulative_weights(weights)
    N = cumulative.size
    positions = (generator.random() + np.arange(N)) / N
    return search_cumulative(cumulative, positions)


def multinomial_resample(weights, generator):
    cumulative = cumulative_weights(weights)
    return search_cumulative(cumulative, generator.random(cumulative.size))
