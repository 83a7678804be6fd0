# coding: utf-8

""" Synthetic truths and data. """

from __future__ import division, print_function

__all__ = ["truth_and_data"]

import logging

import numpy as np
from scipy import linalg

logger = logging.getLogger("moderr")


def truth_and_data(pair, prior, noise, rng, truth=None):
    """
    Produce a true parameter and noisy accurate-model data. The approximate
    model is never evaluated.

    :param pair:
        The forward model pair.

    :type pair:
        :class:`moderr.models.ForwardModelPair`

    :param prior:
        The prior the truth is drawn from when ``truth`` is not given.

    :type prior:
        :class:`moderr.gaussian.GaussianMeasure`

    :param noise:
        The (J, J) noise covariance. A zero matrix gives noise-free data.

    :param rng:
        The random streams; "truth" and "noise" are used.

    :type rng:
        :class:`moderr.utils.RngSpec`

    :param truth: [optional]
        A fixed truth, e.g. an analytic field.

    :returns:
        A two-length tuple of the truth and the data vector.
    """

    if truth is None:
        truth = prior.sample(1, rng.generator("truth"))[0]
    else:
        truth = np.array(truth, dtype=float).flatten()

    exact = pair.accurate(truth)
    noise = np.atleast_2d(np.asarray(noise, dtype=float))
    if noise.shape != (exact.size, exact.size):
        raise ValueError("noise covariance has shape {0}, expected {1}".format(
            noise.shape, (exact.size, exact.size)))

    if not np.any(noise):
        return (truth, exact)

    factor = linalg.cholesky(noise, lower=True)
    white = rng.generator("noise").standard_normal(exact.size)
    data = exact + np.dot(factor, white)
    logger.debug("Generated data with noise norm {:.3e}".format(
        np.linalg.norm(data - exact)))
    return (truth, data)
