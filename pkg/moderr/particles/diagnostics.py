# coding: utf-8

""" Sample diagnostics for particle ensembles. """

from __future__ import division, print_function

__all__ = ["effective_sample_size", "ensemble_moments", "kl_divergence_delta",
    "empirical_operator_distance", "default_test_functions", "grid_reference"]

import logging

import numpy as np
from scipy.special import logsumexp

from .ensemble import ParticleEnsemble
from .updates import DegenerateLikelihoodError, mixture_log_likelihood

logger = logging.getLogger("moderr")


def effective_sample_size(weights):
    """ 1 / sum(w**2) for weights on the simplex. """
    weights = np.asarray(weights, dtype=float)
    return 1.0 / (weights**2).sum()


def ensemble_moments(ensemble):
    """
    Return the weighted mean and the weighted marginal variances (second
    central moments without Bessel correction) of an ensemble.

    :param ensemble:
        The ensemble.

    :type ensemble:
        :class:`moderr.particles.ParticleEnsemble`

    :returns:
        A two-length tuple of the mean and variance vectors.
    """

    w = ensemble.weights
    mean = np.dot(w, ensemble.particles)
    variance = np.dot(w, (ensemble.particles - mean)**2)
    return (mean, variance)


def _log_likelihood_ratios(ensemble, history, previous, noise, b, fm):
    """
    r_j = log L(u_j) - log pi_noise(b - F(u_j)), where L is the likelihood the
    ensemble was drawn under (1 for the prior generation).
    """

    if history.accurate_outputs is None:
        raise ValueError("accurate outputs of generation {} are not cached"\
            .format(ensemble.generation))
    accurate_term = noise.log_density(b - history.accurate_outputs)

    if previous is None:
        return -accurate_term

    previous_ensemble, previous_history = previous
    approximate = history.approximate_outputs
    if approximate is None:
        approximate = fm.approximate(ensemble.particles)
    current_term = mixture_log_likelihood(approximate, previous_history.errors,
        previous_ensemble.weights, noise, b)
    return current_term - accurate_term


def kl_divergence_delta(ensembles, fm, noise, prior, b, likelihood_history,
    normalizer="self-normalized", full_output=False):
    """
    Estimate D_KL(pi_l || pi_post) - D_KL(pi_last || pi_post) for every
    generation l in ``ensembles``, where pi_post is the accurate-model posterior.

    Generation l >= 1 was drawn from pi_prior(u) L_l(u), with L_l the mixture
    likelihood built from generation l - 1. Writing
    r = log L_l(u) - log pi_noise(b - F(u)), the divergence is

        D_l = E_l[r] + log(Z_post / Z_l),

    and the normalizer ratio is estimated from the same sample as
    log E_l[exp(-r)]. The estimate is consistent but biased for finite N and
    is never negative. With ``normalizer="none"`` the ratio is dropped and
    only the sample average of r is used. The prior density cancels from both
    terms.

    :param ensembles:
        Ensembles of consecutive generations.

    :param fm:
        The forward model pair (only the approximate map may be evaluated).

    :param noise:
        The noise density.

    :type noise:
        :class:`moderr.particles.BoundedNoiseDensity`

    :param prior:
        The prior measure.

    :param b:
        The data vector.

    :param likelihood_history:
        One :class:`moderr.particles.ModelErrorSample` per ensemble with the
        cached accurate outputs.

    :param normalizer: [optional]
        "self-normalized" or "none".

    :param full_output: [optional]
        Also return the divergence estimates and the Monte Carlo standard
        errors of the differences.

    :returns:
        A list of differences, or a tuple (differences, divergences, errors)
        if ``full_output`` is True.
    """

    if normalizer not in ("self-normalized", "none"):
        raise ValueError("unknown normalizer '{}'".format(normalizer))
    if len(ensembles) != len(likelihood_history) or len(ensembles) == 0:
        raise ValueError("one model error sample per ensemble is required")

    divergences, errors = [], []
    previous = None
    for ensemble, history in zip(ensembles, likelihood_history):
        history.check_aligned(ensemble)
        if ensemble.dimension != prior.dimension:
            raise ValueError("ensemble and prior dimensions differ")
        if ensemble.generation > 0 and (previous is None \
        or previous[0].generation != ensemble.generation - 1):
            raise ValueError("generation {} needs its predecessor in the list"\
                .format(ensemble.generation))

        ratios = _log_likelihood_ratios(ensemble, history,
            None if ensemble.generation == 0 else previous, noise, b, fm)
        if not np.all(np.isfinite(ratios)):
            raise DegenerateLikelihoodError("zero likelihood at a particle of "
                "generation {}".format(ensemble.generation))

        w = ensemble.weights
        mean_ratio = np.dot(w, ratios)
        value = mean_ratio
        if normalizer == "self-normalized":
            value += logsumexp(-ratios, b=w)

        divergences.append(value)
        errors.append(np.sqrt(np.dot(w**2, (ratios - mean_ratio)**2)))
        previous = (ensemble, history)

    deltas = [d - divergences[-1] for d in divergences]
    if full_output:
        delta_errors = [np.hypot(e, errors[-1]) for e in errors]
        delta_errors[-1] = 0.0
        return (deltas, divergences, delta_errors)
    return deltas


def default_test_functions():
    """
    A dictionary of test functions bounded by one on the first coordinate.
    """

    functions = []
    for frequency in (0.5, 1.0, 2.0):
        functions.append(lambda u, k=frequency: np.cos(k * u[:, 0]))
        functions.append(lambda u, k=frequency: np.sin(k * u[:, 0]))
    for centre in (-1.0, 0.0, 0.5, 1.0):
        functions.append(lambda u, c=centre: np.tanh((u[:, 0] - c) / 0.25))
    return functions


def _expectation(measure, function):
    return np.dot(measure.weights, function(measure.particles))


def empirical_operator_distance(reference, ensembles, test_functions=None,
    min_replicates=16):
    """
    Estimate the random-measure distance sup_phi sqrt(E |mu(phi) - nu(phi)|^2)
    between replicated ensembles and a reference measure, with the supremum
    taken over a finite dictionary of functions bounded by one.

    :param reference:
        The reference measure, as weighted atoms (e.g. from
        :func:`grid_reference`).

    :type reference:
        :class:`moderr.particles.ParticleEnsemble`

    :param ensembles:
        Independent replicate ensembles.

    :param test_functions: [optional]
        Callables mapping an (n, d) array to n values in [-1, 1].

    :param min_replicates: [optional]
        The fewest replicates accepted.

    :returns:
        The estimated distance.
    """

    if test_functions is None:
        test_functions = default_test_functions()
    if min_replicates > len(ensembles):
        raise ValueError("at least {0} replicates are required ({1} given)"\
            .format(min_replicates, len(ensembles)))

    largest = 0.0
    for function in test_functions:
        if np.abs(function(reference.particles)).max() > 1 + 1e-12:
            raise ValueError("test functions must be bounded by one")

        expected = _expectation(reference, function)
        deviations = [_expectation(e, function) - expected for e in ensembles]
        largest = max(largest, np.mean(np.square(deviations)))
    return np.sqrt(largest)


def grid_reference(prior, noise, approximate, accurate, b, generations,
    half_width=6.0, n_points=2000):
    """
    Evaluate the exact measure recursion of the particle schemes on a dense
    grid for a one-dimensional parameter.

    Generation 0 is the prior; generation l has density proportional to

        pi_prior(u) sum_k p_{l-1}(x_k) pi_noise(b - f(u) - M(x_k))

    with M = F - f, evaluated at the grid points x_k.

    :param prior:
        A one-dimensional prior with dense covariance.

    :param noise:
        The noise density.

    :param approximate:
        f, a callable on (n, 1) arrays.

    :param accurate:
        F, a callable on (n, 1) arrays.

    :param b:
        The data vector.

    :param generations:
        The last generation to evaluate.

    :param half_width: [optional]
        The grid covers the prior mean plus or minus this many standard
        deviations.

    :param n_points: [optional]
        The number of grid points.

    :returns:
        A list of generations + 1 weighted atom measures.
    """

    if prior.dimension != 1:
        raise ValueError("grid references are only available in one dimension")

    sigma = np.sqrt(prior.covariance[0, 0])
    grid = prior.mean[0] + np.linspace(-half_width, half_width, n_points) \
        * sigma
    atoms = grid.reshape(-1, 1)

    log_prior = prior.logpdf(atoms)
    f_values = approximate(atoms)
    model_errors = accurate(atoms) - f_values

    weights = np.exp(log_prior - logsumexp(log_prior))
    measures = [ParticleEnsemble(atoms, weights, generation=0)]
    for generation in range(1, int(generations) + 1):
        log_density = log_prior + mixture_log_likelihood(f_values, model_errors,
            weights, noise, b)
        weights = np.exp(log_density - logsumexp(log_density))
        measures.append(ParticleEnsemble(atoms, weights, generation=generation))
    return measures
