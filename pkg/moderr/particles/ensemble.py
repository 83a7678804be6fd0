# coding: utf-8

""" Weighted particle ensembles, model error samples and bounded noise densities. """

from __future__ import division, print_function

__all__ = ["ParticleEnsemble", "ModelErrorSample", "BoundedNoiseDensity",
    "ParticleEvaluationError", "sample_prior", "model_error_sample"]

import functools
import logging

import numpy as np
from scipy import linalg

from ..utils import NumericalError, parallel_map

logger = logging.getLogger("moderr")


class ParticleEvaluationError(NumericalError, RuntimeError):

    def __init__(self, message, index):
        super(ParticleEvaluationError, self).__init__(
            "particle {0}: {1}".format(index, message))
        self.index = index


def _frozen(array):
    array.setflags(write=False)
    return array


class ParticleEnsemble(object):
    """
    N parameter vectors with non-negative weights that sum to one. Ensembles
    are immutable; updates return new ensembles.
    """

    def __init__(self, particles, weights=None, generation=0):

        particles = np.array(particles, dtype=float)
        if particles.ndim == 1:
            particles = particles.reshape(-1, 1)
        if particles.ndim != 2 or particles.shape[0] < 1:
            raise ValueError("particles must be an (N, d) array with N >= 1")

        N = particles.shape[0]
        if weights is None:
            weights = np.ones(N) / N
        else:
            weights = np.array(weights, dtype=float).flatten()
            if weights.size != N:
                raise ValueError("{0} weights given for {1} particles".format(
                    weights.size, N))
            if np.any(weights < 0) or not np.all(np.isfinite(weights)):
                raise ValueError("weights must be finite and non-negative")
            total = weights.sum()
            if abs(total - 1) > 1e-12:
                if not total > 0:
                    raise ValueError("weights sum to zero")
                weights = weights / total

        self.particles = _frozen(particles)
        self.weights = _frozen(weights)
        self.generation = int(generation)
        return None


    def __repr__(self):
        return "<{0}.ParticleEnsemble of {1} particles in {2} dimensions "\
            "(generation {3}) at {4}>".format(self.__module__,
                self.n_particles, self.dimension, self.generation, hex(id(self)))


    def __len__(self):
        return self.particles.shape[0]

    @property
    def n_particles(self):
        return self.particles.shape[0]

    @property
    def dimension(self):
        return self.particles.shape[1]

    @property
    def uniform(self):
        return np.all(self.weights == self.weights[0])


    def to_table(self):
        from astropy.table import Table

        columns = [np.arange(self.n_particles), self.weights] \
            + [self.particles[:, i] for i in range(self.dimension)]
        names = ["particle_index", "weight"] \
            + ["u_{}".format(i + 1) for i in range(self.dimension)]
        return Table(columns, names=names)


    def write(self, filename):
        """ Write one row per particle: particle_index, weight, u_1 ... u_d. """
        from ..io import write_table
        write_table(self.to_table(), filename)
        return None


class ModelErrorSample(object):
    """
    Model errors M(u_j) = F(u_j) - f(u_j) of every particle of one generation,
    with the accurate and approximate outputs kept for reuse.
    """

    def __init__(self, errors, source_generation, accurate_outputs=None,
        approximate_outputs=None):
        errors = np.atleast_2d(np.array(errors, dtype=float))
        self.errors = _frozen(errors)
        self.source_generation = int(source_generation)
        self.accurate_outputs = None if accurate_outputs is None \
            else _frozen(np.atleast_2d(np.array(accurate_outputs, dtype=float)))
        self.approximate_outputs = None if approximate_outputs is None \
            else _frozen(np.atleast_2d(np.array(approximate_outputs, dtype=float)))

        for outputs in (self.accurate_outputs, self.approximate_outputs):
            if outputs is not None and outputs.shape != errors.shape:
                raise ValueError("cached outputs have shape {0} but the errors "
                    "have shape {1}".format(outputs.shape, errors.shape))
        return None


    def __len__(self):
        return self.errors.shape[0]

    @property
    def n_data(self):
        return self.errors.shape[1]


    def check_aligned(self, ensemble):
        if len(self) != ensemble.n_particles:
            raise ValueError("model error sample has {0} entries but the "
                "ensemble has {1} particles".format(len(self),
                    ensemble.n_particles))
        if self.source_generation != ensemble.generation:
            raise ValueError("model error sample is from generation {0} but "
                "the ensemble is generation {1}".format(self.source_generation,
                    ensemble.generation))
        return True


class BoundedNoiseDensity(object):
    """
    The Gaussian noise density N(0, gamma), optionally clamped to the interval
    [kappa, 1/kappa]. Evaluations are returned in log space.
    """

    modes = ("exact-gaussian", "clamped")

    def __init__(self, gamma, kappa=None, mode="exact-gaussian"):

        if mode not in self.modes:
            raise ValueError("unknown noise density mode '{0}' (available: {1})"\
                .format(mode, ", ".join(self.modes)))

        gamma = np.atleast_2d(np.array(gamma, dtype=float))
        if gamma.shape[0] != gamma.shape[1]:
            raise ValueError("noise covariance must be square")
        try:
            self._cholesky = linalg.cholesky(gamma, lower=True)
        except linalg.LinAlgError:
            raise ValueError("noise covariance is not positive definite")

        if mode == "clamped":
            if kappa is None or not (1 >= kappa > 0):
                raise ValueError("clamped mode requires kappa in (0, 1]")
            kappa = float(kappa)

        self.gamma = gamma
        self.kappa = kappa
        self.mode = mode
        self._log_normalizer = -np.log(np.diag(self._cholesky)).sum() \
            - 0.5 * gamma.shape[0] * np.log(2 * np.pi)
        return None


    def __repr__(self):
        return "<{0}.BoundedNoiseDensity ({1}{2}) at {3}>".format(
            self.__module__, self.mode,
            "" if self.mode == "exact-gaussian" else ", kappa = {}".format(
                self.kappa), hex(id(self)))


    @property
    def n_data(self):
        return self.gamma.shape[0]


    @property
    def log_supremum(self):
        """ The logarithm of the supremum of the density. """
        if self.mode == "clamped":
            log_kappa = np.log(self.kappa)
            return np.clip(self._log_normalizer, log_kappa, -log_kappa)
        return self._log_normalizer


    def log_density(self, residuals):
        """
        Evaluate the log-density at residuals of shape (..., J).
        """

        residuals = np.asarray(residuals, dtype=float)
        shape = residuals.shape
        if shape[-1] != self.n_data:
            raise ValueError("residuals must have trailing dimension {}".format(
                self.n_data))

        flat = residuals.reshape(-1, self.n_data)
        white = linalg.solve_triangular(self._cholesky, flat.T, lower=True)
        values = self._log_normalizer - 0.5 * (white**2).sum(axis=0)
        if self.mode == "clamped":
            log_kappa = np.log(self.kappa)
            values = np.clip(values, log_kappa, -log_kappa)
        return values.reshape(shape[:-1])


    def density(self, residuals):
        return np.exp(self.log_density(residuals))


def sample_prior(prior, n, rng):
    """
    Draw a uniformly weighted generation-0 ensemble from the prior.

    :param prior:
        The prior measure.

    :type prior:
        :class:`moderr.gaussian.GaussianMeasure`

    :param n:
        The number of particles.

    :param rng:
        The random streams; the "sample_prior" stream is used.

    :type rng:
        :class:`moderr.utils.RngSpec`

    :rtype:
        :class:`ParticleEnsemble`
    """

    if 1 > n:
        raise ValueError("at least one particle is required")
    particles = prior.sample(int(n), rng.generator("sample_prior", 0))
    return ParticleEnsemble(particles, generation=0)


def _accurate(pair, u):
    return pair.accurate(u)


def model_error_sample(ensemble, fm, threads=1):
    """
    Evaluate the model error of every particle.

    The accurate model is evaluated once per particle, in worker processes
    when ``threads > 1``; results are assembled by particle index.

    :param ensemble:
        The ensemble.

    :type ensemble:
        :class:`ParticleEnsemble`

    :param fm:
        The forward model pair.

    :type fm:
        :class:`moderr.models.ForwardModelPair`

    :param threads: [optional]
        The maximum number of worker processes.

    :rtype:
        :class:`ModelErrorSample`
    """

    if ensemble.dimension != fm.n_parameters:
        raise ValueError("ensemble has dimension {0} but the model takes {1} "
            "parameters".format(ensemble.dimension, fm.n_parameters))

    particles = ensemble.particles
    if threads is not None and threads > 1:
        try:
            accurate = parallel_map(functools.partial(_accurate, fm),
                list(particles), threads=threads)
        except Exception as e:
            # Workers do not report which item failed; locate it serially.
            logger.debug("Parallel evaluation failed ({}), retrying serially"\
                .format(e))
        else:
            fm.record_evaluations(accurate=len(particles))
            accurate = np.array(accurate)
            approximate = fm.approximate(particles)
            return ModelErrorSample(accurate - approximate, ensemble.generation,
                accurate, approximate)

    accurate = np.zeros((ensemble.n_particles, fm.n_data))
    for index, u in enumerate(particles):
        try:
            accurate[index] = fm.accurate(u)
        except Exception as e:
            raise ParticleEvaluationError(str(e), index)

    approximate = fm.approximate(particles)
    return ModelErrorSample(accurate - approximate, ensemble.generation,
        accurate, approximate)
