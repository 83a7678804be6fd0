# coding: utf-8

""" Conventional, enhanced and iterative error models. """

from __future__ import division, print_function

__all__ = ["ErrorModelKind", "EvaluationCountError", "ExperimentResult",
    "EnsembleTrace", "run_conventional", "run_enhanced", "run_iterative_linear",
    "run_iterative_particle", "model_error_moments", "relative_error"]

import logging
import os
import warnings
from time import time

import numpy as np
import yaml
from astropy.table import Table

from . import io
from .gaussian import (DENSE_LIMIT, GaussianMeasure, LinearModelPair,
    IndefiniteCovarianceError, posterior_update, run_linear_iteration,
    contraction_bound, loewner_gap)
from .utils import NumericalError
from .particles import (BoundedNoiseDensity, DegeneracyWarning, sample_prior,
    model_error_sample, mixture_update, importance_update, ensemble_moments,
    effective_sample_size, kl_divergence_delta)

logger = logging.getLogger("moderr")


class EvaluationCountError(NumericalError, RuntimeError):
    pass


class ErrorModelKind(object):
    """ Which error model to run, and its sizes. """

    tags = ("conventional", "enhanced", "iterative")

    def __init__(self, tag, sample_size=None, max_iters=None, n_particles=None,
        exact=False, update_kind="mixture"):

        if tag not in self.tags:
            raise ValueError("unknown error model '{0}' (available: {1})".format(
                tag, ", ".join(self.tags)))

        if tag == "enhanced" and (sample_size is None or 2 > sample_size):
            raise ValueError("the enhanced error model needs a sample size of "
                "at least 2")

        if tag == "iterative":
            if max_iters is None or 1 > max_iters:
                raise ValueError("the iterative error model needs at least one"
                    " iteration")
            if not exact and (n_particles is None or 1 > n_particles):
                raise ValueError("particle iterations need at least one "
                    "particle")
            if update_kind not in ("mixture", "importance"):
                raise ValueError("unknown particle update '{}'".format(
                    update_kind))

        self.tag = tag
        self.sample_size = sample_size
        self.max_iters = max_iters
        self.n_particles = n_particles
        self.exact = bool(exact)
        self.update_kind = update_kind
        return None


    def __repr__(self):
        return "<{0}.ErrorModelKind {1}>".format(self.__module__, self.tag)


    @classmethod
    def from_config(cls, tag, inference, exact=False):
        """
        Build an error model from the ``inference`` section of a
        configuration: ``n_err`` sizes the enhanced model, ``iterations``,
        ``particles`` and ``update`` the iterative one.
        """

        if tag == "enhanced":
            return cls(tag, sample_size=inference.get("n_err", None))
        if tag == "iterative":
            return cls(tag, max_iters=inference.get("iterations", None),
                n_particles=inference.get("particles", None), exact=exact,
                update_kind=inference.get("update", "mixture"))
        return cls(tag)


    def run(self, pair, prior, gamma, b, rng=None, truth=None, threads=1,
        **kwargs):
        """
        Run this error model.

        :param pair:
            The forward model pair, or the linear problem
            (:class:`moderr.gaussian.LinearModelPair`) for the exact iteration.

        :param rng: [optional]
            The random streams. Required by the enhanced model and the
            particle iteration.

        :param kwargs: [optional]
            Passed to :func:`run_iterative_linear` (``tol``) or to
            :func:`run_iterative_particle` (``kl``, ``component_weights``,
            ``noise``).

        :rtype:
            :class:`ExperimentResult`
        """

        if self.tag == "conventional":
            return run_conventional(pair, prior, gamma, b, truth=truth)

        if self.tag == "enhanced":
            return run_enhanced(pair, prior, gamma, b, self.sample_size, rng,
                truth=truth, threads=threads)

        if self.exact:
            return run_iterative_linear(pair, b, self.max_iters, truth=truth,
                **kwargs)
        return run_iterative_particle(pair, prior, gamma, b, self.max_iters,
            self.n_particles, rng, update_kind=self.update_kind, truth=truth,
            threads=threads, **kwargs)


def relative_error(estimate, truth):
    """ |truth - estimate| / |truth|. """
    truth = np.asarray(truth, dtype=float)
    return np.linalg.norm(truth - np.asarray(estimate)) / np.linalg.norm(truth)


class ExperimentResult(object):
    """
    A point estimate with its traces and metadata.

    The estimate is the posterior mean for Gaussian runs and the weighted
    ensemble mean for particle runs.
    """

    def __init__(self, kind, estimate, trace=None, truth_error=None,
        metadata=None, posterior=None):
        self.kind = kind
        self.estimate = np.asarray(estimate, dtype=float)
        self.trace = trace
        self.truth_error = None if truth_error is None else list(truth_error)
        self.metadata = {} if metadata is None else dict(metadata)
        self.posterior = posterior
        self.tables = {}
        self.matrices = {}
        return None


    def __repr__(self):
        return "<{0}.ExperimentResult ({1}) at {2}>".format(self.__module__,
            self.kind, hex(id(self)))


    @property
    def final_truth_error(self):
        if not self.truth_error:
            return np.nan
        return self.truth_error[-1]


    def write(self, path, config=None):
        """
        Write the result to a directory: the configuration snapshot, the trace
        and any extra tables as CSV, the estimate (and matrices) in binary and
        CSV form, and a ``manifest.txt`` of the metadata.

        :param path:
            The output directory, created if needed.

        :param config: [optional]
            The configuration the result was produced with.
        """

        io.ensure_directory(path)
        if config is not None:
            with open(os.path.join(path, "config.yaml"), "w") as fp:
                yaml.safe_dump(config, fp, default_flow_style=False)

        if self.trace is not None:
            self.trace.write(os.path.join(path, "trace.csv"))
        for name, table in self.tables.items():
            io.write_table(table, os.path.join(path, "{}.csv".format(name)))

        matrices = dict(self.matrices)
        matrices["estimate"] = self.estimate.reshape(1, -1)
        for name, matrix in matrices.items():
            io.write_matrix(os.path.join(path, "{}.bin".format(name)), matrix)
            io.write_matrix_csv(os.path.join(path, "{}.csv".format(name)),
                matrix)

        manifest = {"kind": self.kind}
        manifest.update(self.metadata)
        io.write_manifest(os.path.join(path, "manifest.txt"), manifest)
        return None


def _affine_approximation(pair):
    if isinstance(pair, LinearModelPair):
        return (np.zeros(pair.a.shape[0]), pair.a)
    return pair.approximate_linearization


def run_conventional(pair, prior, gamma, b, truth=None):
    """
    Invert with the approximate model and no model error term.

    :param pair:
        A forward model pair with an affine approximate map, or a
        :class:`moderr.gaussian.LinearModelPair`.

    :param prior:
        The prior measure.

    :param gamma:
        The noise covariance.

    :param b:
        The data vector.

    :param truth: [optional]
        The true parameter, to record the estimate's error.

    :rtype:
        :class:`ExperimentResult`
    """

    t_init = time()
    offset, a = _affine_approximation(pair)
    posterior = posterior_update(prior, a, gamma, offset, b)
    truth_error = None if truth is None \
        else [np.linalg.norm(posterior.mean - truth)]
    logger.info("Conventional error model estimate computed in {:.2f} seconds"\
        .format(time() - t_init))
    return ExperimentResult("conventional", posterior.mean,
        truth_error=truth_error, posterior=posterior,
        metadata={"wall_time": time() - t_init})


def model_error_moments(sample):
    """
    The sample mean and the unbiased sample covariance of model errors.

    :param sample:
        A :class:`moderr.particles.ModelErrorSample` or an (n, J) array.

    :returns:
        A two-length tuple of the (J,) mean and the (J, J) covariance.
    """

    errors = np.atleast_2d(getattr(sample, "errors", sample))
    if 2 > errors.shape[0]:
        raise ValueError("at least two model errors are needed")
    mean = errors.mean(axis=0)
    covariance = np.atleast_2d(np.cov(errors, rowvar=False, ddof=1))
    return (mean, covariance)


def run_enhanced(pair, prior, gamma, b, n_err, rng, truth=None, threads=1,
    moments=None):
    """
    Invert with the approximate model and a Gaussian model error fitted to the
    prior pushforward: noise covariance gamma + Sigma and data shift m_bar.

    :param pair:
        The forward model pair (affine approximate map).

    :param prior:
        The prior measure.

    :param gamma:
        The noise covariance.

    :param b:
        The data vector.

    :param n_err:
        The number of prior draws used to fit the model error.

    :param rng:
        The random streams; the "enhanced" child streams are used.

    :type rng:
        :class:`moderr.utils.RngSpec`

    :param truth: [optional]
        The true parameter.

    :param threads: [optional]
        Worker processes for the accurate model evaluations.

    :param moments: [optional]
        Use these (mean, covariance) model error moments instead of sampling.

    :rtype:
        :class:`ExperimentResult`
    """

    t_init = time()
    evaluations = 0
    if moments is None:
        if 2 > n_err:
            raise ValueError("the enhanced error model needs n_err >= 2")
        ensemble = sample_prior(prior, n_err, rng.child("enhanced"))
        before = pair.accurate_evaluations
        me = model_error_sample(ensemble, pair, threads=threads)
        evaluations = pair.accurate_evaluations - before
        moments = model_error_moments(me)

    error_mean, error_covariance = moments
    gamma = np.atleast_2d(gamma)
    inflated = gamma + error_covariance

    # Gamma + Sigma >= Gamma in the positive semi-definite order.
    gap = loewner_gap(inflated, gamma)
    tolerance = -1e-10 * max(np.abs(error_covariance).max(), 1e-300)
    if gap < tolerance:
        raise IndefiniteCovarianceError("model error covariance is not "
            "positive semi-definite (smallest eigenvalue {:.3e})".format(gap))

    offset, a = _affine_approximation(pair)
    posterior = posterior_update(prior, a, inflated, offset + error_mean, b)

    truth_error = None if truth is None \
        else [np.linalg.norm(posterior.mean - truth)]
    logger.info("Enhanced error model estimate from {0} model errors computed "
        "in {1:.2f} seconds".format(n_err, time() - t_init))

    result = ExperimentResult("enhanced", posterior.mean,
        truth_error=truth_error, posterior=posterior,
        metadata={
            "n_err": n_err,
            "accurate_evaluations": evaluations,
            "variance_inflation_gap": float(gap),
            "wall_time": time() - t_init
        })
    result.model_error_mean = error_mean
    result.model_error_covariance = error_covariance
    return result


def run_iterative_linear(model, b, L, tol=1e-10, truth=None):
    """
    Run the exact linear-Gaussian model error iteration.

    The result trace holds the distances of every iterate to the iteration's
    own last iterate, or to the accurate-model posterior when the prior has
    only a covariance operator. The distances to the accurate-model
    posterior are kept in ``result.tables["posterior_errors"]``.

    :param model:
        The linear problem.

    :type model:
        :class:`moderr.gaussian.LinearModelPair`

    :param b:
        The data vector.

    :param L:
        The number of iterations.

    :param tol: [optional]
        The convergence tolerance.

    :param truth: [optional]
        The true parameter.

    :rtype:
        :class:`ExperimentResult`
    """

    t_init = time()
    exact = posterior_update(model.prior, model.a_star, model.gamma, 0, b)
    dense = model.prior.covariance is not None \
        and model.prior.dimension <= DENSE_LIMIT
    trace = run_linear_iteration(model, b, L, tol=tol,
        reference=None if dense else (exact.mean, exact))

    if trace.full:
        trace.set_errors(*trace.limit_errors())
        mean_errors, cov_errors = trace.errors_against(exact.mean,
            exact.covariance)
    else:
        # Errors against the exact posterior were accumulated while iterating.
        mean_errors, cov_errors = trace.mean_errors, trace.cov_errors

    result = ExperimentResult("iterative", trace.means[-1], trace=trace,
        truth_error=None if truth is None \
            else [np.linalg.norm(m - truth) for m in trace.means],
        posterior=GaussianMeasure(trace.means[-1], trace.covariances[-1],
            validate=False) if trace.full else None,
        metadata={
            "iterations": L,
            "converged_at": "none" if trace.converged_at is None \
                else trace.converged_at,
            "beta_hat": contraction_bound(model),
            "delta": model.delta,
            "wall_time": time() - t_init
        })
    result.tables["posterior_errors"] = Table(
        [np.arange(len(trace)), np.array(mean_errors, dtype=float),
         np.array(cov_errors, dtype=float)],
        names=("iter", "mean_err", "cov_err"))
    result.exact_posterior = exact
    result.posterior_mean_errors = list(mean_errors)
    result.posterior_cov_errors = list(cov_errors)
    return result


class EnsembleTrace(object):
    """ Per-generation diagnostics of a particle iteration. """

    def __init__(self):
        self.means = []
        self.variances = []
        self.ess = []
        self.truth_errors = []
        self.relative_errors = []
        self.delta_kl = []
        self.delta_kl_errors = []
        self.warnings = []
        return None


    def __len__(self):
        return len(self.means)


    def append(self, ensemble, truth=None):
        mean, variance = ensemble_moments(ensemble)
        self.means.append(mean)
        self.variances.append(variance)
        self.ess.append(effective_sample_size(ensemble.weights))
        if truth is None:
            self.truth_errors.append(np.nan)
            self.relative_errors.append(np.nan)
        else:
            self.truth_errors.append(np.linalg.norm(mean - truth))
            self.relative_errors.append(relative_error(mean, truth))
        return None


    def to_table(self):
        n = len(self)
        delta_kl = list(self.delta_kl) + [np.nan] * (n - len(self.delta_kl))
        return Table([
            np.arange(n),
            np.array(self.truth_errors, dtype=float),
            np.array(self.relative_errors, dtype=float),
            np.array(self.ess, dtype=float),
            np.array(delta_kl, dtype=float)
        ], names=("iter", "truth_err", "rel_err", "ess", "delta_kl"))


    def write(self, filename):
        io.write_table(self.to_table(), filename)
        return None


def run_iterative_particle(pair, prior, gamma, b, L, n_particles, rng,
    update_kind="mixture", noise=None, truth=None, threads=1, kl=True,
    component_weights="evidence"):
    """
    Run the particle model error iteration for L generations.

    Every generation l = 0 ... L-1 has its model errors evaluated once (N
    accurate evaluations each); those cached outputs also feed the KL
    diagnostic, so a run costs exactly L N accurate evaluations.

    :param pair:
        The forward model pair. The mixture update requires an affine
        approximate map.

    :param prior:
        The prior measure.

    :param gamma:
        The noise covariance.

    :param b:
        The data vector.

    :param L:
        The number of generations after the prior.

    :param n_particles:
        The ensemble size N.

    :param rng:
        The random streams.

    :param update_kind: [optional]
        "mixture" or "importance".

    :param noise: [optional]
        The noise density; the exact Gaussian density of ``gamma`` by default.

    :param truth: [optional]
        The true parameter.

    :param threads: [optional]
        Worker processes for the accurate model evaluations.

    :param kl: [optional]
        Compute the KL divergence differences.

    :param component_weights: [optional]
        How the mixture update picks components: "evidence" or "ensemble"
        (see :func:`moderr.particles.resample_draw_update`).

    :rtype:
        :class:`ExperimentResult`
    """

    if update_kind not in ("mixture", "importance"):
        raise ValueError("unknown particle update '{}'".format(update_kind))
    if 1 > L:
        raise ValueError("at least one generation is required")

    t_init = time()
    gamma = np.atleast_2d(gamma)
    if noise is None:
        noise = BoundedNoiseDensity(gamma)
    if update_kind == "mixture":
        offset, a = pair.approximate_linearization

    before = pair.accurate_evaluations
    trace = EnsembleTrace()
    ensemble = sample_prior(prior, n_particles, rng)
    trace.append(ensemble, truth)
    ensembles, histories = [ensemble], []

    for generation in range(L):
        me = model_error_sample(ensemble, pair, threads=threads)
        histories.append(me)

        if update_kind == "mixture":
            ensemble = mixture_update(ensemble, me, a, gamma, prior, b, rng,
                offset=offset, component_weights=component_weights)
        else:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always", DegeneracyWarning)
                ensemble = importance_update(ensemble, pair, noise, prior, b,
                    rng, me=me)
            trace.warnings.extend([str(w.message) for w in caught \
                if issubclass(w.category, DegeneracyWarning)])

        ensembles.append(ensemble)
        trace.append(ensemble, truth)
        logger.info("Generation {0}: truth error {1:.4g}, ESS {2:.1f}".format(
            generation + 1, trace.truth_errors[-1], trace.ess[-1]))

    evaluations = pair.accurate_evaluations - before
    if evaluations != L * n_particles:
        raise EvaluationCountError("expected {0} accurate evaluations but {1} "
            "were made".format(L * n_particles, evaluations))

    if kl:
        try:
            trace.delta_kl, _, trace.delta_kl_errors = kl_divergence_delta(
                ensembles[:L], pair, noise, prior, b, histories,
                full_output=True)
        except ValueError as e:
            logger.warning("KL divergence differences unavailable: {}".format(e))
            trace.warnings.append(str(e))

    mean, variance = trace.means[-1], trace.variances[-1]
    result = ExperimentResult("iterative", mean, trace=trace,
        truth_error=trace.truth_errors if truth is not None else None,
        metadata={
            "update_kind": update_kind,
            "component_weights": component_weights,
            "generations": L,
            "n_particles": n_particles,
            "accurate_evaluations": evaluations,
            "degeneracy_warnings": len(trace.warnings),
            "master_seed": rng.master_seed,
            "wall_time": time() - t_init
        })
    result.matrices["variance"] = variance.reshape(1, -1)
    result.ensembles = ensembles
    result.histories = histories
    return result
