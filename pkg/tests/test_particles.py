#!/usr/bin/env python
# -*- coding: utf-8 -*-

""" Test particle ensembles, updates and diagnostics. """

from __future__ import division, print_function

import numpy as np
import pytest
from scipy import stats

from moderr.errormodels import run_iterative_particle
from moderr.gaussian import (GaussianMeasure, posterior_update,
    run_linear_iteration)
from moderr.models import (ForwardModelPair, LinearForwardModelPair,
    SolverBreakdownError)
from moderr.particles import (ParticleEnsemble, BoundedNoiseDensity,
    ParticleEvaluationError, ModelErrorSample, GaussianInnerSampler,
    RejectionInnerSampler, sample_prior, model_error_sample,
    cumulative_weights, search_cumulative, systematic_resample,
    multinomial_resample, resample_draw_update, mixture_update,
    importance_update,
    mixture_log_likelihood, effective_sample_size, ensemble_moments,
    kl_divergence_delta, empirical_operator_distance, grid_reference)
from moderr.utils import RngSpec


class FailingPair(ForwardModelPair):
    """ A one-dimensional pair whose accurate map fails for positive inputs. """

    def __init__(self):
        super(FailingPair, self).__init__(1, 1)

    def _accurate(self, u):
        if u[0] > 0:
            raise SolverBreakdownError("positive input")
        return u.copy()

    def _approximate(self, u):
        return 0.5 * u


class QuadraticPair(ForwardModelPair):
    """ f(u) = u^2 and F(u) = u^2 + 0.1 u on a scalar parameter. """

    def __init__(self):
        super(QuadraticPair, self).__init__(1, 1)

    def _accurate_many(self, u):
        return u**2 + 0.1 * u

    def _approximate_many(self, u):
        return u**2


class FixedUniform(object):
    """ Returns the same uniform variate for every draw. """

    def __init__(self, value):
        self.value = value

    def random(self, size=None):
        return self.value if size is None else np.full(size, self.value)


def toy():
    pair = LinearForwardModelPair([[1.0]], [[0.8]])
    prior = GaussianMeasure([0.0], [[1.0]])
    gamma = np.array([[0.25]])
    return (pair, prior, gamma, np.array([1.0]))


def test_ensemble_weights_are_normalized_and_frozen():
    ensemble = ParticleEnsemble(np.arange(4.0), weights=[1, 1, 2, 0])
    assert np.isclose(ensemble.weights.sum(), 1)
    assert ensemble.particles.shape == (4, 1)
    with pytest.raises(ValueError):
        ensemble.weights[0] = 0.5

    with pytest.raises(ValueError):
        ParticleEnsemble(np.arange(3.0), weights=[1, -1, 1])
    with pytest.raises(ValueError):
        ParticleEnsemble(np.arange(3.0), weights=[0, 0, 0])

    table = ensemble.to_table()
    assert table.colnames == ["particle_index", "weight", "u_1"]


def test_systematic_resampling_counts():
    weights = np.array([0.5, 0.25, 0.125, 0.125])
    rng = RngSpec(1)
    for i in range(20):
        indices = systematic_resample(weights, rng.generator("resample", i))
        counts = np.bincount(indices, minlength=4)
        assert counts[0] == 2 and counts[1] == 1
        assert counts.sum() == 4
        assert np.all(counts >= np.floor(4 * weights))
        assert np.all(counts <= np.ceil(4 * weights))


def test_multinomial_resampling():
    indices = multinomial_resample([0.0, 1.0, 0.0], RngSpec(2).generator("r"))
    assert np.all(indices == 1)


def test_noise_density():
    gamma = np.array([[0.5, 0.1], [0.1, 0.3]])
    residuals = RngSpec(3).generator("r").standard_normal((5, 2))

    exact = BoundedNoiseDensity(gamma)
    expected = stats.multivariate_normal(np.zeros(2), gamma).logpdf(residuals)
    assert np.allclose(exact.log_density(residuals), expected)

    clamped = BoundedNoiseDensity(gamma, kappa=0.05, mode="clamped")
    values = clamped.log_density(10 * residuals)
    assert np.all(values >= np.log(0.05) - 1e-12)
    assert np.all(values <= -np.log(0.05) + 1e-12)
    assert clamped.log_supremum <= -np.log(0.05)

    with pytest.raises(ValueError):
        BoundedNoiseDensity(gamma, mode="clamped")
    with pytest.raises(ValueError):
        BoundedNoiseDensity(-gamma)


def test_model_error_sample_counts_evaluations():
    pair, prior, gamma, b = toy()
    ensemble = sample_prior(prior, 20, RngSpec(4))
    me = model_error_sample(ensemble, pair)

    assert pair.accurate_evaluations == 20
    assert np.allclose(me.errors, 0.2 * ensemble.particles)
    assert me.source_generation == 0
    assert np.allclose(me.accurate_outputs - me.approximate_outputs, me.errors)


def test_model_error_sample_in_workers():
    pair, prior, gamma, b = toy()
    ensemble = sample_prior(prior, 8, RngSpec(4))
    serial = model_error_sample(ensemble, pair)
    parallel = model_error_sample(ensemble, pair, threads=2)
    assert np.array_equal(serial.errors, parallel.errors)
    assert pair.accurate_evaluations == 16


def test_particle_evaluation_error_names_the_particle():
    pair = FailingPair()
    ensemble = ParticleEnsemble([[-1.0], [-2.0], [3.0], [-0.5]])
    with pytest.raises(ParticleEvaluationError) as excinfo:
        model_error_sample(ensemble, pair)
    assert excinfo.value.index == 2


def test_mixture_update_is_the_generic_update():
    pair, prior, gamma, b = toy()
    rng = RngSpec(5)
    ensemble = sample_prior(prior, 50, rng)
    me = model_error_sample(ensemble, pair)

    mixture = mixture_update(ensemble, me, pair.a, gamma, prior, b, rng)
    generic = resample_draw_update(ensemble, me, prior,
        BoundedNoiseDensity(gamma), pair, b, rng)
    assert np.array_equal(mixture.particles, generic.particles)
    assert mixture.generation == 1 and mixture.uniform


def test_mixture_update_without_model_error_samples_the_posterior():
    pair = LinearForwardModelPair([[0.8]], [[0.8]])
    prior = GaussianMeasure([0.0], [[1.0]])
    gamma, b = np.array([[0.25]]), np.array([1.0])
    rng = RngSpec(6)

    ensemble = sample_prior(prior, 4000, rng)
    me = model_error_sample(ensemble, pair)
    updated = mixture_update(ensemble, me, pair.a, gamma, prior, b, rng)

    posterior = posterior_update(prior, pair.a, gamma, 0, b)
    mean, variance = ensemble_moments(updated)
    sigma = np.sqrt(posterior.covariance[0, 0])
    assert abs(mean[0] - posterior.mean[0]) < 4 * sigma / np.sqrt(4000)
    assert abs(variance[0] / posterior.covariance[0, 0] - 1) < 0.1


def test_rejection_sampler_uses_one_stream_per_particle():
    pair, prior, gamma, b = toy()
    noise = BoundedNoiseDensity(gamma, kappa=0.05, mode="clamped")
    sampler = RejectionInnerSampler(prior, noise, pair.approximate, b)
    errors = np.array([[0.1], [-0.2], [0.3]])
    rng = RngSpec(7)

    drawn = sampler.draw(errors, rng, 0)
    assert drawn.shape == (3, 1)
    assert sampler.proposals >= 3
    assert np.array_equal(drawn[:2], sampler.draw(errors[:2], rng, 0))
    assert not np.array_equal(drawn, sampler.draw(errors, rng, 1))


def test_importance_update():
    pair, prior, gamma, b = toy()
    noise = BoundedNoiseDensity(gamma)
    rng = RngSpec(8)
    ensemble = sample_prior(prior, 500, rng)

    updated = importance_update(ensemble, pair, noise, prior, b, rng)
    again = importance_update(ensemble, pair, noise, prior, b, rng)
    assert np.isclose(updated.weights.sum(), 1)
    assert updated.generation == 1
    assert np.array_equal(updated.weights, again.weights)
    assert 500 >= effective_sample_size(updated.weights) > 1


def test_mixture_log_likelihood_with_one_component():
    noise = BoundedNoiseDensity(np.array([[0.25]]))
    outputs = np.array([[0.0], [0.5], [1.0]])
    values = mixture_log_likelihood(outputs, np.array([[0.2]]), [1.0], noise,
        np.array([1.0]))
    assert np.allclose(values, noise.log_density(1.0 - outputs - 0.2))


def test_particle_iteration_budget_and_kl():
    pair, prior, gamma, b = toy()
    result = run_iterative_particle(pair, prior, gamma, b, 3, 400, RngSpec(9),
        truth=np.array([1.0]))

    assert pair.accurate_evaluations == 3 * 400
    assert result.metadata["accurate_evaluations"] == 1200
    assert len(result.ensembles) == 4 and len(result.histories) == 3

    deltas = result.trace.delta_kl
    assert len(deltas) == 3
    assert deltas[-1] == 0
    assert np.all(np.isfinite(deltas))
    assert len(result.trace.to_table()) == 4


def test_kl_needs_the_previous_generation():
    pair, prior, gamma, b = toy()
    result = run_iterative_particle(pair, prior, gamma, b, 2, 50, RngSpec(10),
        kl=False)
    with pytest.raises(ValueError):
        kl_divergence_delta(result.ensembles[1:2], pair,
            BoundedNoiseDensity(gamma), prior, b, result.histories[1:2])


def test_kl_of_the_prior_alone_is_zero():
    pair, prior, gamma, b = toy()
    rng = RngSpec(11)
    ensemble = sample_prior(prior, 100, rng)
    me = model_error_sample(ensemble, pair)
    deltas, divergences, errors = kl_divergence_delta([ensemble], pair,
        BoundedNoiseDensity(gamma), prior, b, [me], full_output=True)
    assert deltas == [0]
    assert divergences[0] >= 0


def test_grid_reference_with_a_flat_likelihood():
    pair, prior, gamma, b = toy()
    flat = BoundedNoiseDensity(gamma, kappa=1.0, mode="clamped")
    measures = grid_reference(prior, flat, lambda u: 0.8 * u, lambda u: u, b, 2,
        n_points=500)
    assert len(measures) == 3
    for measure in measures:
        assert np.isclose(measure.weights.sum(), 1)
        assert np.allclose(measure.weights, measures[0].weights)


def test_empirical_distance_needs_replicates():
    reference = ParticleEnsemble(np.linspace(-3, 3, 101))
    ensembles = [ParticleEnsemble(np.linspace(-3, 3, 101))] * 15
    with pytest.raises(ValueError):
        empirical_operator_distance(reference, ensembles)
    assert empirical_operator_distance(reference, ensembles,
        min_replicates=1) == 0


def test_component_evidences():
    pair, prior, gamma, b = toy()
    sampler = GaussianInnerSampler(pair.a, gamma, prior, b)
    errors = np.array([[0.0], [0.3], [-0.5]])

    inner = gamma + np.dot(pair.a, pair.a.T)
    expected = stats.multivariate_normal(np.zeros(1), inner).logpdf(b - errors)
    values = sampler.log_evidence(errors)
    assert np.allclose(values - values[0], expected - expected[0])

    # p_k = C (A^T gamma^-1 (b - m_k) + C_0^-1 m_0), with C_0 = 1 and m_0 = 0.
    covariance = 1.0 / (0.8**2 / 0.25 + 1.0)
    means = covariance * 0.8 / 0.25 * (b - errors)
    assert np.allclose(sampler.mixture_means(errors), means)
    assert np.allclose(sampler.covariance, [[covariance]])


def test_mixture_update_follows_the_gaussian_iterates():
    pair, prior, gamma, b = toy()
    N = 4000
    result = run_iterative_particle(pair, prior, gamma, b, 3, N, RngSpec(12),
        kl=False)
    exact = run_linear_iteration(pair.linear_model(prior, gamma), b, 3)
    for g in range(1, 4):
        sigma = np.sqrt(exact.covariances[g][0, 0])
        assert 4 * sigma / np.sqrt(N) > abs(result.trace.means[g][0] \
            - exact.means[g][0])


def test_component_weighting_rules():
    pair, prior, gamma, b = toy()
    rng = RngSpec(13)
    ensemble = sample_prior(prior, 200, rng)
    me = model_error_sample(ensemble, pair)

    evidence = mixture_update(ensemble, me, pair.a, gamma, prior, b, rng)
    literal = mixture_update(ensemble, me, pair.a, gamma, prior, b, rng,
        component_weights="ensemble")
    assert not np.array_equal(evidence.particles, literal.particles)

    with pytest.raises(ValueError):
        mixture_update(ensemble, me, pair.a, gamma, prior, b, rng,
            component_weights="uniform")

    # Equal evidences: both rules pick the same components.
    constant = ModelErrorSample(np.ones((200, 1)), 0)
    assert np.array_equal(
        mixture_update(ensemble, constant, pair.a, gamma, prior, b, rng)\
            .particles,
        mixture_update(ensemble, constant, pair.a, gamma, prior, b, rng,
            component_weights="ensemble").particles)


def test_rejection_mixture_draws():
    pair, prior, gamma, b = toy()
    noise = BoundedNoiseDensity(gamma, kappa=0.05, mode="clamped")
    sampler = RejectionInnerSampler(prior, noise, pair.approximate, b)
    errors = np.array([[0.1], [-0.2], [0.3], [0.0]])
    rng = RngSpec(14)

    drawn = sampler.draw_mixture(errors, [0.1, 0.2, 0.3, 0.4], rng, 0)
    assert drawn.shape == (4, 1)
    assert np.array_equal(drawn[:2],
        sampler.draw_mixture(errors, [0.1, 0.2, 0.3, 0.4], rng, 0, n=2))

    ensemble = ParticleEnsemble(np.zeros((4, 1)))
    me = ModelErrorSample(errors, 0)
    updated = resample_draw_update(ensemble, me, prior, noise, pair, b, rng,
        inner_sampler=sampler)
    assert np.array_equal(updated.particles,
        sampler.draw_mixture(errors, ensemble.weights, rng, 0))


def test_resampling_never_selects_zero_weights():
    weights = np.hstack([np.full(10, 0.1), 0.0])
    cumulative = cumulative_weights(weights)
    assert cumulative[-1] == 1.0 and cumulative[-2] == 1.0
    assert search_cumulative(cumulative, [1.0])[0] == 9

    top = FixedUniform(np.nextafter(1.0, 0.0))
    assert systematic_resample(weights, top).max() == 9
    assert np.all(multinomial_resample(weights, top) == 9)

    interior = np.array([0.5, 0.0, 0.5])
    rng = RngSpec(15)
    for i in range(20):
        indices = systematic_resample(interior, rng.generator("resample", i))
        assert 1 not in indices

    with pytest.raises(ValueError):
        cumulative_weights([0.0, 0.0])


def test_clamped_noise_supremum():
    wide = BoundedNoiseDensity(np.array([[1e4]]), kappa=0.5, mode="clamped")
    assert np.isclose(wide.log_supremum, np.log(0.5))
    assert np.allclose(wide.log_density(np.array([[0.0], [3.0]])),
        wide.log_supremum)

    narrow = BoundedNoiseDensity(np.array([[1e-6]]), kappa=0.5, mode="clamped")
    assert np.isclose(narrow.log_supremum, -np.log(0.5))

    exact = BoundedNoiseDensity(np.array([[0.25]]))
    assert np.isclose(exact.log_supremum, exact.log_density(np.zeros(1)))


def test_effective_sample_size():
    assert np.isclose(effective_sample_size(np.full(100, 0.01)), 100)
    assert np.isclose(effective_sample_size(np.hstack([0.5, 0.5,
        np.zeros(98)])), 2)


def test_moments_of_two_particles():
    mean, variance = ensemble_moments(ParticleEnsemble([[1.0], [-1.0]],
        weights=[0.5, 0.5]))
    assert np.allclose(mean, 0)
    assert np.allclose(variance, 1)


def test_sample_prior_without_variance():
    prior = GaussianMeasure([1.0, -2.0], np.zeros((2, 2)))
    ensemble = sample_prior(prior, 5, RngSpec(16))
    assert np.allclose(ensemble.particles, prior.mean)
    assert ensemble.uniform and ensemble.generation == 0


def test_importance_update_with_a_flat_likelihood():
    pair, prior, gamma, b = toy()
    flat = BoundedNoiseDensity(gamma, kappa=1.0, mode="clamped")
    rng = RngSpec(17)

    ensemble = sample_prior(prior, 50, rng)
    updated = importance_update(ensemble, pair, flat, prior, b, rng)
    assert np.allclose(updated.weights, 1.0 / 50)

    single = sample_prior(prior, 1, rng)
    updated = importance_update(single, pair, BoundedNoiseDensity(gamma),
        prior, b, rng)
    assert np.array_equal(updated.weights, [1.0])


def test_bimodal_rejection_update_matches_the_grid():
    pair = QuadraticPair()
    prior = GaussianMeasure([0.0], [[1.0]])
    noise = BoundedNoiseDensity(np.array([[0.1]]))
    b = np.array([1.0])
    rng = RngSpec(18)
    N = 20000

    ensemble = sample_prior(prior, N, rng)
    me = model_error_sample(ensemble, pair)
    updated = resample_draw_update(ensemble, me, prior, noise, pair, b, rng)

    reference = grid_reference(prior, noise, pair.approximate, pair.accurate,
        b, 1, n_points=10000)[1]
    bins = np.linspace(-3, 3, 41)
    expected = np.histogram(reference.particles[:, 0], bins,
        weights=reference.weights)[0]
    observed = np.histogram(updated.particles[:, 0], bins)[0] / float(N)
    assert 0.05 > 0.5 * np.abs(observed - expected).sum()

    # Both modes are populated.
    assert 0.6 > np.mean(updated.particles[:, 0] > 0) > 0.4


def test_kl_differences_vanish_without_model_error():
    pair = LinearForwardModelPair([[0.8]], [[0.8]])
    prior = GaussianMeasure([0.0], [[1.0]])
    gamma, b = np.array([[0.25]]), np.array([1.0])
    result = run_iterative_particle(pair, prior, gamma, b, 3, 1000,
        RngSpec(19))

    deltas = np.array(result.trace.delta_kl)
    errors = np.array(result.trace.delta_kl_errors)
    assert np.all(np.abs(deltas[1:]) <= 3 * errors[1:] + 1e-12)
    assert deltas[0] > 0
