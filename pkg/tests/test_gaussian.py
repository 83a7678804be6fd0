#!/usr/bin/env python
# -*- coding: utf-8 -*-

""" Test the linear-Gaussian updates and the model-error iteration. """

from __future__ import division, print_function

import numpy as np
import pytest

from moderr.gaussian import (GaussianMeasure, LinearModelPair, IllPosedError,
    IndefiniteCovarianceError, InsufficientDecayError, posterior_update,
    iterate_step, run_linear_iteration, precision_iterate, contraction_bound,
    estimate_rate, loewner_gap, frobenius_distance)
from moderr.models.priors import graph_laplacian, whittle_matern_prior
from moderr.utils import NumericalError, RngSpec


def small_problem(delta=1.0, error_scale=0.1, seed=7):
    generator = RngSpec(seed).generator("problem")
    a = generator.standard_normal((3, 4))
    m = error_scale * generator.standard_normal((3, 4))
    x = generator.standard_normal((4, 4))
    prior = GaussianMeasure(0.1 * np.ones(4), np.dot(x, x.T) / 4 + 0.5 * np.eye(4))
    gamma = 0.1 * np.eye(3)
    b = generator.standard_normal(3)
    return (LinearModelPair(a + m, a, gamma, prior, delta=delta), b)


def precision_form(prior, a, gamma, shift, b):
    gamma_inv = np.linalg.inv(gamma)
    c0_inv = np.linalg.inv(prior.covariance)
    covariance = np.linalg.inv(np.dot(a.T, np.dot(gamma_inv, a)) + c0_inv)
    mean = np.dot(covariance, np.dot(a.T, np.dot(gamma_inv, b - shift)) \
        + np.dot(c0_inv, prior.mean))
    return (mean, covariance)


def test_posterior_update_matches_precision_form():
    model, b = small_problem()
    shift = np.array([0.1, -0.2, 0.3])
    posterior = posterior_update(model.prior, model.a, model.gamma, shift, b)
    mean, covariance = precision_form(model.prior, model.a, model.gamma, shift, b)

    assert np.allclose(posterior.mean, mean)
    assert np.allclose(posterior.covariance, covariance)
    assert np.allclose(posterior.covariance, posterior.covariance.T)


def test_ill_posed_inner_matrix():
    prior = GaussianMeasure(np.zeros(2), np.eye(2))
    a = np.array([[1.0, 0.0], [1.0, 0.0]])
    with pytest.raises(IllPosedError):
        posterior_update(prior, a, np.zeros((2, 2)), 0, np.ones(2))


def test_gaussian_measure_validation():
    with pytest.raises(ValueError):
        GaussianMeasure(np.zeros(2), np.array([[1.0, 0.5], [0.0, 1.0]]))
    with pytest.raises(ValueError):
        GaussianMeasure(np.zeros(2), np.diag([1.0, -1.0]))
    with pytest.raises(ValueError):
        GaussianMeasure(np.zeros(3), np.eye(2))


def test_gaussian_measure_sampling():
    covariance = np.array([[2.0, 0.5], [0.5, 1.0]])
    measure = GaussianMeasure([1.0, -1.0], covariance)
    samples = measure.sample(40000, RngSpec(3).generator("sample"))

    assert samples.shape == (40000, 2)
    assert np.allclose(samples.mean(axis=0), measure.mean, atol=0.05)
    assert np.allclose(np.cov(samples, rowvar=False), covariance, atol=0.1)


def test_no_model_error_converges_in_one_step():
    model, b = small_problem()
    model = LinearModelPair(model.a, model.a, model.gamma, model.prior)
    trace = run_linear_iteration(model, b, 5)
    exact = posterior_update(model.prior, model.a, model.gamma, 0, b)

    assert trace.converged_at == 1
    for mean, covariance in zip(trace.means[1:], trace.covariances[1:]):
        assert np.allclose(mean, exact.mean)
        assert np.allclose(covariance, exact.covariance)


def test_zero_delta_is_the_conventional_posterior():
    model, b = small_problem(delta=0.0)
    trace = run_linear_iteration(model, b, 4)
    conventional = posterior_update(model.prior, model.a, model.gamma, 0, b)

    assert trace.converged_at == 1
    assert np.allclose(trace.means[-1], conventional.mean)
    assert np.allclose(trace.covariances[-1], conventional.covariance)


def test_covariances_do_not_depend_on_data():
    model, b = small_problem()
    trace = run_linear_iteration(model, b, 6)
    other = run_linear_iteration(model, 3 * b + 1, 6)
    for c1, c2 in zip(trace.covariances, other.covariances):
        assert np.allclose(c1, c2)


def test_iterates_dominate_the_conventional_covariance():
    model, b = small_problem(error_scale=0.3)
    trace = run_linear_iteration(model, b, 10)
    conventional = posterior_update(model.prior, model.a, model.gamma, 0, b)
    for covariance in trace.covariances[1:]:
        assert loewner_gap(covariance, conventional.covariance) > -1e-12


def test_fixed_point():
    model, b = small_problem(error_scale=0.02)
    assert 1 > contraction_bound(model)

    trace = run_linear_iteration(model, b, 60, tol=1e-13)
    assert trace.converged_at is not None

    limit = GaussianMeasure(trace.means[-1], trace.covariances[-1])
    step = iterate_step(model, limit, b)
    assert np.allclose(step.mean, limit.mean, rtol=1e-10, atol=1e-12)
    assert np.allclose(step.covariance, limit.covariance, rtol=1e-10,
        atol=1e-12)

    precision = np.linalg.inv(trace.covariances[-1])
    assert np.allclose(precision_iterate(precision, model), precision,
        rtol=1e-8)


def test_iteration_step_sizes_and_errors():
    model, b = small_problem()
    trace = run_linear_iteration(model, b, 8)

    assert len(trace) == 9
    assert np.isnan(trace.mean_steps[0]) and np.isnan(trace.cov_steps[0])
    mean_errors, cov_errors = trace.limit_errors()
    assert mean_errors[-1] == 0 and cov_errors[-1] == 0

    table = trace.to_table()
    assert table.colnames == ["iter", "mean_err", "cov_err", "mean_step",
        "cov_step"]
    assert len(table) == 9


def test_contraction_bound_does_not_scale_with_delta():
    model, b = small_problem()
    assert np.isclose(contraction_bound(model),
        contraction_bound(model.with_delta(0.25)))


def test_mean_errors_decay_within_the_bound():
    model, b = small_problem(delta=0.5, error_scale=0.05)
    beta_hat = contraction_bound(model)
    trace = run_linear_iteration(model, b, 30, tol=0)
    mean_errors, _ = trace.limit_errors()
    slope = estimate_rate(mean_errors[1:], plateau_floor=1e-11)
    assert np.log(beta_hat * model.delta) + 0.1 >= slope


def test_estimate_rate():
    errors = 3 * np.exp(-0.7 * np.arange(10))
    slope, intercept, r_squared, n = estimate_rate(errors, full_output=True)
    assert np.isclose(slope, -0.7)
    assert np.isclose(intercept, np.log(3))
    assert np.isclose(r_squared, 1)
    assert n == 10

    plateaued = np.hstack([errors[:5], np.zeros(5)])
    assert estimate_rate(plateaued, full_output=True)[3] == 5
    assert np.isclose(estimate_rate(plateaued), -0.7)


def test_estimate_rate_needs_three_points():
    with pytest.raises(InsufficientDecayError):
        estimate_rate([1.0, 0.1, 0.0, 0.0])
    with pytest.raises(InsufficientDecayError):
        estimate_rate([])


def test_linear_model_pair_validation():
    prior = GaussianMeasure(np.zeros(2), np.eye(2))
    with pytest.raises(ValueError):
        LinearModelPair(np.eye(2), np.eye(3)[:2], np.eye(2), prior)
    with pytest.raises(ValueError):
        LinearModelPair(np.eye(2), np.eye(2), -np.eye(2), prior)
    with pytest.raises(ValueError):
        LinearModelPair(np.eye(2), np.eye(2), np.eye(2), prior, delta=-1)


def two_by_two():
    prior = GaussianMeasure(np.zeros(2), np.eye(2))
    model = LinearModelPair(np.eye(2), 0.9 * np.eye(2), 0.01 * np.eye(2), prior)
    return (model, np.ones(2))


def test_scalar_conjugate_update():
    prior = GaussianMeasure([0.0], [[1.0]])
    posterior = posterior_update(prior, [[1.0]], [[1.0]], 0, [2.0])
    assert np.allclose(posterior.mean, [1.0])
    assert np.allclose(posterior.covariance, [[0.5]])

    unchanged = posterior_update(prior, [[0.0]], [[1.0]], 0, [2.0])
    assert np.allclose(unchanged.mean, prior.mean)
    assert np.allclose(unchanged.covariance, prior.covariance)


def test_two_by_two_iteration_reaches_its_fixed_point():
    model, b = two_by_two()
    trace = run_linear_iteration(model, b, 50, tol=1e-12)

    assert np.allclose(trace.means[20], trace.means[50], rtol=0, atol=1e-10)
    assert np.allclose(trace.covariances[20], trace.covariances[50], rtol=0,
        atol=1e-10)
    assert trace.converged_at is not None
    assert 25 >= trace.converged_at >= 1


def test_precision_iteration_is_monotone():
    model, b = two_by_two()
    precision = model.prior_precision
    for iteration in range(50):
        following = precision_iterate(precision, model)
        assert loewner_gap(following, precision) >= -1e-10
        precision = following


def test_contraction_bound_without_an_approximate_operator():
    prior = GaussianMeasure(np.zeros(2), np.eye(2))
    model = LinearModelPair(np.eye(2), np.zeros((2, 2)), 0.01 * np.eye(2),
        prior)
    assert contraction_bound(model) == 0


def test_frobenius_distance_of_operators():
    covariance = np.array([[2.0, 0.5, 0.0], [0.5, 1.0, 0.1], [0.0, 0.1, 3.0]])
    dense = GaussianMeasure(np.zeros(3), covariance)
    operator = GaussianMeasure(np.zeros(3),
        covariance_operator=lambda x: np.dot(covariance, x))

    assert np.isclose(frobenius_distance(operator, block=2),
        np.linalg.norm(covariance))
    assert np.isclose(frobenius_distance(operator, np.eye(3), block=1),
        np.linalg.norm(covariance - np.eye(3)))
    assert frobenius_distance(operator, dense) == 0
    assert np.allclose(operator.summary()["marginal_variances"],
        np.diag(covariance))


def test_iteration_with_an_operator_form_prior():
    laplacian = graph_laplacian(8)
    dense_prior = whittle_matern_prior(0.1, 1.0, laplacian)
    operator_prior = whittle_matern_prior(0.1, 1.0, laplacian, dense_limit=16)
    assert operator_prior.covariance is None

    generator = RngSpec(3).generator("problem")
    a = generator.standard_normal((5, 64)) / 8
    m = 0.1 * generator.standard_normal((5, 64)) / 8
    gamma = 0.01 * np.eye(5)
    b = np.ones(5)

    dense = run_linear_iteration(
        LinearModelPair(a + m, a, gamma, dense_prior), b, 5)
    operator = run_linear_iteration(
        LinearModelPair(a + m, a, gamma, operator_prior), b, 5)

    assert dense.full and not operator.full
    assert len(operator) == 6
    for mean, expected in zip(operator.means, dense.means):
        assert np.allclose(mean, expected)
    assert np.allclose(operator.cov_steps[1:], dense.cov_steps[1:])
    for summary, covariance in zip(operator.covariances, dense.covariances):
        assert np.isclose(summary["trace"], np.trace(covariance))
        assert np.isclose(summary["frobenius"], np.linalg.norm(covariance))
        assert np.allclose(summary["marginal_variances"], np.diag(covariance))

    exact = posterior_update(dense_prior, a + m, gamma, 0, b)
    traced = run_linear_iteration(
        LinearModelPair(a + m, a, gamma, operator_prior), b, 5,
        reference=(exact.mean, exact.covariance))
    mean_errors, cov_errors = dense.errors_against(exact.mean,
        exact.covariance)
    assert np.allclose(traced.mean_errors, mean_errors)
    assert np.allclose(traced.cov_errors, cov_errors)

    with pytest.raises(ValueError):
        operator.limit_errors()


def test_numerical_failures_share_a_base_class():
    singular = GaussianMeasure(np.zeros(2), np.diag([1.0, 0.0]))
    model = LinearModelPair(np.eye(2), np.eye(2), np.eye(2), singular)
    with pytest.raises(NumericalError):
        precision_iterate(np.eye(2), model)
    with pytest.raises(IllPosedError):
        precision_iterate(-np.eye(2), model)

    indefinite = GaussianMeasure(np.zeros(2), np.diag([1.0, -1.0]),
        validate=False)
    with pytest.raises(IndefiniteCovarianceError):
        indefinite.factor
    assert issubclass(IndefiniteCovarianceError, NumericalError)
