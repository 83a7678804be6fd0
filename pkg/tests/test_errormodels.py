#!/usr/bin/env python
# -*- coding: utf-8 -*-

""" Test the conventional, enhanced and iterative error models. """

from __future__ import division, print_function

import os

import numpy as np
import pytest

from moderr import io
from moderr.errormodels import (ErrorModelKind, run_conventional, run_enhanced,
    run_iterative_linear, run_iterative_particle, model_error_moments,
    relative_error)
from moderr.gaussian import GaussianMeasure, LinearModelPair, posterior_update
from moderr.models import LinearForwardModelPair, truth_and_data
from moderr.models.priors import graph_laplacian, whittle_matern_prior
from moderr.utils import RngSpec


def linear_setup(seed=1):
    generator = RngSpec(seed).generator("setup")
    a = generator.standard_normal((4, 3))
    m = 0.2 * generator.standard_normal((4, 3))
    pair = LinearForwardModelPair(a + m, a)
    prior = GaussianMeasure(np.zeros(3), np.eye(3))
    gamma = 0.05 * np.eye(4)
    truth, b = truth_and_data(pair, prior, gamma, RngSpec(seed))
    return (pair, prior, gamma, truth, b)


def test_error_model_kind_validation():
    assert ErrorModelKind("conventional").tag == "conventional"
    with pytest.raises(ValueError):
        ErrorModelKind("optimistic")
    with pytest.raises(ValueError):
        ErrorModelKind("enhanced", sample_size=1)
    with pytest.raises(ValueError):
        ErrorModelKind("iterative", max_iters=0, n_particles=10)
    with pytest.raises(ValueError):
        ErrorModelKind("iterative", max_iters=5, n_particles=10,
            update_kind="other")


def test_truth_and_data():
    pair, prior, gamma, truth, b = linear_setup()
    again = truth_and_data(pair, prior, gamma, RngSpec(1))
    assert np.array_equal(truth, again[0]) and np.array_equal(b, again[1])

    exact = truth_and_data(pair, prior, np.zeros((4, 4)), RngSpec(1),
        truth=truth)[1]
    assert np.allclose(exact, pair.accurate(truth))
    assert pair.approximate_evaluations == 0


def test_conventional():
    pair, prior, gamma, truth, b = linear_setup()
    result = run_conventional(pair, prior, gamma, b, truth=truth)
    expected = posterior_update(prior, pair.a, gamma, 0, b)
    assert np.allclose(result.estimate, expected.mean)
    assert np.isclose(result.final_truth_error,
        np.linalg.norm(expected.mean - truth))


def test_enhanced_with_exact_moments():
    pair, prior, gamma, truth, b = linear_setup()
    m = pair.model_error_operator
    moments = (np.zeros(4), np.dot(m, m.T))
    result = run_enhanced(pair, prior, gamma, b, 0, RngSpec(2), moments=moments)
    expected = posterior_update(prior, pair.a, gamma + np.dot(m, m.T), 0, b)
    assert np.allclose(result.estimate, expected.mean)
    assert result.metadata["variance_inflation_gap"] >= -1e-12


def test_enhanced_with_sampled_moments():
    pair, prior, gamma, truth, b = linear_setup()
    result = run_enhanced(pair, prior, gamma, b, 2000, RngSpec(3))
    m = pair.model_error_operator

    assert pair.accurate_evaluations == 2000
    assert np.allclose(result.model_error_covariance, np.dot(m, m.T), atol=0.1)
    assert np.allclose(result.model_error_mean, 0, atol=0.1)


def test_model_error_moments():
    errors = np.array([[1.0, 0.0], [3.0, 2.0], [2.0, 1.0]])
    mean, covariance = model_error_moments(errors)
    assert np.allclose(mean, [2, 1])
    assert np.allclose(covariance, np.cov(errors, rowvar=False, ddof=1))
    with pytest.raises(ValueError):
        model_error_moments(errors[:1])


def test_iterative_linear(tmpdir):
    pair, prior, gamma, truth, b = linear_setup()
    model = pair.linear_model(prior, gamma)
    result = run_iterative_linear(model, b, 25, truth=truth)

    assert len(result.trace) == 26
    assert len(result.tables["posterior_errors"]) == 26
    assert result.trace.mean_errors[-1] == 0
    assert result.metadata["beta_hat"] > 0
    assert len(result.truth_error) == 26

    exact = posterior_update(prior, pair.a_star, gamma, 0, b)
    assert np.allclose(result.exact_posterior.mean, exact.mean)
    assert np.isclose(result.posterior_mean_errors[0],
        np.linalg.norm(exact.mean))

    path = str(tmpdir.join("iterative"))
    result.write(path, config={"experiment": "test"})
    for filename in ("config.yaml", "trace.csv", "posterior_errors.csv",
        "estimate.bin", "estimate.csv", "manifest.txt"):
        assert os.path.exists(os.path.join(path, filename))
    assert np.allclose(io.read_matrix(os.path.join(path, "estimate.bin")),
        result.estimate.reshape(1, -1))


def test_iterative_particle_runs_are_reproducible():
    pair, prior, gamma, truth, b = linear_setup()
    first = run_iterative_particle(pair, prior, gamma, b, 3, 200, RngSpec(4),
        truth=truth)
    second = run_iterative_particle(pair, prior, gamma, b, 3, 200, RngSpec(4),
        truth=truth)

    assert np.array_equal(first.estimate, second.estimate)
    assert first.truth_error == second.truth_error
    assert first.metadata["accurate_evaluations"] == 600
    assert np.isclose(relative_error(first.estimate, truth),
        first.trace.relative_errors[-1])


def test_iterative_particle_importance():
    pair, prior, gamma, truth, b = linear_setup()
    result = run_iterative_particle(pair, prior, gamma, b, 2, 300, RngSpec(5),
        update_kind="importance", truth=truth)
    assert result.metadata["update_kind"] == "importance"
    assert not result.ensembles[-1].uniform
    assert len(result.trace.ess) == 3

    with pytest.raises(ValueError):
        run_iterative_particle(pair, prior, gamma, b, 2, 10, RngSpec(5),
            update_kind="other")


def test_error_model_kind_runs_the_drivers():
    pair, prior, gamma, truth, b = linear_setup()
    inference = {"n_err": 50, "iterations": 3, "particles": 100}

    conventional = ErrorModelKind.from_config("conventional", inference)
    assert np.allclose(conventional.run(pair, prior, gamma, b).estimate,
        run_conventional(pair, prior, gamma, b).estimate)

    enhanced = ErrorModelKind.from_config("enhanced", inference)
    assert enhanced.sample_size == 50
    assert np.allclose(enhanced.run(pair, prior, gamma, b, rng=RngSpec(2))\
        .estimate, run_enhanced(pair, prior, gamma, b, 50, RngSpec(2)).estimate)

    particle = ErrorModelKind.from_config("iterative", inference)
    assert not particle.exact and particle.n_particles == 100
    result = particle.run(pair, prior, gamma, b, rng=RngSpec(4), truth=truth,
        kl=False)
    expected = run_iterative_particle(pair, prior, gamma, b, 3, 100,
        RngSpec(4), kl=False)
    assert np.array_equal(result.estimate, expected.estimate)
    assert len(result.truth_error) == 4

    exact = ErrorModelKind.from_config("iterative", inference, exact=True)
    result = exact.run(pair.linear_model(prior, gamma), prior, gamma, b,
        tol=1e-12)
    assert len(result.trace) == 4

    with pytest.raises(ValueError):
        ErrorModelKind.from_config("enhanced", {})
    with pytest.raises(ValueError):
        ErrorModelKind.from_config("iterative", {"iterations": 3})


def test_iterative_linear_with_an_operator_form_prior():
    laplacian = graph_laplacian(6)
    generator = RngSpec(6).generator("problem")
    a = generator.standard_normal((4, 36)) / 6
    m = 0.1 * generator.standard_normal((4, 36)) / 6
    gamma = 0.01 * np.eye(4)
    b = np.ones(4)

    results = []
    for dense_limit in (4096, 16):
        prior = whittle_matern_prior(0.2, 1.0, laplacian,
            dense_limit=dense_limit)
        results.append(run_iterative_linear(
            LinearModelPair(a + m, a, gamma, prior), b, 6))
    dense, operator = results

    assert dense.posterior is not None and operator.posterior is None
    assert np.allclose(operator.estimate, dense.estimate)
    assert np.allclose(operator.posterior_mean_errors,
        dense.posterior_mean_errors)
    assert np.allclose(operator.posterior_cov_errors,
        dense.posterior_cov_errors)
    assert len(operator.tables["posterior_errors"]) == 7
