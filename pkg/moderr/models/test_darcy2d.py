#!/usr/bin/env python
# -*- coding: utf-8 -*-

""" Test the Darcy flow solver, its linearization and the model pair. """

from __future__ import division, print_function

import numpy as np
import pytest

from moderr.models import SolverBreakdownError
from moderr.models.darcy2d import (Darcy2DConfig, DarcySolver, darcy2d_pair,
    darcy2d_solve, darcy2d_observe, cell_centres, prolongation, two_bump_field)
from moderr.utils import RngSpec


def test_second_order_convergence():
    errors = []
    for n in (16, 32, 64):
        x1, x2 = np.meshgrid(cell_centres(n), cell_centres(n), indexing="ij")
        exact = 100 / (2 * np.pi**2) * np.sin(np.pi * x1) * np.sin(np.pi * x2)
        p = darcy2d_solve(np.zeros(n**2), n)
        errors.append(np.abs(p - exact.flatten()).max())

    ratios = np.array(errors[:-1]) / np.array(errors[1:])
    assert np.all(ratios > 3) and np.all(ratios < 5)


def test_adjoint_jacobian():
    config = Darcy2DConfig(16, 16, obs_width=0.05)
    solver = DarcySolver(16, config.source_amplitude, config.obs_points,
        config.obs_width)
    u0 = 0.5 * two_bump_field(16)

    baseline, jacobian = solver.linearize(u0)
    assert solver.solves == 26
    assert jacobian.shape == (25, 256)
    assert np.allclose(baseline, solver.observe(solver.solve(u0)))

    h = 1e-5
    for v in RngSpec(3).generator("directions").standard_normal((3, 256)):
        finite_difference = (solver.observe(solver.solve(u0 + h * v)) \
            - solver.observe(solver.solve(u0 - h * v))) / (2 * h)
        relative = np.linalg.norm(np.dot(jacobian, v) - finite_difference) \
            / np.linalg.norm(finite_difference)
        assert 1e-5 > relative


def test_observation_of_the_same_field_on_two_grids():
    config = Darcy2DConfig(64, 32)
    coarse, fine = darcy2d_solve(np.zeros(32**2), 32), \
        darcy2d_solve(np.zeros(64**2), 64)
    assert np.allclose(darcy2d_observe(coarse, config),
        darcy2d_observe(fine, config), rtol=0.05)


def test_prolongation():
    operator = prolongation(4, 8)
    assert operator.shape == (64, 16)
    assert np.allclose(operator.dot(np.ones(16)), 1)
    assert np.allclose(prolongation(4, 4).toarray(), np.eye(16))


def test_solver_breakdown():
    with pytest.raises(SolverBreakdownError):
        darcy2d_solve(np.full(16, 1e4), 4)
    with pytest.raises(ValueError):
        darcy2d_solve(np.zeros(10), 4)


def test_pair():
    config = Darcy2DConfig(16, 8, noise_index=2)
    pair = darcy2d_pair(config)
    assert np.isclose(config.noise_variance, 1e-3)
    assert pair.n_parameters == 64 and pair.n_data == 25
    assert pair.coarse.solves == 26

    u = 0.3 * two_bump_field(8)
    offset, jacobian = pair.approximate_linearization
    assert np.allclose(pair.approximate(u), offset + np.dot(jacobian, u))
    assert np.allclose(pair.approximate(np.zeros(64)), pair.baseline)

    outputs = pair.accurate(np.vstack([u, np.zeros(64)]))
    assert outputs.shape == (2, 25)
    assert pair.accurate_evaluations == 2
    assert pair.fine.solves == 2


def test_configuration_errors():
    with pytest.raises(ValueError):
        Darcy2DConfig(64, 48)
    with pytest.raises(ValueError):
        Darcy2DConfig(32, 64)
    with pytest.raises(ValueError):
        Darcy2DConfig(noise_index=4)
