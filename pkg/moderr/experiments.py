# coding: utf-8

""" The desk-scale experiments run by the command line interface. """

from __future__ import division, print_function

__all__ = ["Report", "run_source1d", "run_darcy", "run_rates",
    "run_toy_particle", "EXPERIMENTS"]

import logging
import os
import platform
import warnings
from time import time

import numpy as np
import scipy
import astropy
from astropy.table import Table

from . import io, __version__
from .errormodels import ErrorModelKind, relative_error
from .gaussian import (GaussianMeasure, LinearModelPair, InsufficientDecayError,
    RateFitWarning, estimate_rate, run_linear_iteration, contraction_bound,
    posterior_update, precision_iterate, loewner_gap)
from .models import (Poisson1DConfig, poisson1d_pair, brownian_prior,
    Darcy2DConfig, DarcySolver, darcy2d_pair, graph_laplacian,
    whittle_matern_prior, two_bump_field, truth_and_data,
    LinearForwardModelPair)
from .particles import (BoundedNoiseDensity, RejectionInnerSampler,
    sample_prior, model_error_sample, resample_draw_update, importance_update,
    empirical_operator_distance, grid_reference)
from .utils import RngSpec

logger = logging.getLogger("moderr")


class Report(object):
    """ Tables, acceptance checks and metadata of one experiment run. """

    def __init__(self, experiment):
        self.experiment = experiment
        self.tables = {}
        self.checks = []
        self.metadata = {}
        return None


    def check(self, name, passed, detail=""):
        passed = bool(passed)
        self.checks.append((name, passed, detail))
        (logger.info if passed else logger.warning)("Check {0}: {1} {2}".format(
            name, "passed" if passed else "FAILED", detail).strip())
        return passed


    @property
    def passed(self):
        return all(passed for name, passed, detail in self.checks)


    def write(self, path):
        io.ensure_directory(path)
        for name, table in self.tables.items():
            io.write_table(table, os.path.join(path, "{}.csv".format(name)))

        if self.checks:
            names, passed, details = zip(*self.checks)
            io.write_table(Table([list(names), [int(p) for p in passed],
                list(details)], names=("check", "passed", "detail")),
                os.path.join(path, "checks.csv"))

        manifest = {
            "experiment": self.experiment,
            "moderr_version": __version__,
            "numpy_version": np.__version__,
            "scipy_version": scipy.__version__,
            "astropy_version": astropy.__version__,
            "python_version": platform.python_version(),
            "stream_policy": RngSpec.stream_policy,
            "checks_passed": int(self.passed)
        }
        manifest.update(self.metadata)
        io.write_manifest(os.path.join(path, "manifest.txt"), manifest)
        return None


def _plateau_floor(errors, steps):
    """
    A floor below which errors are rounding noise: a hundred times the step
    size at the end of the trace, and never below ten machine epsilons of
    the first error.
    """
    tail = np.array(steps[-5:], dtype=float)
    tail = tail[np.isfinite(tail)]
    noise = np.median(tail) if tail.size else 0.0
    return max(100 * noise, 10 * np.finfo(float).eps * errors[0])


def _fit_rate(errors, steps, label):
    """ Fit a rate to errors of iterates 1 ... L, or return nans. """
    errors = np.array(errors[1:], dtype=float)
    try:
        return estimate_rate(errors, _plateau_floor(errors, steps[1:]),
            full_output=True)
    except InsufficientDecayError as e:
        message = "Rate of {0} could not be fitted: {1}".format(label, e)
        logger.warning(message)
        warnings.warn(message, RateFitWarning)
        return (np.nan, np.nan, np.nan, 0)


def run_source1d(config, path, threads=1):
    """
    Conventional and iterative error models for the Poisson source problem
    at every configured coarse level.
    """

    t_init = time()
    report = Report("source1d")
    model_config = config["model"]
    inference = config["inference"]
    rng = RngSpec(config["settings"]["seed"])

    fine_level = model_config.get("fine_level", 10)
    n_obs = model_config.get("n_obs", 15)
    obs_points = np.arange(1, n_obs + 1) / (n_obs + 1.0)
    variance = config["noise"]["variance"]
    gamma = variance * np.eye(n_obs)

    # The truth lives on the fine grid and the data come from the fine solver.
    reference = poisson1d_pair(Poisson1DConfig(min(9, fine_level - 1),
        fine_level, parameter_level=fine_level, obs_points=obs_points,
        noise_var=variance))
    truth, b = truth_and_data(reference, brownian_prior(fine_level), gamma,
        rng)
    report.tables["data"] = Table([obs_points, b], names=("q", "b"))

    rows_1, rows_2 = [], []
    for level in model_config["coarse_levels"]:
        pair = poisson1d_pair(Poisson1DConfig(level, fine_level,
            parameter_level=model_config.get("parameter_level", None),
            obs_points=obs_points, noise_var=variance))
        prior = brownian_prior(pair.config.parameter_level)
        model = pair.linear_model(prior, gamma)

        conventional = ErrorModelKind("conventional").run(model, prior, gamma,
            b)
        iterative = ErrorModelKind.from_config("iterative", inference,
            exact=True).run(model, prior, gamma, b,
                tol=inference.get("tolerance", 1e-10))
        exact = iterative.exact_posterior

        mean_err_conv = np.linalg.norm(conventional.estimate - exact.mean)
        cov_err_conv = np.linalg.norm(
            conventional.posterior.covariance - exact.covariance, "fro")
        rows_1.append((level, iterative.posterior_mean_errors[-1],
            mean_err_conv, iterative.posterior_cov_errors[-1], cov_err_conv))

        trace = iterative.trace
        slope_mean, _, r2_mean, n_mean = _fit_rate(trace.mean_errors,
            trace.mean_steps, "mean errors at level {}".format(level))
        slope_cov, _, r2_cov, n_cov = _fit_rate(trace.cov_errors,
            trace.cov_steps, "covariance errors at level {}".format(level))
        rows_2.append((level, slope_mean, slope_cov, pair.operator_gap,
            slope_cov / slope_mean, r2_mean, n_mean, n_cov))

        iterative.matrices.update({
            "a_star": pair.a_star,
            "a_approx": pair.a,
            "prior_covariance": prior.covariance
        })
        iterative.write(os.path.join(path, "n{}".format(level)))
        logger.info("Level {0}: iterative mean error {1:.3e}, conventional "
            "{2:.3e}, slopes {3:.3f} / {4:.3f}".format(level, rows_1[-1][1],
                mean_err_conv, slope_mean, slope_cov))

    table1 = Table(rows=rows_1, names=("n", "mean_err_iter", "mean_err_conv",
        "cov_err_iter", "cov_err_conv"))
    table2 = Table(rows=rows_2, names=("n", "slope_mean", "slope_cov",
        "opnorm_gap", "slope_ratio", "r2_mean", "points_mean", "points_cov"))
    report.tables.update({"table1": table1, "table2": table2})

    for row in table2:
        report.check("slope_ratio_n{}".format(row["n"]),
            2.2 >= row["slope_ratio"] >= 1.8,
            "ratio {:.3f}".format(row["slope_ratio"]))
        report.check("mean_rate_linear_n{}".format(row["n"]),
            row["r2_mean"] >= 0.99, "R^2 {:.5f}".format(row["r2_mean"]))

    for row in table1:
        report.check("iterative_mean_beats_conventional_n{}".format(row["n"]),
            row["mean_err_conv"] > row["mean_err_iter"],
            "{0:.3e} < {1:.3e}".format(row["mean_err_iter"], row["mean_err_conv"]))
        report.check("conventional_covariance_closer_n{}".format(row["n"]),
            row["cov_err_iter"] > row["cov_err_conv"],
            "{0:.3e} > {1:.3e}".format(row["cov_err_iter"], row["cov_err_conv"]))

    if len(table2) > 1:
        report.check("mean_rate_faster_with_level",
            np.all(np.diff(table2["slope_mean"]) < 0),
            " ".join("{:.3f}".format(s) for s in table2["slope_mean"]))
        report.check("operator_gap_decreasing",
            np.all(np.diff(table2["opnorm_gap"]) < 0),
            " ".join("{:.4f}".format(g) for g in table2["opnorm_gap"]))

    report.metadata.update({
        "master_seed": rng.master_seed,
        "accurate_evaluations": reference.accurate_evaluations,
        "wall_time": time() - t_init
    })
    report.write(path)
    return report


def darcy_setup(config):
    """ Return the Darcy configuration, pair, prior, truth and noise covariance. """

    model = config["model"]
    prior_config = config["prior"]
    darcy = Darcy2DConfig(model["fine_cells"], model["coarse_cells"],
        model.get("source_amplitude", 100.0), model.get("obs_width", 0.02),
        model.get("obs_grid", 5), model.get("linearization_value", 0.0),
        config["noise"]["index"])
    pair = darcy2d_pair(darcy)

    n = darcy.coarse_cells
    zeta = prior_config["zeta"]
    if prior_config.get("mesh_scaled_noise", True):
        zeta *= 1.0 / n
    prior = whittle_matern_prior(prior_config["lambda"], zeta,
        graph_laplacian(n))

    truth_config = model.get("truth", {})
    truth = two_bump_field(n,
        amplitudes=truth_config.get("amplitudes", (1.0, 0.8)),
        centres=truth_config.get("centres", ((0.3, 0.35), (0.7, 0.65))),
        width=truth_config.get("width", 0.1))
    return (darcy, pair, prior, truth, darcy.noise_covariance)


def _check_jacobian(report, config, rng, n=32, directions=10, h=1e-4):
    darcy = Darcy2DConfig(n, n, obs_width=config["model"].get("obs_width", 0.02),
        obs_grid=config["model"].get("obs_grid", 5))
    solver = DarcySolver(n, darcy.source_amplitude, darcy.obs_points,
        darcy.obs_width)
    u0 = 0.5 * two_bump_field(n)
    baseline, jacobian = solver.linearize(u0)
    report.check("linearization_solves", solver.solves == darcy.obs_grid**2 + 1,
        "{} solves".format(solver.solves))

    generator = rng.generator("jacobian_check")
    worst = 0.0
    for v in generator.standard_normal((directions, n**2)):
        forward = solver.observe(solver.solve(u0 + h * v))
        backward = solver.observe(solver.solve(u0 - h * v))
        finite_difference = (forward - backward) / (2 * h)
        adjoint = np.dot(jacobian, v)
        worst = max(worst, np.linalg.norm(adjoint - finite_difference) \
            / np.linalg.norm(finite_difference))
    report.check("adjoint_jacobian", 1e-5 > worst,
        "worst relative error {:.2e}".format(worst))
    return worst


def run_darcy(config, path, threads=1):
    """
    Conventional, enhanced and particle iterative error models for the Darcy
    permeability problem.
    """

    t_init = time()
    report = Report("darcy")
    inference = config["inference"]
    rng = RngSpec(config["settings"]["seed"])

    darcy, pair, prior, truth, gamma = darcy_setup(config)
    truth, b = truth_and_data(pair, prior, gamma, rng, truth=truth)
    n = darcy.coarse_cells

    io.ensure_directory(path)
    io.write_matrix_csv(os.path.join(path, "truth_grid.csv"), truth.reshape(n, n))

    results = {}
    for tag in inference.get("error_models", ErrorModelKind.tags):
        kind = ErrorModelKind.from_config(tag, inference)
        if tag == "iterative":
            results[tag] = kind.run(pair, prior, gamma, b,
                rng=rng.child("iterative"), truth=truth, threads=threads,
                kl=inference.get("kl", True),
                component_weights=inference.get("component_weights",
                    "evidence"))
        else:
            results[tag] = kind.run(pair, prior, gamma, b, rng=rng,
                truth=truth, threads=threads)

    rows = []
    for method in ("conventional", "enhanced", "iterative"):
        if method not in results:
            continue
        result = results[method]
        result.matrices["estimate_grid"] = result.estimate.reshape(n, n)
        result.write(os.path.join(path, method))
        rows.append((method, result.final_truth_error,
            relative_error(result.estimate, truth)))
    report.tables["summary"] = Table(rows=rows,
        names=("method", "truth_err", "rel_err"))

    if "iterative" in results:
        iterative = results["iterative"]
        errors = np.array(iterative.truth_error)
        final = errors[-1]
        for method in ("conventional", "enhanced"):
            if method in results:
                other = results[method].final_truth_error
                report.check("iterative_beats_{}".format(method),
                    other > final, "{0:.4g} < {1:.4g}".format(final, other))

        if len(errors) > 6:
            spread = np.abs(errors[5:] - final).max()
            report.check("truth_error_stabilized", 0.05 * final > spread,
                "max |e_l - e_L| for l >= 5 is {:.3g}".format(spread))

        trace = iterative.trace
        if len(trace.delta_kl) > 3:
            # Increases after the second iteration must lie within two
            # Monte Carlo standard errors.
            deltas = np.array(trace.delta_kl)
            kl_errors = np.array(trace.delta_kl_errors)
            increases = np.diff(deltas[2:])
            tolerance = 2 * np.hypot(kl_errors[2:-1], kl_errors[3:])
            report.check("delta_kl_non_increasing",
                np.all(increases <= tolerance),
                " ".join("{:.3g}".format(d) for d in deltas))

    if "enhanced" in results:
        gap = results["enhanced"].metadata["variance_inflation_gap"]
        report.check("variance_inflation", gap >= -1e-10,
            "smallest eigenvalue of (gamma + sigma) - gamma is {:.3e}".format(gap))

    _check_jacobian(report, config, rng)

    report.metadata.update({
        "master_seed": rng.master_seed,
        "noise_index": darcy.noise_index,
        "accurate_evaluations": pair.accurate_evaluations,
        "coarse_linearization_solves": pair.coarse.solves,
        "wall_time": time() - t_init
    })
    report.write(path)
    return report


def rates_model(config, rng):
    """ The synthetic problem with aligned singular vectors for the rate sweep. """

    singular_values = np.array(config["model"]["singular_values"], dtype=float)
    error_values = np.array(config["model"]["model_error_singular_values"],
        dtype=float)
    d = singular_values.size
    if error_values.size != d:
        raise ValueError("operator and model error singular values differ in "
            "number")

    generator = rng.generator("rates")
    q, _ = np.linalg.qr(generator.standard_normal((d, d)))
    v, _ = np.linalg.qr(generator.standard_normal((d, d)))
    a = np.dot(q * singular_values, v.T)
    m = np.dot(q * error_values, v.T)
    gamma = config["noise"]["variance"] * np.eye(d)
    prior = GaussianMeasure(np.zeros(d), np.eye(d))
    return LinearModelPair(a + m, a, gamma, prior)


def _check_precision_monotone(report, config, rng, d=4, J=3):
    """
    Iterate the precision map on random small problems and record the
    smallest normalized Loewner gaps of B_{l+1} - B_l, C_l - C_{l+1} and
    C_{l+1} - C_post (the conventional posterior covariance).
    """

    inference = config["inference"]
    iterations = inference.get("monotone_iterations", 50)
    rows = []
    for instance in range(inference.get("monotone_instances", 100)):
        generator = rng.generator("monotone", instance)
        x = generator.standard_normal((d, d))
        prior = GaussianMeasure(np.zeros(d), np.dot(x, x.T) / d + 0.5 * np.eye(d))
        a = generator.standard_normal((J, d))
        m = 0.5 * generator.standard_normal((J, d))
        model = LinearModelPair(a + m, a, 0.1 * np.eye(J), prior)
        conventional = posterior_update(prior, a, model.gamma, 0,
            np.zeros(J)).covariance

        precision, covariance = model.prior_precision, prior.covariance
        gaps = [np.inf, np.inf, np.inf]
        for l in range(iterations):
            next_precision = precision_iterate(precision, model)
            next_covariance = np.linalg.inv(next_precision)
            scale_b = np.linalg.norm(precision, 2)
            scale_c = np.linalg.norm(covariance, 2)
            gaps = [
                min(gaps[0], loewner_gap(next_precision, precision) / scale_b),
                min(gaps[1], loewner_gap(covariance, next_covariance) / scale_c),
                min(gaps[2], loewner_gap(next_covariance, conventional) / scale_c)
            ]
            precision, covariance = next_precision, next_covariance
        rows.append([instance] + gaps)

    table = Table(rows=rows, names=("instance", "precision_gap",
        "covariance_gap", "posterior_gap"))
    report.tables["monotone"] = table
    worst = min(table[name].min() for name in table.colnames[1:])
    report.check("monotone_precision_iteration", worst >= -1e-10,
        "smallest normalized gap {:.3e}".format(worst))
    return worst


def run_rates(config, path, threads=1):
    """ Fitted convergence rates against the contraction bound over a delta sweep. """

    t_init = time()
    report = Report("rates")
    inference = config["inference"]
    rng = RngSpec(config["settings"]["seed"])

    model = rates_model(config, rng)
    truth, b = truth_and_data(
        LinearForwardModelPair(model.a_star, model.a), model.prior,
        model.gamma, rng)
    beta_hat = contraction_bound(model)

    rows = []
    for delta in inference["deltas"]:
        trace = run_linear_iteration(model.with_delta(delta), b,
            inference["iterations"], tol=inference.get("tolerance", 1e-12))
        trace.set_errors(*trace.limit_errors())

        if delta > 0:
            mean_rate = _fit_rate(trace.mean_errors, trace.mean_steps,
                "mean errors at delta = {}".format(delta))[0]
            cov_rate = _fit_rate(trace.cov_errors, trace.cov_steps,
                "covariance errors at delta = {}".format(delta))[0]
            predicted = np.log(beta_hat * delta)
        else:
            mean_rate = cov_rate = predicted = -np.inf

        rows.append((delta, beta_hat, mean_rate, cov_rate, predicted,
            2 * predicted, -1 if trace.converged_at is None \
                else trace.converged_at))
        trace.write(os.path.join(io.ensure_directory(path),
            "trace_delta{:.3f}.csv".format(delta)))

    table = Table(rows=rows, names=("delta", "beta_hat", "fitted_mean_rate",
        "fitted_cov_rate", "predicted_mean_rate", "predicted_cov_rate",
        "converged_at"))
    report.tables["rates"] = table

    for row in table:
        delta, contraction = row["delta"], row["beta_hat"] * row["delta"]
        if delta == 0:
            report.check("immediate_convergence_delta0",
                row["converged_at"] == 1,
                "converged at {}".format(row["converged_at"]))
            continue
        if not np.isfinite(row["fitted_mean_rate"]) \
        or not np.isfinite(row["fitted_cov_rate"]):
            continue
        ratio = row["fitted_cov_rate"] / row["fitted_mean_rate"]
        report.check("rate_ratio_delta{:.2f}".format(delta),
            2.2 >= ratio >= 1.8, "ratio {:.3f}".format(ratio))
        if 0.5 > contraction > 0:
            report.check("mean_rate_bound_delta{:.2f}".format(delta),
                np.log(contraction) + 0.1 >= row["fitted_mean_rate"],
                "{0:.3f} <= {1:.3f}".format(row["fitted_mean_rate"],
                    np.log(contraction) + 0.1))
            report.check("cov_rate_bound_delta{:.2f}".format(delta),
                2 * np.log(contraction) + 0.1 >= row["fitted_cov_rate"],
                "{0:.3f} <= {1:.3f}".format(row["fitted_cov_rate"],
                    2 * np.log(contraction) + 0.1))

    _check_precision_monotone(report, config, rng)

    report.metadata.update({
        "master_seed": rng.master_seed,
        "beta_hat": beta_hat,
        "wall_time": time() - t_init
    })
    report.write(path)
    return report


def toy_setup(config, kappa=None):
    """ The one-dimensional linear toy with bounded noise. """

    model = config["model"]
    noise_config = config["noise"]
    pair = LinearForwardModelPair([[model["accurate_slope"]]],
        [[model["approximate_slope"]]])
    prior = GaussianMeasure([0.0], [[1.0]])
    noise = BoundedNoiseDensity([[noise_config["variance"]]],
        kappa=noise_config["kappa"] if kappa is None else kappa,
        mode=noise_config.get("mode", "clamped"))
    b = np.array([model["data"]], dtype=float)
    return (pair, prior, noise, b)


def particle_generations(kind, pair, prior, noise, b, n_particles, generations,
    rng):
    """
    Run the exact-sampling ("exact") or importance sampling ("importance")
    particle scheme and return every generation.
    """

    ensemble = sample_prior(prior, n_particles, rng)
    ensembles = [ensemble]
    for generation in range(generations):
        me = model_error_sample(ensemble, pair)
        if kind == "exact":
            sampler = RejectionInnerSampler(prior, noise, pair.approximate, b)
            ensemble = resample_draw_update(ensemble, me, prior, noise, pair, b,
                rng, inner_sampler=sampler)
        elif kind == "importance":
            ensemble = importance_update(ensemble, pair, noise, prior, b, rng,
                me=me)
        else:
            raise ValueError("unknown particle scheme '{}'".format(kind))
        ensembles.append(ensemble)
    return ensembles


def _distances(kind, pair, prior, noise, b, n_particles, generations,
    replicates, references, rng):
    runs = [particle_generations(kind, pair, prior, noise, b, n_particles,
        generations, rng.child(kind, n_particles).replicate(r)) \
        for r in range(replicates)]
    return [empirical_operator_distance(references[g], [run[g] for run in runs])
        for g in range(generations + 1)]


def _log_log_slope(counts, distances):
    return np.polyfit(np.log(counts), np.log(distances), 1)[0]


def _check_particle_consistency(report, config, rng):
    """
    Run the mixture update on the toy with exact Gaussian noise and compare
    the ensemble means of every generation with the Gaussian iterates.
    """

    model = config["model"]
    inference = config["inference"]
    n_particles = inference.get("consistency_particles", 5000)
    replicates = inference.get("consistency_replicates", 100)
    generations = inference.get("consistency_generations", 5)

    pair = LinearForwardModelPair([[model["accurate_slope"]]],
        [[model["approximate_slope"]]])
    prior = GaussianMeasure([0.0], [[1.0]])
    gamma = np.array([[config["noise"]["variance"]]])
    b = np.array([model["data"]], dtype=float)
    exact = run_linear_iteration(pair.linear_model(prior, gamma), b,
        generations)

    kind = ErrorModelKind("iterative", max_iters=generations,
        n_particles=n_particles)
    rows = []
    for replicate in range(replicates):
        result = kind.run(pair, prior, gamma, b,
            rng=rng.child("consistency").replicate(replicate), kl=False)
        deviations = [np.abs(result.trace.means[g] - exact.means[g]).max() \
            / np.sqrt(np.diag(exact.covariances[g]).max() / n_particles)
            for g in range(1, generations + 1)]
        rows.append((replicate, max(deviations)))

    table = Table(rows=rows, names=("replicate", "max_scaled_deviation"))
    report.tables["consistency"] = table
    fraction = np.mean(table["max_scaled_deviation"] < 4)
    report.check("mixture_means_track_gaussian_iterates", fraction >= 0.95,
        "{0:.0f}% of {1} replicates within four standard errors".format(
            100 * fraction, replicates))
    return fraction


def run_toy_particle(config, path, threads=1):
    """
    Empirical distances of replicated particle approximations from the exact
    measure recursion, as a function of the ensemble size.
    """

    t_init = time()
    report = Report("toy-particle")
    inference = config["inference"]
    rng = RngSpec(config["settings"]["seed"])
    generations = inference["generations"]
    replicates = inference["replicates"]
    counts = list(inference["particle_counts"])

    def reference_for(noise):
        slope = pair.a[0, 0]
        accurate_slope = pair.a_star[0, 0]
        return grid_reference(prior, noise, lambda u: slope * u,
            lambda u: accurate_slope * u, b, generations,
            n_points=inference.get("grid_points", 2000))

    pair, prior, noise, b = toy_setup(config)
    references = reference_for(noise)

    rows, slopes, shrinks = [], [], []
    for kind in ("exact", "importance"):
        by_count = []
        for n_particles in counts:
            distances = _distances(kind, pair, prior, noise, b, n_particles,
                generations, replicates, references, rng)
            by_count.append(distances)
            for generation, distance in enumerate(distances):
                rows.append((kind, n_particles, generation, distance))
            logger.info("{0} sampling with N = {1}: distance {2:.4g} at "
                "generation {3}".format(kind, n_particles, distances[-1],
                    generations))

        for generation in range(generations + 1):
            slope = _log_log_slope(counts,
                [d[generation] for d in by_count])
            slopes.append((kind, generation, slope))

        for i in range(len(counts) - 1):
            shrinks.append((kind, counts[i], counts[i + 1],
                by_count[i][-1] / by_count[i + 1][-1]))

        final = [s for k, g, s in slopes if k == kind and g == generations][0]
        report.check("sqrt_n_law_{}".format(kind), -0.4 >= final >= -0.6,
            "slope {:.3f}".format(final))

    report.tables["sqrtn"] = Table(rows=rows,
        names=("kind", "n_particles", "generation", "distance"))
    report.tables["slopes"] = Table(rows=slopes,
        names=("kind", "generation", "slope"))
    report.tables["shrink"] = Table(rows=shrinks,
        names=("kind", "n_particles", "next_n_particles", "distance_ratio"))

    # A flat likelihood leaves every generation at the prior.
    pair, prior, flat, b = toy_setup(config, kappa=1.0)
    flat_references = reference_for(flat)
    control = []
    for kind in ("exact", "importance"):
        distances = _distances(kind, pair, prior, flat, b, counts[0],
            generations, replicates, flat_references, rng.child("flat"))
        for generation, distance in enumerate(distances):
            control.append((kind, generation, distance))
        ratios = np.array(distances) / distances[0]
        report.check("flat_likelihood_{}".format(kind),
            np.all(ratios <= 2) and np.all(ratios >= 0.5),
            " ".join("{:.3g}".format(d) for d in distances))
    report.tables["flat_control"] = Table(rows=control,
        names=("kind", "generation", "distance"))

    _check_particle_consistency(report, config, rng)

    report.metadata.update({
        "master_seed": rng.master_seed,
        "replicates": replicates,
        "wall_time": time() - t_init
    })
    report.write(path)
    return report


EXPERIMENTS = {
    "source1d": run_source1d,
    "darcy": run_darcy,
    "rates": run_rates,
    "toy-particle": run_toy_particle
}
