# coding: utf-8

""" The one-dimensional inverse source problem -p'' = u on (0, 1), p(0) = p(1) = 0. """

from __future__ import division, print_function

__all__ = ["Poisson1DConfig", "Poisson1DPair", "poisson1d_pair",
    "observation_operator", "laplacian_1d", "nodes"]

import logging

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from .base import LinearForwardModelPair

logger = logging.getLogger("moderr")


def nodes(level):
    """ Interior nodes i / 2**level, i = 1 ... 2**level - 1. """
    return np.arange(1, 2**int(level)) * 2.0**-int(level)


def laplacian_1d(level):
    """ The Dirichlet finite difference matrix (1/h**2) tridiag(-1, 2, -1). """
    m = 2**int(level) - 1
    h = 2.0**-int(level)
    off = -np.ones(m - 1)
    return sparse.diags([off, 2 * np.ones(m), off], [-1, 0, 1],
        format="csc") / h**2


def _interpolation(points, level, right="zero"):
    """
    Sparse linear interpolation from the interior nodes of a level grid to
    arbitrary points in [0, 1]. The left end value is zero. The right end is
    either zero (``right="zero"``) or continued constantly from the last node
    (``right="constant"``).
    """

    points = np.atleast_1d(points)
    m = 2**int(level) - 1
    h = 2.0**-int(level)

    rows, cols, values = [], [], []
    for row, x in enumerate(points):
        s = x / h
        i = int(np.floor(s))
        t = s - i
        if i >= m:
            if right == "constant":
                rows.append(row)
                cols.append(m - 1)
                values.append(1.0)
            elif i == m and t > 0:
                rows.append(row)
                cols.append(m - 1)
                values.append(1.0 - t)
            elif i == m:
                rows.append(row)
                cols.append(m - 1)
                values.append(1.0)
            continue

        if i >= 1 and (1 - t) > 0:
            rows.append(row)
            cols.append(i - 1)
            values.append(1.0 - t)
        if t > 0:
            rows.append(row)
            cols.append(i)
            values.append(t)

    return sparse.csr_matrix((values, (rows, cols)), shape=(points.size, m))


def observation_operator(solver_level, parameter_level, obs_points):
    """
    Assemble the dense map from a source on the parameter grid to point
    observations of the finite difference solution on the solver grid.

    The source is prolonged to the solver nodes by linear interpolation
    (zero at the left end, constant at the right end), the Dirichlet problem
    is solved, and the solution is interpolated linearly to the observation
    points.

    :returns:
        An array of shape (len(obs_points), 2**parameter_level - 1).
    """

    prolongation = _interpolation(nodes(solver_level), parameter_level,
        right="constant")
    observe = _interpolation(obs_points, solver_level, right="zero")

    # O K^{-1} P = ((K^{-1} O^T)^T P) with K symmetric.
    adjoint = splinalg.splu(laplacian_1d(solver_level)).solve(
        np.ascontiguousarray(observe.T.toarray()))
    return np.asarray(prolongation.T.dot(adjoint)).T


class Poisson1DConfig(object):

    def __init__(self, coarse_level, fine_level=10, parameter_level=None,
        obs_points=None, noise_var=1e-8):
        """
        :param coarse_level:
            The approximate solver uses 2**coarse_level - 1 interior nodes.

        :param fine_level: [optional]
            The accurate solver uses 2**fine_level - 1 interior nodes.

        :param parameter_level: [optional]
            The level of the grid the source lives on. Defaults to the coarse
            level.

        :param obs_points: [optional]
            Observation points, by default j/16 for j = 1 ... 15.

        :param noise_var: [optional]
            The noise variance; the noise covariance is noise_var * I.
        """

        self.coarse_level = int(coarse_level)
        self.fine_level = int(fine_level)
        self.parameter_level = self.coarse_level if parameter_level is None \
            else int(parameter_level)
        self.obs_points = np.arange(1, 16) / 16.0 if obs_points is None \
            else np.array(obs_points, dtype=float)
        self.noise_var = float(noise_var)

        if not (9 >= self.coarse_level >= 3):
            raise ValueError("coarse level must be between 3 and 9 (given {})"\
                .format(self.coarse_level))
        if self.coarse_level >= self.fine_level:
            raise ValueError("coarse level must be below the fine level")
        if not (self.fine_level >= self.parameter_level >= 2):
            raise ValueError("parameter level must be between 2 and the fine "
                "level")
        if np.any(self.obs_points <= 0) or np.any(self.obs_points >= 1):
            raise ValueError("observation points must be interior to (0, 1)")
        if 0 > self.noise_var:
            raise ValueError("noise variance must be non-negative")
        return None


    @property
    def noise_covariance(self):
        return self.noise_var * np.eye(self.obs_points.size)


class Poisson1DPair(LinearForwardModelPair):
    """ Fine- and coarse-grid source-to-observation maps. """

    labels = ("fine finite differences", "coarse finite differences")

    def __init__(self, config):
        self.config = config
        a_star = observation_operator(config.fine_level,
            config.parameter_level, config.obs_points)
        a = observation_operator(config.coarse_level, config.parameter_level,
            config.obs_points)
        super(Poisson1DPair, self).__init__(a_star, a,
            relative_cost=2.0**(config.fine_level - config.coarse_level))
        logger.debug("Poisson pair: levels {0}/{1}, parameter level {2}, "
            "|A_n - A*| = {3:.3e}".format(config.coarse_level,
                config.fine_level, config.parameter_level,
                self.operator_gap))
        return None


    @property
    def operator_gap(self):
        """ The spectral norm of A_n - A*. """
        return np.linalg.norm(self.model_error_operator, 2)


def poisson1d_pair(config):
    """
    Build the Poisson source problem pair for a configuration.

    :param config:
        The configuration.

    :type config:
        :class:`Poisson1DConfig`

    :rtype:
        :class:`Poisson1DPair`
    """
    return Poisson1DPair(config)
