# coding: utf-8

""" Steady Darcy flow -div(exp(u) grad p) = g on the unit square, p = 0 on the boundary. """

from __future__ import division, print_function

__all__ = ["Darcy2DConfig", "DarcySolver", "Darcy2DPair", "darcy2d_pair",
    "darcy2d_solve", "darcy2d_observe", "darcy2d_linearize", "cell_centres",
    "prolongation", "two_bump_field"]

import logging

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from .base import ForwardModelPair, SolverBreakdownError

logger = logging.getLogger("moderr")


def cell_centres(n):
    return (np.arange(n) + 0.5) / n


def _prolongation_1d(n_from, n_to):
    # Linear interpolation between cell centres, constant beyond the first
    # and last centres.
    s = cell_centres(n_to) * n_from - 0.5
    s = np.clip(s, 0, n_from - 1)
    i = np.minimum(np.floor(s).astype(int), n_from - 2)
    t = s - i
    rows = np.repeat(np.arange(n_to), 2)
    cols = np.vstack([i, i + 1]).T.flatten()
    values = np.vstack([1 - t, t]).T.flatten()
    return sparse.csr_matrix((values, (rows, cols)), shape=(n_to, n_from))


def prolongation(n_from, n_to):
    """
    Bilinear interpolation of cell-centred fields from an n_from x n_from grid
    to an n_to x n_to grid (C-ordered unknowns).
    """
    p1 = _prolongation_1d(n_from, n_to)
    return sparse.kron(p1, p1, format="csr")


def two_bump_field(n, amplitudes=(1.0, 0.8), centres=((0.3, 0.35), (0.7, 0.65)),
    width=0.1):
    """ A sum of isotropic unnormalized Gaussian bumps at the cell centres. """

    x1, x2 = np.meshgrid(cell_centres(n), cell_centres(n), indexing="ij")
    field = np.zeros((n, n))
    for amplitude, (c1, c2) in zip(amplitudes, centres):
        field += amplitude * np.exp(-((x1 - c1)**2 + (x2 - c2)**2) \
            / (2 * width**2))
    return field.flatten()


class Darcy2DConfig(object):

    def __init__(self, fine_cells=128, coarse_cells=64, source_amplitude=100.0,
        obs_width=0.02, obs_grid=5, linearization_value=0.0, noise_index=2):

        self.fine_cells = int(fine_cells)
        self.coarse_cells = int(coarse_cells)
        self.source_amplitude = float(source_amplitude)
        self.obs_width = float(obs_width)
        self.obs_grid = int(obs_grid)
        self.linearization_value = float(linearization_value)
        self.noise_index = int(noise_index)

        if 2 > self.coarse_cells or self.coarse_cells > self.fine_cells:
            raise ValueError("coarse grid must have at least 2 cells per side "
                "and no more than the fine grid")
        if self.fine_cells % self.coarse_cells:
            raise ValueError("coarse grid ({0}) must divide the fine grid ({1})"\
                .format(self.coarse_cells, self.fine_cells))
        if not self.obs_width > 0:
            raise ValueError("observation width must be positive")
        if 1 > self.obs_grid:
            raise ValueError("observation grid must have at least one point")
        if self.noise_index not in (1, 2, 3):
            raise ValueError("noise index must be 1, 2 or 3")
        return None


    @property
    def obs_points(self):
        q = np.arange(1, self.obs_grid + 1) / (self.obs_grid + 1.0)
        q1, q2 = np.meshgrid(q, q, indexing="ij")
        return np.vstack([q1.flatten(), q2.flatten()]).T

    @property
    def noise_variance(self):
        return 10.0**(-self.noise_index - 1)

    @property
    def noise_covariance(self):
        return self.noise_variance * np.eye(self.obs_grid**2)

    @property
    def n_parameters(self):
        return self.coarse_cells**2


class DarcySolver(object):
    """
    Cell-centred finite volume solver on an n x n grid with harmonic face
    transmissibilities. Every right-hand side solved is counted.
    """

    def __init__(self, n, source_amplitude=100.0, obs_points=None,
        obs_width=0.02):
        self.n = int(n)
        self.h = 1.0 / self.n
        x1, x2 = np.meshgrid(cell_centres(self.n), cell_centres(self.n),
            indexing="ij")
        self.source = (source_amplitude * np.sin(np.pi * x1) \
            * np.sin(np.pi * x2)).flatten()
        self.weights = None if obs_points is None \
            else self.observation_weights(obs_points, obs_width)
        self.solves = 0

        index = np.arange(self.n**2).reshape(self.n, self.n)
        # Interior faces as (cell a, cell b) pairs along both axes.
        self._face_a = np.hstack([index[:-1, :].flatten(), index[:, :-1].flatten()])
        self._face_b = np.hstack([index[1:, :].flatten(), index[:, 1:].flatten()])
        # Number of Dirichlet faces of each cell.
        boundary = np.zeros((self.n, self.n))
        boundary[0, :] += 1
        boundary[-1, :] += 1
        boundary[:, 0] += 1
        boundary[:, -1] += 1
        self._boundary_faces = boundary.flatten()
        return None


    def observation_weights(self, points, width):
        """
        Midpoint quadrature weights of the mollified point evaluations
        (1 / (2 pi eps)) exp(-|x - q|^2 / (2 eps^2)), one row per point.
        """
        x1, x2 = np.meshgrid(cell_centres(self.n), cell_centres(self.n),
            indexing="ij")
        x = np.vstack([x1.flatten(), x2.flatten()]).T
        points = np.atleast_2d(points)
        distance = ((x[None, :, :] - points[:, None, :])**2).sum(axis=2)
        return np.exp(-distance / (2 * width**2)) * self.h**2 \
            / (2 * np.pi * width)


    def _permeability(self, u):
        u = np.asarray(u, dtype=float).flatten()
        if u.size != self.n**2:
            raise ValueError("log-permeability has {0} values but the grid has"
                " {1} cells".format(u.size, self.n**2))
        with np.errstate(over="ignore"):
            k = np.exp(u)
        if not np.all(np.isfinite(k)) or np.any(k <= 0):
            raise SolverBreakdownError("log-permeability gives zero or "
                "non-finite permeability")
        return k


    def assemble(self, u):
        """ Return the sparse operator and the face/boundary transmissibilities. """

        k = self._permeability(u)
        ka, kb = k[self._face_a], k[self._face_b]
        interior = 2 * ka * kb / (ka + kb) / self.h**2
        boundary = 2 * k * self._boundary_faces / self.h**2

        N = self.n**2
        diagonal = boundary.copy()
        np.add.at(diagonal, self._face_a, interior)
        np.add.at(diagonal, self._face_b, interior)
        matrix = sparse.coo_matrix((
            np.hstack([diagonal, -interior, -interior]),
            (np.hstack([np.arange(N), self._face_a, self._face_b]),
             np.hstack([np.arange(N), self._face_b, self._face_a]))),
            shape=(N, N)).tocsc()
        return (matrix, k, interior, boundary)


    def _factorize(self, matrix):
        try:
            return splinalg.splu(matrix)
        except RuntimeError as e:
            raise SolverBreakdownError("sparse factorization failed: {}"\
                .format(e))


    def solve(self, u):
        """ Return the pressure at the cell centres (C order). """
        matrix = self.assemble(u)[0]
        p = self._factorize(matrix).solve(self.source)
        self.solves += 1
        if not np.all(np.isfinite(p)):
            raise SolverBreakdownError("non-finite pressure")
        return p


    def observe(self, p):
        if self.weights is None:
            raise ValueError("no observation points were given to the solver")
        return np.dot(self.weights, p)


    def linearize(self, u0):
        """
        Return F(u0) and the Jacobian DF(u0) of the observed pressure with
        respect to the log-permeability, from one forward solve and one
        adjoint solve per observation.
        """

        if self.weights is None:
            raise ValueError("no observation points were given to the solver")

        matrix, k, interior, boundary = self.assemble(u0)
        factor = self._factorize(matrix)
        p = factor.solve(self.source)
        adjoint = factor.solve(np.ascontiguousarray(self.weights.T))
        self.solves += 1 + self.weights.shape[0]

        a, b = self._face_a, self._face_b
        ka, kb = k[a], k[b]
        dT_a = 2 * ka * kb**2 / (ka + kb)**2 / self.h**2
        dT_b = 2 * kb * ka**2 / (ka + kb)**2 / self.h**2

        # lambda^T (dK/du_c) p, face by face: shape (faces, J).
        flux = (adjoint[a] - adjoint[b]) * (p[a] - p[b])[:, None]
        N = self.n**2
        jacobian = np.zeros((N, self.weights.shape[0]))
        np.add.at(jacobian, a, flux * dT_a[:, None])
        np.add.at(jacobian, b, flux * dT_b[:, None])
        jacobian += adjoint * (boundary * p)[:, None]
        return (np.dot(self.weights, p), -jacobian.T)


def darcy2d_solve(u, n, source_amplitude=100.0):
    """
    Solve the Darcy problem for a log-permeability field.

    :param u:
        The log-permeability at the n x n cell centres (C order).

    :param n:
        Cells per side.

    :returns:
        The pressure at the cell centres.
    """
    return DarcySolver(n, source_amplitude).solve(u)


def darcy2d_observe(p, config):
    """
    Apply the 25 mollified point observations to a pressure field on any
    n x n cell-centred grid.

    :param p:
        The pressure field (C order).

    :param config:
        The Darcy configuration (observation points and width).

    :type config:
        :class:`Darcy2DConfig`
    """
    p = np.asarray(p, dtype=float).flatten()
    n = int(round(np.sqrt(p.size)))
    if n**2 != p.size:
        raise ValueError("pressure field is not square")
    return np.dot(DarcySolver(n).observation_weights(config.obs_points,
        config.obs_width), p)


def darcy2d_linearize(u0, config, solver=None):
    """
    Linearize the coarse-grid observed Darcy map at u0.

    :returns:
        A two-length tuple of F(u0) and DF(u0), exactly J + 1 solves counted on
        ``solver``.
    """

    if solver is None:
        solver = DarcySolver(config.coarse_cells, config.source_amplitude,
            config.obs_points, config.obs_width)
    return solver.linearize(u0)


class Darcy2DPair(ForwardModelPair):
    """
    The accurate map solves on the fine grid after bilinear prolongation of the
    coarse-cell log-permeability; the approximate map is the coarse-grid
    linearization about a constant field.
    """

    labels = ("fine nonlinear solve", "coarse linearization")

    def __init__(self, config):
        self.config = config
        self.fine = DarcySolver(config.fine_cells, config.source_amplitude,
            config.obs_points, config.obs_width)
        self.coarse = DarcySolver(config.coarse_cells, config.source_amplitude,
            config.obs_points, config.obs_width)
        self.prolongation = prolongation(config.coarse_cells, config.fine_cells)

        self.u0 = config.linearization_value * np.ones(config.n_parameters)
        self.baseline, self.jacobian = self.coarse.linearize(self.u0)

        super(Darcy2DPair, self).__init__(config.n_parameters,
            config.obs_grid**2,
            relative_cost=(config.fine_cells / config.coarse_cells)**2)
        logger.debug("Darcy pair: {0}x{0} fine, {1}x{1} coarse, {2} coarse "
            "solves for the linearization".format(config.fine_cells,
                config.coarse_cells, self.coarse.solves))
        return None


    def _accurate(self, u):
        return self.fine.observe(self.fine.solve(self.prolongation.dot(u)))

    def _approximate_many(self, u):
        return self.baseline + np.dot(u - self.u0, self.jacobian.T)

    @property
    def approximate_linearization(self):
        return (self.baseline - np.dot(self.jacobian, self.u0), self.jacobian)


def darcy2d_pair(config):
    """ Build the Darcy permeability problem pair for a configuration. """
    return Darcy2DPair(config)
