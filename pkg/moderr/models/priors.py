# coding: utf-8

""" Gaussian priors on one- and two-dimensional grids. """

from __future__ import division, print_function

__all__ = ["brownian_prior", "graph_laplacian", "whittle_matern_prior"]

import logging

import numpy as np
from scipy import linalg, sparse
from scipy.sparse import linalg as splinalg

from ..gaussian import GaussianMeasure, DENSE_LIMIT
from ..utils import symmetrize

logger = logging.getLogger("moderr")


def brownian_precision(level):
    """
    Return the sparse precision matrix of the discrete Brownian-motion prior
    on the 2**level - 1 interior nodes x_i = i h of (0, 1).

    The second-difference matrix has a pinned left end (u(0) = 0) and a
    one-sided zero-slope row [-1, 1] at the right end, and is scaled by 1/h.
    """

    level = int(level)
    if 2 > level:
        raise ValueError("Brownian prior requires level >= 2")

    m = 2**level - 1
    h = 2.0**-level
    diagonal = 2 * np.ones(m)
    diagonal[-1] = 1
    off = -np.ones(m - 1)
    return sparse.diags([off, diagonal, off], [-1, 0, 1], format="csc") / h


def brownian_prior(level):
    """
    Return the zero-mean Brownian-motion prior on the level grid, with
    Var(u(x)) = x and Cov(u(s), u(t)) = min(s, t) at the nodes.

    :param level:
        The grid has 2**level - 1 interior nodes.

    :type level:
        int

    :rtype:
        :class:`moderr.gaussian.GaussianMeasure`
    """

    precision = brownian_precision(level)
    m = precision.shape[0]
    covariance = splinalg.splu(precision).solve(np.eye(m))
    return GaussianMeasure(np.zeros(m), symmetrize(covariance), validate=False)


def _path_laplacian(n):
    diagonal = -2 * np.ones(n)
    diagonal[0] = diagonal[-1] = -1
    off = np.ones(n - 1)
    return sparse.diags([off, diagonal, off], [-1, 0, 1], format="csr")


def graph_laplacian(n, h=None):
    """
    The 5-point graph Laplacian of an n x n grid with free (zero-flux) edges,
    scaled by 1/h**2 (h defaults to 1/n). Unknowns are ordered C-style, and
    the spectrum is non-positive.
    """

    n = int(n)
    if h is None:
        h = 1.0 / n
    path = _path_laplacian(n)
    identity = sparse.identity(n, format="csr")
    return ((sparse.kron(path, identity) + sparse.kron(identity, path)) \
        / h**2).tocsc()


def whittle_matern_prior(lam, zeta, laplacian, dense_limit=DENSE_LIMIT):
    """
    Return the zero-mean prior defined by the whitening relation

        (zeta / lam) (I - lam**2 L_g) u ~ N(0, I)

    with covariance C_0 = (lam / zeta)**2 (I - lam**2 L_g)**(-2).

    :param lam:
        The correlation length.

    :type lam:
        float

    :param zeta:
        The amplitude scaling.

    :type zeta:
        float

    :param laplacian:
        A symmetric graph Laplacian with non-positive spectrum.

    :type laplacian:
        :class:`scipy.sparse.spmatrix` or :class:`numpy.ndarray`

    :param dense_limit: [optional]
        The covariance is assembled densely only up to this dimension.
        Beyond it the measure is kept in operator form.

    :rtype:
        :class:`moderr.gaussian.GaussianMeasure`
    """

    if not lam > 0 or not zeta > 0:
        raise ValueError("correlation length and amplitude must be positive")

    laplacian = sparse.csc_matrix(laplacian, dtype=float)
    d = laplacian.shape[0]
    if laplacian.shape != (d, d):
        raise ValueError("Laplacian must be square")
    if abs(laplacian - laplacian.T).max() > 1e-12 * max(abs(laplacian).max(), 1):
        raise ValueError("Laplacian must be symmetric")

    whitening = (sparse.identity(d, format="csc") - lam**2 * laplacian).tocsc()

    # Gershgorin bound first, dense eigenvalues only if that is inconclusive.
    diagonal = whitening.diagonal()
    radius = np.asarray(abs(whitening).sum(axis=1)).flatten() - np.abs(diagonal)
    if np.any(diagonal - radius <= 0):
        smallest = linalg.eigvalsh(whitening.toarray())[0] if d <= dense_limit \
            else splinalg.eigsh(whitening, k=1, which="SA",
                return_eigenvectors=False)[0]
        if smallest <= 0:
            raise ValueError("whitening operator I - lam^2 L_g is not positive"
                " definite (smallest eigenvalue {:.3e})".format(smallest))

    scale = lam / zeta
    factor = splinalg.splu(whitening)

    def solve(x):
        x = np.asarray(x, dtype=float)
        return factor.solve(np.ascontiguousarray(x))

    def sqrt_operator(white):
        return scale * solve(np.atleast_2d(white).T).T

    def covariance_operator(x):
        return scale**2 * solve(solve(x))

    covariance = None
    if d <= dense_limit:
        inverse = solve(np.eye(d))
        covariance = symmetrize(scale**2 * np.dot(inverse, inverse))

    logger.debug("Whittle-Matern prior: d = {0}, lambda = {1}, zeta = {2}, "
        "dense = {3}".format(d, lam, zeta, covariance is not None))

    return GaussianMeasure(np.zeros(d), covariance, sqrt_operator=sqrt_operator,
        covariance_operator=covariance_operator, validate=False)
