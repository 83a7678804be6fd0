# coding: utf-8

""" Accurate and approximate forward model pairs. """

from __future__ import division, print_function

__all__ = ["ForwardModelPair", "LinearForwardModelPair", "SolverBreakdownError"]

import logging

import numpy as np

from ..utils import NumericalError

logger = logging.getLogger("moderr")


class SolverBreakdownError(NumericalError, RuntimeError):
    pass


class ForwardModelPair(object):
    """
    An expensive accurate forward map F and a cheap approximate map f that
    act on the same parameter vector and predict the same data vector. The
    model error M(u) = F(u) - f(u) is always computed from both evaluations.

    Sub-classes implement ``_accurate`` and ``_approximate`` for a single
    parameter vector, and may override ``_accurate_many`` and
    ``_approximate_many`` for batches.
    """

    labels = ("accurate", "approximate")
    relative_cost = 1.0

    def __init__(self, n_parameters, n_data, labels=None, relative_cost=None):

        n_parameters, n_data = int(n_parameters), int(n_data)
        if 1 > n_parameters or 1 > n_data:
            raise ValueError("parameter and data dimensions must be positive")

        self.n_parameters = n_parameters
        self.n_data = n_data
        if labels is not None:
            self.labels = tuple(labels)
        if relative_cost is not None:
            self.relative_cost = float(relative_cost)

        self.accurate_evaluations = 0
        self.approximate_evaluations = 0
        return None


    def __repr__(self):
        return "<{0}.{1} ({2} -> {3}, {4} accurate evaluations) at {5}>".format(
            self.__module__, type(self).__name__, self.n_parameters,
            self.n_data, self.accurate_evaluations, hex(id(self)))


    def _check_parameters(self, u):
        u = np.array(u, dtype=float)
        single = (u.ndim == 1)
        u = np.atleast_2d(u)
        if u.ndim != 2 or u.shape[1] != self.n_parameters:
            raise ValueError("parameter vectors must have length {0} (shape {1}"\
                " given)".format(self.n_parameters, u.shape))
        return (u, single)


    def _accurate(self, u):
        raise NotImplementedError("the accurate map should be implemented by "
            "the sub-classes")

    def _approximate(self, u):
        raise NotImplementedError("the approximate map should be implemented "
            "by the sub-classes")

    def _accurate_many(self, u):
        return np.array([self._accurate(row) for row in u])

    def _approximate_many(self, u):
        return np.array([self._approximate(row) for row in u])


    def accurate(self, u):
        """
        Evaluate the accurate map F.

        :param u:
            A parameter vector of length d, or an (n, d) array of them.

        :returns:
            The predicted data, of length J or shape (n, J).
        """

        u, single = self._check_parameters(u)
        values = self._accurate_many(u)
        self.accurate_evaluations += u.shape[0]
        return values[0] if single else values


    def approximate(self, u):
        """ Evaluate the approximate map f (vector or (n, d) array). """

        u, single = self._check_parameters(u)
        values = self._approximate_many(u)
        self.approximate_evaluations += u.shape[0]
        return values[0] if single else values


    def model_error(self, u):
        """ M(u) = F(u) - f(u). """
        return self.accurate(u) - self.approximate(u)


    def record_evaluations(self, accurate=0, approximate=0):
        """ Count evaluations performed on copies of this pair (e.g. workers). """
        self.accurate_evaluations += int(accurate)
        self.approximate_evaluations += int(approximate)
        return None


    @property
    def approximate_linearization(self):
        """
        Return (offset, jacobian) with f(u) = offset + jacobian u when the
        approximate map is affine.
        """
        raise TypeError("the approximate map of {} is not affine".format(
            type(self).__name__))


class LinearForwardModelPair(ForwardModelPair):
    """
    A pair of affine maps F(u) = c* + A* u and f(u) = c + A u.
    """

    def __init__(self, a_star, a, offset_star=None, offset=None, **kwargs):

        a_star = np.atleast_2d(np.array(a_star, dtype=float))
        a = np.atleast_2d(np.array(a, dtype=float))
        if a_star.shape != a.shape:
            raise ValueError("accurate and approximate operators have different"
                " shapes: {0} and {1}".format(a_star.shape, a.shape))

        super(LinearForwardModelPair, self).__init__(a.shape[1], a.shape[0],
            **kwargs)

        J = a.shape[0]
        self.a_star = a_star
        self.a = a
        self.offset_star = np.zeros(J) if offset_star is None \
            else np.array(offset_star, dtype=float).flatten()
        self.offset = np.zeros(J) if offset is None \
            else np.array(offset, dtype=float).flatten()
        if self.offset_star.size != J or self.offset.size != J:
            raise ValueError("offsets must have length {}".format(J))
        return None


    def _accurate_many(self, u):
        return self.offset_star + np.dot(u, self.a_star.T)

    def _approximate_many(self, u):
        return self.offset + np.dot(u, self.a.T)


    @property
    def model_error_operator(self):
        return self.a_star - self.a


    @property
    def approximate_linearization(self):
        return (self.offset, self.a)


    def linear_model(self, prior, gamma, delta=1.0):
        """
        Return the :class:`moderr.gaussian.LinearModelPair` for this pair.
        Offsets must vanish, because the linear iteration has no offset term.
        """

        from ..gaussian import LinearModelPair

        if np.any(self.offset_star != 0) or np.any(self.offset != 0):
            raise ValueError("linear iteration requires zero offsets")
        return LinearModelPair(self.a_star, self.a, gamma, prior, delta=delta)
