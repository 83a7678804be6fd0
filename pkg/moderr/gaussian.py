# coding: utf-8

""" Linear-Gaussian posterior updates and the model-error fixed-point iteration. """

from __future__ import division, print_function

__all__ = ["GaussianMeasure", "LinearModelPair", "IterationTrace",
    "IllPosedError", "IndefiniteCovarianceError", "InsufficientDecayError",
    "RateFitWarning",
    "posterior_update", "iterate_step", "run_linear_iteration",
    "precision_iterate", "contraction_bound", "estimate_rate", "loewner_gap",
    "frobenius_distance"]

import logging
import warnings

import numpy as np
from scipy import linalg

from .utils import NumericalError, symmetrize

logger = logging.getLogger("moderr")

# Inner (J x J) matrices with a condition estimate above this are ill-posed.
MAXIMUM_CONDITION = 1e14

# Covariances of larger dimension are kept as summaries in traces.
DENSE_LIMIT = 4096

# Columns per block when operator-form covariances are applied to the identity.
COLUMN_BLOCK = 256


class IllPosedError(NumericalError, ValueError):
    pass

class IndefiniteCovarianceError(NumericalError, ValueError):
    pass

class InsufficientDecayError(NumericalError, ValueError):
    pass

class RateFitWarning(Warning):
    pass
warnings.simplefilter("once", RateFitWarning)


def _symmetric_factor(covariance, name="covariance"):
    """
    Return L with L L^T = covariance from a symmetric eigendecomposition. The
    input may be singular, but not indefinite.
    """

    eigenvalues, eigenvectors = linalg.eigh(covariance)
    largest = max(eigenvalues[-1], 0)
    if eigenvalues[0] < -1e-10 * largest:
        raise IndefiniteCovarianceError("{0} is indefinite (smallest "
            "eigenvalue {1:.3e}, largest {2:.3e})".format(name, eigenvalues[0],
                largest))
    return eigenvectors * np.sqrt(np.clip(eigenvalues, 0, None))


def loewner_gap(upper, lower):
    """
    Return the smallest eigenvalue of ``upper - lower``. The pair is ordered
    (upper >= lower in the positive semi-definite sense) when this is
    non-negative.
    """
    return linalg.eigvalsh(symmetrize(np.asarray(upper) - np.asarray(lower)))[0]


def _covariance_columns(covariance, start, stop):
    if isinstance(covariance, GaussianMeasure):
        if covariance.covariance is not None:
            return covariance.covariance[:, start:stop]
        d = covariance.dimension
        return covariance.apply_covariance(np.eye(d)[:, start:stop])
    return np.asarray(covariance)[:, start:stop]


def frobenius_distance(first, second=None, block=COLUMN_BLOCK):
    """
    Return |C_1 - C_2|_F, or |C_1|_F when ``second`` is None.

    Either covariance may be a dense matrix or a :class:`GaussianMeasure`.
    Operator-form measures are applied to the identity in blocks of
    ``block`` columns, so no d x d matrix is formed for them.
    """

    d = first.dimension if isinstance(first, GaussianMeasure) \
        else np.asarray(first).shape[0]
    total = 0.0
    for start in range(0, d, int(block)):
        stop = min(start + int(block), d)
        columns = _covariance_columns(first, start, stop)
        if second is not None:
            columns = columns - _covariance_columns(second, start, stop)
        total += (columns**2).sum()
    return np.sqrt(total)


class GaussianMeasure(object):
    """
    A Gaussian measure on R^d, stored as a mean vector and either a dense
    covariance matrix or operators that apply the covariance and its square
    root.
    """

    def __init__(self, mean, covariance=None, sqrt_operator=None,
        covariance_operator=None, validate=True):
        """
        :param mean:
            The mean vector (length d).

        :type mean:
            :class:`numpy.ndarray`

        :param covariance: [optional]
            The dense d x d covariance matrix.

        :type covariance:
            :class:`numpy.ndarray`

        :param sqrt_operator: [optional]
            A callable mapping white noise of shape (n, d) to correlated
            fluctuations of shape (n, d), i.e. rows of w L^T with L L^T = C.
            Required when no dense covariance is given and samples are needed.

        :param covariance_operator: [optional]
            A callable mapping a (d, m) array X to C X. Required when no dense
            covariance is given.

        :param validate: [optional]
            Check symmetry and positive semi-definiteness of a dense covariance.
        """

        self.mean = np.array(mean, dtype=float).flatten()
        d = self.mean.size

        if covariance is None and covariance_operator is None:
            raise ValueError("either a covariance matrix or a covariance "
                "operator is required")

        if covariance is not None:
            covariance = np.array(covariance, dtype=float)
            if covariance.shape != (d, d):
                raise ValueError("covariance has shape {0} but the mean has "
                    "length {1}".format(covariance.shape, d))

            if validate:
                scale = max(np.abs(covariance).max(), np.finfo(float).tiny)
                if np.abs(covariance - covariance.T).max() > 1e-12 * scale:
                    raise ValueError("covariance is not symmetric")
                if d > 0:
                    eigenvalues = linalg.eigvalsh(covariance)
                    if eigenvalues[0] < -1e-10 * max(eigenvalues[-1], 0):
                        raise ValueError("covariance is not positive "
                            "semi-definite (smallest eigenvalue {:.3e})".format(
                                eigenvalues[0]))

        self.covariance = covariance
        self._sqrt_operator = sqrt_operator
        self._covariance_operator = covariance_operator
        self._factor = None
        return None


    def __repr__(self):
        return "<{0}.GaussianMeasure of dimension {1}{2} at {3}>".format(
            self.__module__, self.dimension,
            "" if self.covariance is not None else " (operator form)",
            hex(id(self)))


    @property
    def dimension(self):
        return self.mean.size


    @property
    def marginal_variances(self):
        if self.covariance is not None:
            return np.diag(self.covariance).copy()
        d = self.dimension
        variances = np.empty(d)
        for start in range(0, d, COLUMN_BLOCK):
            stop = min(start + COLUMN_BLOCK, d)
            columns = self.apply_covariance(np.eye(d)[:, start:stop])
            variances[start:stop] = columns[np.arange(start, stop),
                np.arange(stop - start)]
        return variances


    def apply_covariance(self, x):
        """ Return C x for a vector or a (d, m) array x. """
        if self.covariance is not None:
            return np.dot(self.covariance, x)
        return self._covariance_operator(x)


    @property
    def factor(self):
        """ The dense symmetric factor L with L L^T = C. """
        if self._factor is None:
            if self.covariance is None:
                raise ValueError("no dense covariance to factorize")
            self._factor = _symmetric_factor(self.covariance)
        return self._factor


    def correlate(self, white):
        """ Map white noise rows of shape (n, d) to fluctuations under C. """
        white = np.atleast_2d(white)
        if self._sqrt_operator is not None:
            return self._sqrt_operator(white)
        return np.dot(white, self.factor.T)


    def sample(self, n, generator):
        """
        Draw ``n`` independent samples.

        :param n:
            The number of samples.

        :type n:
            int

        :param generator:
            The source of randomness.

        :type generator:
            :class:`numpy.random.Generator`

        :returns:
            An array of shape (n, d).
        """

        white = generator.standard_normal((int(n), self.dimension))
        return self.mean + self.correlate(white)


    def logpdf(self, x):
        """ Log-density (dense, non-singular covariance only). """
        if self.covariance is None:
            raise ValueError("log-density requires a dense covariance")
        cho = linalg.cho_factor(self.covariance, lower=True)
        r = np.atleast_2d(x) - self.mean
        z = linalg.solve_triangular(cho[0], r.T, lower=True)
        log_det = 2 * np.log(np.diag(cho[0])).sum()
        return -0.5 * ((z**2).sum(axis=0) + log_det \
            + self.dimension * np.log(2 * np.pi))


    def summary(self):
        """ A covariance summary: trace, Frobenius norm, marginal variances. """
        variances = self.marginal_variances
        if self.covariance is not None:
            frobenius = linalg.norm(self.covariance, "fro")
        else:
            frobenius = frobenius_distance(self)
        return {
            "trace": variances.sum(),
            "frobenius": frobenius,
            "marginal_variances": variances
        }


class LinearModelPair(object):
    """
    A linear inverse problem with an accurate operator A* and an approximate
    operator A acting on the same parameter vector, additive Gaussian noise
    and a Gaussian prior. The model-error operator M = A* - A is always
    computed from the two operators.
    """

    def __init__(self, a_star, a, gamma, prior, delta=1.0):

        a_star = np.atleast_2d(np.array(a_star, dtype=float))
        a = np.atleast_2d(np.array(a, dtype=float))
        gamma = np.atleast_2d(np.array(gamma, dtype=float))

        if a_star.shape != a.shape:
            raise ValueError("accurate and approximate operators have "
                "different shapes: {0} and {1}".format(a_star.shape, a.shape))

        J, d = a.shape
        if gamma.shape != (J, J):
            raise ValueError("noise covariance has shape {0} but the operators"
                " have {1} rows".format(gamma.shape, J))

        if np.abs(gamma - gamma.T).max() > 1e-12 * np.abs(gamma).max():
            raise ValueError("noise covariance is not symmetric")

        if linalg.eigvalsh(gamma)[0] <= 0:
            raise ValueError("noise covariance is not positive definite")

        if prior.dimension != d:
            raise ValueError("prior has dimension {0} but the operators act on"
                " vectors of length {1}".format(prior.dimension, d))

        if 0 > delta:
            raise ValueError("model error scaling must be non-negative")

        self.a_star = a_star
        self.a = a
        self.gamma = gamma
        self.prior = prior
        self.delta = float(delta)
        self._prior_precision = None
        return None


    @property
    def model_error_operator(self):
        return self.a_star - self.a

    @property
    def shape(self):
        return self.a.shape


    @property
    def prior_precision(self):
        """ B_0 = C_0^{-1}, computed once by Cholesky factorization. """
        if self._prior_precision is None:
            try:
                cho = linalg.cho_factor(self.prior.covariance)
            except (linalg.LinAlgError, ValueError):
                raise IllPosedError("prior covariance is not invertible")
            self._prior_precision = symmetrize(
                linalg.cho_solve(cho, np.eye(self.prior.dimension)))
        return self._prior_precision


    def with_delta(self, delta):
        """ Return the same problem with the model error scaled by delta. """
        return self.__class__(self.a_star, self.a, self.gamma, self.prior,
            delta=delta)


    def posterior(self, accurate=True):
        """
        Return the exact accurate-model posterior (accurate=True) or the
        conventional approximate-model posterior (accurate=False). Both are
        computed for the data supplied to :func:`posterior_update` by the
        caller; this method returns a callable of the data vector.
        """
        operator = self.a_star if accurate else self.a
        shift = np.zeros(operator.shape[0])
        return lambda b: posterior_update(self.prior, operator, self.gamma,
            shift, b)


def _factor_inner(inner):
    """
    Cholesky-factor the J x J inner matrix, refusing numerically singular
    configurations.
    """

    condition = np.linalg.cond(inner)
    if not np.isfinite(condition) or condition > MAXIMUM_CONDITION:
        raise IllPosedError("inner matrix is numerically singular (condition "
            "estimate {:.3e})".format(condition))
    try:
        return linalg.cho_factor(inner, lower=True)
    except linalg.LinAlgError:
        raise IllPosedError("inner matrix is not positive definite")


def posterior_update(prior, a, gamma, shift, b):
    """
    Condition a Gaussian prior on data b = A u + shift + noise, noise ~ N(0, gamma).

    The update uses only the inverse-free form: all solves are against the
    J x J matrix gamma + A C_0 A^T.

    :param prior:
        The prior measure N(m_0, C_0).

    :type prior:
        :class:`GaussianMeasure`

    :param a:
        The (J, d) forward operator.

    :param gamma:
        The (J, J) symmetric positive definite noise covariance.

    :param shift:
        A length-J data offset (model-error mean, linearization offset).

    :param b:
        The length-J data vector.

    :returns:
        The posterior measure.

    :rtype:
        :class:`GaussianMeasure`
    """

    a = np.atleast_2d(np.asarray(a, dtype=float))
    gamma = np.atleast_2d(np.asarray(gamma, dtype=float))
    b = np.asarray(b, dtype=float).flatten()
    shift = np.zeros_like(b) + np.asarray(shift, dtype=float).flatten()

    J, d = a.shape
    if d != prior.dimension:
        raise ValueError("operator acts on vectors of length {0} but the prior "
            "has dimension {1}".format(d, prior.dimension))
    if b.size != J or shift.size != J or gamma.shape != (J, J):
        raise ValueError("data, shift and noise covariance must match the {} "
            "operator rows".format(J))

    c0_at = prior.apply_covariance(a.T) # (d, J)
    inner = symmetrize(gamma + np.dot(a, c0_at))
    cho = _factor_inner(inner)

    # Gain K = C_0 A^T (gamma + A C_0 A^T)^{-1}, shape (d, J).
    gain = linalg.cho_solve(cho, c0_at.T).T
    residual = b - np.dot(a, prior.mean) - shift
    mean = prior.mean + np.dot(gain, residual)

    if prior.covariance is not None:
        covariance = symmetrize(prior.covariance - np.dot(gain, c0_at.T))
        return GaussianMeasure(mean, covariance, validate=False)

    def covariance_operator(x):
        return prior.apply_covariance(x) - np.dot(gain, np.dot(c0_at.T, x))

    return GaussianMeasure(mean, covariance_operator=covariance_operator,
        validate=False)


def iterate_step(model, current, b):
    """
    One step of the model-error iteration: push the current measure through
    the model-error operator and condition the prior on the data again.

    :param model:
        The linear problem.

    :type model:
        :class:`LinearModelPair`

    :param current:
        The current approximate posterior N(m_l, C_l).

    :type current:
        :class:`GaussianMeasure`

    :param b:
        The data vector.

    :returns:
        N(m_{l+1}, C_{l+1}).

    :rtype:
        :class:`GaussianMeasure`
    """

    if current.dimension != model.prior.dimension:
        raise ValueError("current measure has dimension {0}, expected {1}"\
            .format(current.dimension, model.prior.dimension))

    scaled_m = model.delta * model.model_error_operator
    model_error_covariance = np.dot(scaled_m, current.apply_covariance(scaled_m.T))
    inner_noise = model.gamma + symmetrize(model_error_covariance)
    shift = np.dot(scaled_m, current.mean)
    return posterior_update(model.prior, model.a, inner_noise, shift, b)


class IterationTrace(object):
    """
    Record of the iterates of the linear model-error iteration.

    Means are always kept. Covariances are kept in full up to dimension
    ``dense_limit`` and as summaries (trace, Frobenius norm, marginal
    variances) beyond it or when the measure has only a covariance
    operator. Step sizes and distances to a reference supplied up front are
    accumulated while iterating in every case; the reference covariance may
    be a dense matrix or a :class:`GaussianMeasure`.
    """

    def __init__(self, reference=None, dense_limit=DENSE_LIMIT):
        self.means = []
        self.covariances = []
        self.mean_steps = []
        self.cov_steps = []
        self.mean_errors = None
        self.cov_errors = None
        self.converged_at = None
        self.dense_limit = dense_limit
        self._reference = reference
        self._last_covariance = None
        if reference is not None:
            self.mean_errors, self.cov_errors = [], []
        return None


    def __len__(self):
        return len(self.means)


    @property
    def full(self):
        return len(self.covariances) == 0 \
            or isinstance(self.covariances[0], np.ndarray)


    def append(self, measure):
        mean = measure.mean.copy()
        dense = measure.covariance is not None \
            and measure.dimension <= self.dense_limit
        current = measure.covariance if dense else measure

        if len(self.means) > 0:
            self.mean_steps.append(np.linalg.norm(mean - self.means[-1]))
            self.cov_steps.append(
                frobenius_distance(current, self._last_covariance))
        else:
            self.mean_steps.append(np.nan)
            self.cov_steps.append(np.nan)

        if self._reference is not None:
            reference_mean, reference_covariance = self._reference
            self.mean_errors.append(np.linalg.norm(mean - reference_mean))
            self.cov_errors.append(
                frobenius_distance(current, reference_covariance))

        self.means.append(mean)
        if dense:
            self.covariances.append(measure.covariance.copy())
        else:
            self.covariances.append(measure.summary())
        self._last_covariance = current
        return None


    def errors_against(self, mean, covariance):
        """
        Return the Euclidean mean errors and Frobenius covariance errors of
        every iterate against a reference measure.
        """
        if not self.full:
            raise ValueError("covariances were stored as summaries; supply the "
                "reference when the trace is created instead")
        mean_errors = [np.linalg.norm(m - mean) for m in self.means]
        cov_errors = [linalg.norm(c - covariance, "fro") \
            for c in self.covariances]
        return (mean_errors, cov_errors)


    def limit_errors(self):
        """ Errors of every iterate against the final iterate. """
        return self.errors_against(self.means[-1], self.covariances[-1])


    def set_errors(self, mean_errors, cov_errors):
        if len(mean_errors) != len(self.means) \
        or len(cov_errors) != len(self.means):
            raise ValueError("error lists must have one entry per iterate")
        self.mean_errors = list(mean_errors)
        self.cov_errors = list(cov_errors)
        return None


    def to_table(self):
        from astropy.table import Table

        n = len(self.means)
        nan = [np.nan] * n
        return Table([
            np.arange(n),
            np.array(self.mean_errors if self.mean_errors is not None else nan,
                dtype=float),
            np.array(self.cov_errors if self.cov_errors is not None else nan,
                dtype=float),
            np.array(self.mean_steps, dtype=float),
            np.array(self.cov_steps, dtype=float)
        ], names=("iter", "mean_err", "cov_err", "mean_step", "cov_step"))


    def write(self, filename):
        from .io import write_table
        write_table(self.to_table(), filename)
        return None


def run_linear_iteration(model, b, max_iters, tol=1e-10, reference=None,
    dense_limit=DENSE_LIMIT):
    """
    Run the model-error iteration from the prior for ``max_iters`` steps.

    The trace always runs to ``max_iters``. ``converged_at`` is the first
    iterate index l >= 1 whose next step satisfies

        |m_{l+1} - m_l| <= tol (1 + |m_{l+1}|)  and
        |C_{l+1} - C_l|_F <= tol (1 + |C_{l+1}|_F),

    so an iteration that is exact after one step converges at 1.

    :param model:
        The linear problem.

    :type model:
        :class:`LinearModelPair`

    :param b:
        The data vector.

    :param max_iters:
        The number of iterations L.

    :type max_iters:
        int

    :param tol: [optional]
        The relative convergence tolerance.

    :param reference: [optional]
        A (mean, covariance) pair to measure errors against while iterating.
        The covariance may be a dense matrix or a :class:`GaussianMeasure`.

    :param dense_limit: [optional]
        Covariances of larger dimension are stored as summaries.

    :returns:
        The trace of iterates l = 0 ... L.

    :rtype:
        :class:`IterationTrace`
    """

    if 1 > max_iters:
        raise ValueError("at least one iteration is required")
    if 0 > tol:
        raise ValueError("tolerance must be non-negative")

    trace = IterationTrace(reference=reference, dense_limit=dense_limit)
    current = model.prior
    trace.append(current)

    for iteration in range(1, int(max_iters) + 1):
        current = iterate_step(model, current, b)
        trace.append(current)

        if trace.converged_at is None and iteration >= 2:
            mean_scale = 1 + np.linalg.norm(current.mean)
            if trace.mean_steps[-1] <= tol * mean_scale \
            and trace.cov_steps[-1] <= tol * (1 + frobenius_distance(current)):
                trace.converged_at = iteration - 1

        logger.debug("Iteration {0}: mean step {1:.3e}, covariance step {2:.3e}"\
            .format(iteration, trace.mean_steps[-1], trace.cov_steps[-1]))

    if trace.converged_at is None:
        logger.info("Iteration did not meet tolerance {0:.1e} within {1} steps"\
            .format(tol, max_iters))
    else:
        logger.info("Iteration converged at step {0} of {1}".format(
            trace.converged_at, max_iters))
    return trace


def precision_iterate(b_matrix, model):
    """
    Apply the precision map R(B) = A^T (gamma + M B^{-1} M^T)^{-1} A + B_0,
    with M scaled by the model's delta.

    :param b_matrix:
        A symmetric positive definite precision matrix.

    :param model:
        The linear problem; its prior covariance must be invertible.

    :type model:
        :class:`LinearModelPair`

    :returns:
        R(B), symmetric positive definite.
    """

    b_matrix = np.atleast_2d(np.asarray(b_matrix, dtype=float))
    d = model.prior.dimension
    if b_matrix.shape != (d, d):
        raise ValueError("precision matrix has shape {0}, expected {1}".format(
            b_matrix.shape, (d, d)))

    try:
        cho_b = linalg.cho_factor(symmetrize(b_matrix))
    except linalg.LinAlgError:
        raise IllPosedError("precision matrix is not symmetric positive "
            "definite")

    scaled_m = model.delta * model.model_error_operator
    inner = model.gamma + symmetrize(
        np.dot(scaled_m, linalg.cho_solve(cho_b, scaled_m.T)))
    cho = _factor_inner(symmetrize(inner))
    data_precision = np.dot(model.a.T, linalg.cho_solve(cho, model.a))
    return symmetrize(data_precision + model.prior_precision)


def contraction_bound(model):
    """
    Return the computable upper bound

        beta_hat = |C_0 A^T (gamma + A C_0 A^T)^{-1}|_2 |M|_2

    on the contraction constant beta. The iteration is certified to contract
    when beta_hat * delta < 1.
    """

    a = model.a
    c0_at = model.prior.apply_covariance(a.T)
    cho = _factor_inner(symmetrize(model.gamma + np.dot(a, c0_at)))
    gain = linalg.cho_solve(cho, c0_at.T).T
    return np.linalg.norm(gain, 2) * np.linalg.norm(model.model_error_operator, 2)


def estimate_rate(errors, plateau_floor=None, full_output=False):
    """
    Fit the slope of log(error) against iteration index.

    Only the leading run of entries above ``plateau_floor`` is used: the fit
    stops at the first entry at or below the floor.

    :param errors:
        The error sequence, one entry per iteration.

    :param plateau_floor: [optional]
        Entries at or below this are treated as converged. Defaults to ten
        machine epsilons times the first error.

    :param full_output: [optional]
        Also return the intercept, the coefficient of determination and the
        number of points used.

    :returns:
        The fitted slope (natural logarithm per iteration), or a tuple
        (slope, intercept, r_squared, n_points) when ``full_output`` is True.
    """

    errors = np.asarray(errors, dtype=float).flatten()
    if errors.size == 0:
        raise InsufficientDecayError("no errors to fit")

    if plateau_floor is None:
        plateau_floor = 10 * np.finfo(float).eps * errors[0]

    above = errors > plateau_floor
    n = errors.size if np.all(above) else int(np.argmin(above))
    if 3 > n:
        raise InsufficientDecayError("only {0} error values lie above the "
            "plateau floor {1:.3e}".format(n, plateau_floor))

    x = np.arange(n, dtype=float)
    y = np.log(errors[:n])
    slope, intercept = np.polyfit(x, y, 1)

    residual = y - (slope * x + intercept)
    total = ((y - y.mean())**2).sum()
    r_squared = 1.0 if total == 0 else 1 - (residual**2).sum() / total

    if full_output:
        return (slope, intercept, r_squared, n)
    return slope
