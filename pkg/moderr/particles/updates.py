# coding: utf-8

""" Particle updates of the model-error iteration. """

from __future__ import division, print_function

__all__ = ["GaussianInnerSampler", "RejectionInnerSampler",
    "DegenerateLikelihoodError", "DegeneracyWarning", "resample_draw_update",
    "mixture_update", "importance_update", "mixture_log_likelihood"]

import logging
import warnings

import numpy as np
from scipy import linalg
from scipy.special import logsumexp

from .ensemble import ParticleEnsemble, ParticleEvaluationError
from .resampling import (cumulative_weights, search_cumulative,
    systematic_resample, multinomial_resample)
from ..gaussian import IllPosedError, MAXIMUM_CONDITION
from ..utils import NumericalError, symmetrize

logger = logging.getLogger("moderr")

# Largest number of (particle, mixture component, datum) residuals held at once.
CHUNK_ENTRIES = 2**22

RESAMPLERS = {
    "systematic": systematic_resample,
    "multinomial": multinomial_resample
}


class DegenerateLikelihoodError(NumericalError, ValueError):
    pass

class DegeneracyWarning(Warning):
    pass
warnings.simplefilter("once", DegeneracyWarning)


def mixture_log_likelihood(approximate_outputs, errors, weights, noise, b):
    """
    Evaluate log sum_k w_k pi_noise(b - f(u_i) - m_k) for every row i.

    :param approximate_outputs:
        f(u_i), an (n, J) array.

    :param errors:
        Mixture model errors m_k, a (K, J) array.

    :param weights:
        Mixture weights w_k (K values, summing to one).

    :param noise:
        The noise density.

    :type noise:
        :class:`moderr.particles.BoundedNoiseDensity`

    :param b:
        The data vector.

    :returns:
        An array of n log-likelihood values.
    """

    approximate_outputs = np.atleast_2d(approximate_outputs)
    errors = np.atleast_2d(errors)
    with np.errstate(divide="ignore"):
        log_weights = np.log(np.asarray(weights, dtype=float))

    n, J = approximate_outputs.shape
    K = errors.shape[0]
    chunk = max(1, CHUNK_ENTRIES // max(1, K * J))

    base = b - approximate_outputs
    values = np.empty(n)
    for start in range(0, n, chunk):
        residuals = base[start:start + chunk, None, :] - errors[None, :, :]
        values[start:start + chunk] = logsumexp(
            noise.log_density(residuals) + log_weights, axis=1)
    return values


class GaussianInnerSampler(object):
    """
    Exact draws from the Gaussian density proportional to

        pi_prior(u) pi_noise(b - c - A u - m)

    for an affine approximate map f(u) = c + A u and Gaussian noise. Draws use
    prior perturbation: with z ~ N(m_0, C_0) and eta ~ N(0, gamma),

        u = z + K (b - c - m - A z - eta),  K = C_0 A^T (gamma + A C_0 A^T)^{-1},

    is distributed as N(p, C) with C = (A^T gamma^{-1} A + C_0^{-1})^{-1} and
    mean p = m_0 + K (b - c - m - A m_0). C is never factorized.
    """

    def __init__(self, a, gamma, prior, b, offset=None):

        a = np.atleast_2d(np.asarray(a, dtype=float))
        gamma = np.atleast_2d(np.asarray(gamma, dtype=float))
        J, d = a.shape
        if prior.dimension != d or gamma.shape != (J, J):
            raise ValueError("operator, noise covariance and prior are not "
                "dimensionally consistent")

        c0_at = prior.apply_covariance(a.T)
        inner = symmetrize(gamma + np.dot(a, c0_at))
        condition = np.linalg.cond(inner)
        if not np.isfinite(condition) or condition > MAXIMUM_CONDITION:
            raise IllPosedError("inner matrix is numerically singular "
                "(condition estimate {:.3e})".format(condition))
        cho = linalg.cho_factor(inner, lower=True)

        self.a = a
        self.prior = prior
        self.gain = linalg.cho_solve(cho, c0_at.T).T
        self.noise_factor = linalg.cholesky(gamma, lower=True)
        self.data = np.asarray(b, dtype=float).flatten() \
            - (0 if offset is None else np.asarray(offset, dtype=float))
        self._c0_at = c0_at
        self._inner_cho = cho
        return None


    @property
    def covariance(self):
        """ C = C_0 - K A C_0 (dense priors only). """
        if self.prior.covariance is None:
            raise ValueError("posterior covariance requires a dense prior")
        return symmetrize(self.prior.covariance - np.dot(self.gain, self._c0_at.T))


    def mixture_means(self, errors):
        """ Mixture component means p_k for model errors m_k of shape (K, J). """
        residual = self.data - np.atleast_2d(errors) \
            - np.dot(self.a, self.prior.mean)
        return self.prior.mean + np.dot(residual, self.gain.T)


    def log_evidence(self, errors):
        """
        Log evidences of the mixture components, up to a shared constant:

            log Z_k = -1/2 r_k^T (gamma + A C_0 A^T)^{-1} r_k,
            r_k = b - c - m_k - A m_0.
        """
        residual = self.data - np.atleast_2d(errors) \
            - np.dot(self.a, self.prior.mean)
        solved = linalg.cho_solve(self._inner_cho, residual.T)
        return -0.5 * np.sum(residual.T * solved, axis=0)


    def draw(self, errors, rng, generation):
        """
        Draw one parameter vector per row of ``errors`` from the "draw" stream
        of the given generation.
        """

        errors = np.atleast_2d(errors)
        n = errors.shape[0]
        generator = rng.generator("draw", generation)
        z = self.prior.sample(n, generator)
        eta = np.dot(generator.standard_normal((n, self.a.shape[0])),
            self.noise_factor.T)
        residual = self.data - errors - np.dot(z, self.a.T) - eta
        return z + np.dot(residual, self.gain.T)


class RejectionInnerSampler(object):
    """
    Draws from pi_prior(u) pi_noise(b - f(u) - m) by rejection from the prior,
    accepting with probability pi_noise(b - f(u) - m) / sup pi_noise. Every
    particle uses its own random stream, so the result does not depend on the
    order in which particles are processed.

    :meth:`draw_mixture` proposes the model error together with u, which
    samples the normalized mixture
    pi_prior(u) sum_k w_k pi_noise(b - f(u) - m_k)
    exactly.
    """

    def __init__(self, prior, noise, approximate, b, batch_size=64,
        max_proposals=10**6):
        self.prior = prior
        self.noise = noise
        self.approximate = approximate
        self.data = np.asarray(b, dtype=float).flatten()
        self.batch_size = int(batch_size)
        self.max_proposals = int(max_proposals)
        self.proposals = 0
        return None


    def _draw_one(self, errors, generator, index, cumulative=None):
        log_bound = self.noise.log_supremum
        drawn = 0
        while self.max_proposals > drawn:
            if cumulative is None:
                proposal_errors = errors
            else:
                components = search_cumulative(cumulative,
                    generator.random(self.batch_size))
                proposal_errors = errors[components]
            proposals = self.prior.sample(self.batch_size, generator)
            uniforms = generator.random(self.batch_size)
            residuals = self.data - self.approximate(proposals) - proposal_errors
            log_ratio = self.noise.log_density(residuals) - log_bound
            accepted = np.where(np.log(uniforms) < log_ratio)[0]
            drawn += self.batch_size
            if accepted.size > 0:
                self.proposals += accepted[0] + 1 + drawn - self.batch_size
                return proposals[accepted[0]]

        raise ParticleEvaluationError("no proposal accepted after {} draws"\
            .format(drawn), index)


    def draw(self, errors, rng, generation):
        errors = np.atleast_2d(errors)
        return np.array([self._draw_one(error, rng.generator("draw",
            generation, j), j) for j, error in enumerate(errors)])


    def draw_mixture(self, errors, weights, rng, generation, n=None):
        """
        Draw ``n`` parameter vectors (one per error by default), proposing the
        mixture component with probabilities ``weights`` alongside each prior
        proposal.
        """

        errors = np.atleast_2d(errors)
        cumulative = cumulative_weights(weights)
        n = errors.shape[0] if n is None else int(n)
        return np.array([self._draw_one(errors, rng.generator("draw",
            generation, j), j, cumulative) for j in range(n)])


def resample_draw_update(ensemble, me, prior, noise, f, b, rng,
    inner_sampler=None, resampling="systematic", component_weights="evidence"):
    """
    The generic particle update: for every j, draw an index k_j, then draw a
    new particle from pi_prior(u) pi_noise(b - f(u) - m_{k_j}).

    With ``component_weights="evidence"`` the indices are drawn with
    probabilities proportional to w_k Z_k, where Z_k is the evidence of
    component k, so the new particles are draws from the normalized measure

        pi_prior(u) sum_k w_k pi_noise(b - f(u) - m_k).

    With ``component_weights="ensemble"`` the indices are drawn with the
    ensemble weights w_k alone, and every component is normalized on its own.
    The two coincide when all components have equal evidence (for instance
    when the model error is constant).

    :param ensemble:
        The current generation.

    :type ensemble:
        :class:`moderr.particles.ParticleEnsemble`

    :param me:
        The model errors of the current generation.

    :type me:
        :class:`moderr.particles.ModelErrorSample`

    :param prior:
        The prior measure.

    :param noise:
        The noise density (used by the default inner sampler).

    :param f:
        The approximate model: a :class:`moderr.models.ForwardModelPair` or a
        callable taking an (n, d) array.

    :param b:
        The data vector.

    :param rng:
        The random streams; "resample" and "draw" are used.

    :param inner_sampler: [optional]
        An object with a ``draw(errors, rng, generation)`` method. By default
        the exact Gaussian sampler is used when f is affine and the noise is
        exactly Gaussian, and rejection from the prior otherwise.

    :param resampling: [optional]
        The index resampling scheme: "systematic" or "multinomial".

    :param component_weights: [optional]
        "evidence" or "ensemble", as described above. Inner samplers without
        a ``log_evidence`` method draw the component jointly with the
        particle through ``draw_mixture`` in the "evidence" case.

    :returns:
        The next generation, uniformly weighted.

    :rtype:
        :class:`moderr.particles.ParticleEnsemble`
    """

    me.check_aligned(ensemble)
    if resampling not in RESAMPLERS:
        raise ValueError("unknown resampling scheme '{0}' (available: {1})"\
            .format(resampling, ", ".join(RESAMPLERS)))
    if component_weights not in ("evidence", "ensemble"):
        raise ValueError("unknown component weighting '{}'".format(
            component_weights))

    if inner_sampler is None:
        inner_sampler = _default_inner_sampler(prior, noise, f, b)

    generation = ensemble.generation
    probabilities = ensemble.weights
    if component_weights == "evidence":
        if not hasattr(inner_sampler, "log_evidence"):
            particles = inner_sampler.draw_mixture(me.errors, ensemble.weights,
                rng, generation)
            return ParticleEnsemble(particles, generation=generation + 1)

        with np.errstate(divide="ignore"):
            log_p = np.log(ensemble.weights) \
                + inner_sampler.log_evidence(me.errors)
        probabilities = np.exp(log_p - logsumexp(log_p))
        probabilities /= probabilities.sum()

    indices = RESAMPLERS[resampling](probabilities,
        rng.generator("resample", generation))
    particles = inner_sampler.draw(me.errors[indices], rng, generation)
    return ParticleEnsemble(particles, generation=generation + 1)


def _default_inner_sampler(prior, noise, f, b):
    try:
        linearization = getattr(f, "approximate_linearization", None)
    except TypeError:
        linearization = None

    if linearization is not None and noise.mode == "exact-gaussian":
        offset, a = linearization
        return GaussianInnerSampler(a, noise.gamma, prior, b, offset=offset)

    approximate = f.approximate if hasattr(f, "approximate") else f
    return RejectionInnerSampler(prior, noise, approximate, b)


def mixture_update(ensemble, me, a, gamma, prior, b, rng, offset=None,
    component_weights="evidence"):
    """
    The update for an affine approximate model and Gaussian noise: each new
    particle is drawn from the Gaussian mixture component N(p_{k_j}, C), with
    C = (A^T gamma^{-1} A + C_0^{-1})^{-1} shared by all components. The
    index k_j is drawn with the ensemble weights times the component
    evidences, or with the ensemble weights alone when
    ``component_weights="ensemble"``.

    :param ensemble:
        The current generation.

    :param me:
        The model errors of the current generation.

    :param a:
        The (J, d) approximate operator.

    :param gamma:
        The (J, J) noise covariance.

    :param prior:
        The prior measure.

    :param b:
        The data vector.

    :param rng:
        The random streams.

    :param offset: [optional]
        The constant term c of f(u) = c + A u.

    :param component_weights: [optional]
        "evidence" or "ensemble".

    :rtype:
        :class:`moderr.particles.ParticleEnsemble`
    """

    sampler = GaussianInnerSampler(a, gamma, prior, b, offset=offset)
    return resample_draw_update(ensemble, me, prior, None, None, b, rng,
        inner_sampler=sampler, component_weights=component_weights)


def importance_update(ensemble, fm, noise, prior, b, rng, me=None):
    """
    The importance sampling update: draw N fresh prior particles and weight
    each by the mixture likelihood g(u) = sum_j w_j pi_noise(b - f(u) - M(u_j))
    over the current ensemble.

    :param ensemble:
        The current generation.

    :param fm:
        The forward model pair.

    :param noise:
        The noise density.

    :param prior:
        The prior measure.

    :param b:
        The data vector.

    :param rng:
        The random streams; "importance" is used.

    :param me: [optional]
        Cached model errors of the current generation. They are computed (N
        accurate evaluations) when not given.

    :returns:
        The next, weighted, generation.

    :raises DegenerateLikelihoodError:
        If every new particle has zero likelihood.
    """

    from .ensemble import model_error_sample

    if me is None:
        me = model_error_sample(ensemble, fm)
    me.check_aligned(ensemble)

    N = ensemble.n_particles
    generation = ensemble.generation
    particles = prior.sample(N, rng.generator("importance", generation))
    log_g = mixture_log_likelihood(fm.approximate(particles), me.errors,
        ensemble.weights, noise, b)

    if not np.any(np.isfinite(log_g)):
        raise DegenerateLikelihoodError("all importance weights underflow; "
            "widen the noise or use the clamped density")

    weights = np.exp(log_g - logsumexp(log_g))
    weights /= weights.sum()

    ess = 1.0 / (weights**2).sum()
    if ess < N / 100.0:
        message = "Importance weights are degenerate at generation {0}: "\
            "effective sample size {1:.1f} of {2}".format(generation + 1, ess, N)
        logger.warning(message)
        warnings.warn(message, DegeneracyWarning)

    return ParticleEnsemble(particles, weights, generation=generation + 1)
