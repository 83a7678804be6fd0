# coding: utf-8

""" Particle approximations of the model-error iteration. """

from .ensemble import (ParticleEnsemble, ModelErrorSample, BoundedNoiseDensity,
    ParticleEvaluationError, sample_prior, model_error_sample)
from .resampling import (cumulative_weights, search_cumulative,
    systematic_resample, multinomial_resample)
from .updates import (GaussianInnerSampler, RejectionInnerSampler,
    DegenerateLikelihoodError, DegeneracyWarning, resample_draw_update,
    mixture_update, importance_update, mixture_log_likelihood)
from .diagnostics import (effective_sample_size, ensemble_moments,
    kl_divergence_delta, empirical_operator_distance, default_test_functions,
    grid_reference)
