# coding: utf-8

""" Forward model pairs and priors. """

from .base import ForwardModelPair, LinearForwardModelPair, SolverBreakdownError
from .poisson1d import Poisson1DConfig, Poisson1DPair, poisson1d_pair
from .darcy2d import (Darcy2DConfig, Darcy2DPair, DarcySolver, darcy2d_pair,
    darcy2d_solve, darcy2d_observe, darcy2d_linearize, two_bump_field)
from .priors import brownian_prior, graph_laplacian, whittle_matern_prior
from .truth import truth_and_data
