# coding: utf-8

""" moderr, iterative updating of model-error distributions """

from __future__ import absolute_import

__version__ = "0.1.0"

import logging

logger = logging.getLogger("moderr")
logging.basicConfig(level=logging.INFO,
    format="%(asctime)s %(levelname)s %(message)s")

from . import (utils, io, gaussian, models, particles, errormodels, config,
    experiments)
