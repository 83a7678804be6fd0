# coding: utf-8

""" General utilities """

from __future__ import division, print_function

__all__ = ("NumericalError", "update_recursively", "RngSpec", "parallel_map",
    "symmetrize")

import logging
import multiprocessing
import zlib
from collections.abc import Mapping

import numpy as np

logger = logging.getLogger("moderr")


class NumericalError(Exception):
    """ Base class of the numerical failures of an experiment. """
    pass


def update_recursively(original, new):
    """
    Recursively update a nested dictionary.

    :param original:
        The original nested dictionary to update.

    :type original:
        dict

    :param new:
        The nested dictionary to use to update the original.

    :type new:
        dict

    :returns:
        The updated original dictionary.

    :rtype:
        dict
    """

    for k, v in new.items():
        if isinstance(v, Mapping) \
        and isinstance(original.get(k, None), Mapping):
            r = update_recursively(original.get(k, {}), v)
            original[k] = r
        else:
            original[k] = new[k]
    return original


def symmetrize(matrix):
    """ Return (C + C^T)/2. """
    return 0.5 * (matrix + matrix.T)


def _stream_word(key):
    if isinstance(key, (int, np.integer)):
        if key < 0:
            raise ValueError("stream keys must be non-negative integers or "
                "strings")
        return int(key)
    return zlib.crc32(str(key).encode("utf-8"))


class RngSpec(object):
    """
    A master seed and the rule used to derive independent random streams from
    it.

    Every stream is a PCG64 generator seeded by a
    :class:`numpy.random.SeedSequence` built from the master seed and a spawn
    key. The spawn key is the tuple of stream words for ``prefix + key``,
    where integers map to themselves and strings map to their CRC-32. Streams
    are therefore fixed by their names alone and never by the order in which
    they are requested:

        ("sample_prior", generation)            block of prior draws
        ("resample", generation)                systematic resampling offset
        ("draw", generation)                    block of Gaussian draws
        ("draw", generation, j)                 per-particle inner sampler
        ("importance", generation)              fresh prior draws
        ("truth",), ("noise",)                  synthetic truth and data noise
        ("replicate", r, ...)                   replicated runs
        (name, ...)                             child streams, see child()
    """

    stream_policy = "seedsequence-crc32-v1"

    def __init__(self, master_seed, prefix=()):
        if master_seed is None:
            raise ValueError("a master seed is required")

        master_seed = int(master_seed)
        if not (2**64 > master_seed >= 0):
            raise ValueError("master seed must be a 64-bit unsigned integer")

        self.master_seed = master_seed
        self.prefix = tuple(prefix)
        return None


    def spawn_key(self, *key):
        return tuple(_stream_word(k) for k in self.prefix + tuple(key))


    def generator(self, *key):
        """
        Return the generator for the named stream.

        :param key:
            Stream words (strings or non-negative integers).

        :returns:
            A fresh generator positioned at the start of the stream.

        :rtype:
            :class:`numpy.random.Generator`
        """

        sequence = np.random.SeedSequence(self.master_seed,
            spawn_key=self.spawn_key(*key))
        return np.random.Generator(np.random.PCG64(sequence))


    def particle_generators(self, n, *key):
        return [self.generator(*(key + (j, ))) for j in range(n)]


    def replicate(self, index):
        """ Return the RngSpec of an independent replicate run. """
        return self.child("replicate", int(index))


    def child(self, *key):
        """ Return an RngSpec whose streams are all prefixed by ``key``. """
        return self.__class__(self.master_seed, self.prefix + tuple(key))


    def __eq__(self, other):
        return isinstance(other, RngSpec) \
            and self.master_seed == other.master_seed \
            and self.prefix == other.prefix

    def __ne__(self, other):
        return not self.__eq__(other)

    def __repr__(self):
        return "<{0}.RngSpec seed={1} prefix={2} policy={3}>".format(
            self.__module__, self.master_seed, self.prefix, self.stream_policy)


def _indexed_call(function, item, index):
    return (index, function(item))


def parallel_map(function, items, threads=1):
    """
    Evaluate ``function`` on every item, optionally with a process pool.

    Results are assembled by item index, so the output does not depend on
    the number of workers or on the order in which they finish.

    :param function:
        A picklable callable when ``threads > 1``.

    :param items:
        A sequence of inputs.

    :param threads: [optional]
        The maximum number of worker processes.

    :returns:
        A list of results, one per item.
    """

    items = list(items)
    if threads is None or threads <= 1 or len(items) < 2:
        return [function(item) for item in items]

    results = [None] * len(items)
    processes = []
    pool = multiprocessing.Pool(min(threads, len(items)))
    try:
        for i, item in enumerate(items):
            processes.append(pool.apply_async(_indexed_call,
                args=(function, item, i)))

        for process in processes:
            index, result = process.get()
            results[index] = result
    finally:
        pool.close()
        pool.join()

    return results
