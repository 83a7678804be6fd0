# coding: utf-8

""" Reading and writing traces, matrices and manifests. """

from __future__ import division, print_function

__all__ = ["write_table", "write_matrix", "read_matrix", "write_matrix_csv",
    "write_manifest", "read_manifest"]

import logging
import os

import numpy as np
from astropy.table import Table

logger = logging.getLogger("moderr")

# Dense binary matrices: four little-endian int64 words (magic, rows, cols,
# version) followed by the row-major float64 entries.
MATRIX_MAGIC = 0x4D4F4445
MATRIX_VERSION = 1

FLOAT_FORMAT = "%.17g"


def write_table(table, filename, overwrite=True):
    """
    Write a table to CSV with 17 significant digits for floating point
    columns.

    :param table:
        The table to write.

    :type table:
        :class:`astropy.table.Table` or dict of columns

    :param filename:
        The output path.

    :type filename:
        str
    """

    if not isinstance(table, Table):
        table = Table(table)

    formats = dict([(name, FLOAT_FORMAT) for name in table.colnames \
        if table[name].dtype.kind == "f"])
    table.write(filename, format="ascii.csv", formats=formats,
        overwrite=overwrite)
    logger.debug("Saved table with {0} rows to {1}".format(len(table), filename))
    return None


def write_matrix(filename, matrix):
    """ Write a dense matrix in the binary matrix format. """

    matrix = np.atleast_2d(np.asarray(matrix, dtype="<f8"))
    if matrix.ndim != 2:
        raise ValueError("only two-dimensional arrays can be written")

    header = np.array([MATRIX_MAGIC, matrix.shape[0], matrix.shape[1],
        MATRIX_VERSION], dtype="<i8")
    with open(filename, "wb") as fp:
        fp.write(header.tobytes())
        fp.write(np.ascontiguousarray(matrix).tobytes())
    return None


def read_matrix(filename):
    """ Read a dense matrix written by :func:`write_matrix`. """

    with open(filename, "rb") as fp:
        header = np.frombuffer(fp.read(32), dtype="<i8")
        if header.size != 4 or header[0] != MATRIX_MAGIC:
            raise IOError("{} is not a dense matrix file".format(filename))
        if header[3] != MATRIX_VERSION:
            raise IOError("unsupported matrix file version {0} in {1}".format(
                header[3], filename))
        rows, cols = int(header[1]), int(header[2])
        data = np.frombuffer(fp.read(), dtype="<f8")

    if data.size != rows * cols:
        raise IOError("truncated matrix file {0}: expected {1} entries, found "
            "{2}".format(filename, rows * cols, data.size))
    return data.reshape(rows, cols).copy()


def write_matrix_csv(filename, matrix):
    np.savetxt(filename, np.atleast_2d(matrix), fmt=FLOAT_FORMAT, delimiter=",")


def write_manifest(filename, items):
    """
    Write a plain-text manifest with one ``key = value`` line per item, sorted
    by key.
    """

    with open(filename, "w") as fp:
        for key in sorted(items.keys()):
            value = items[key]
            if isinstance(value, float):
                value = repr(value)
            fp.write("{0} = {1}\n".format(key, value))
    return None


def read_manifest(filename):
    items = {}
    with open(filename, "r") as fp:
        for line in fp:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            items[key.strip()] = value.strip()
    return items


def ensure_directory(path):
    if not os.path.exists(path):
        os.makedirs(path)
    return path
