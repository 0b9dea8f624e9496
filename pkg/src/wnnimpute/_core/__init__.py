"""Batch distance and voting kernels.

The compiled extension is used when it imports; otherwise the numpy
implementation takes over. Set ``WNNIMPUTE_PURE_PYTHON=1`` to force the
fallback.
"""
import os

import numpy as np

from . import _numpy

GAUSSIAN = _numpy.GAUSSIAN
TRIANGULAR = _numpy.TRIANGULAR

_fast = None
if os.environ.get("WNNIMPUTE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _cy as _fast
    except ImportError:  # extension not built
        _fast = None

BACKEND = "cython" if _fast is not None else "numpy"


def backend_module(name=None):
    """Return the kernel module for ``name`` ('cython', 'numpy' or the default)."""
    if name is None:
        name = BACKEND
    if name == "numpy":
        return _numpy
    if name == "cython":
        if _fast is None:
            raise ImportError("compiled kernels are not available")
        return _fast
    raise ValueError(f"unknown backend {name!r}")


def _prep(codes, rows, attrs):
    return (np.ascontiguousarray(codes, dtype=np.int32),
            np.ascontiguousarray(rows, dtype=np.int64),
            np.ascontiguousarray(attrs, dtype=np.int64))


def catsel_sums(codes, weights, rows, attrs, backend=None):
    codes, rows, attrs = _prep(codes, rows, attrs)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    return backend_module(backend).catsel_sums(codes, weights, rows, attrs)


def dummy_sums(dummies, col_attr, codes, weights, rows, attrs, backend=None):
    codes, rows, attrs = _prep(codes, rows, attrs)
    return backend_module(backend).dummy_sums(
        np.ascontiguousarray(dummies, dtype=np.float64),
        np.ascontiguousarray(col_attr, dtype=np.int64),
        codes,
        np.ascontiguousarray(weights, dtype=np.float64),
        rows, attrs,
    )


def kernel_vote(dist, values, cols, n_classes, lam, kernel, backend=None):
    return backend_module(backend).kernel_vote(
        np.ascontiguousarray(dist, dtype=np.float64),
        np.ascontiguousarray(values, dtype=np.int32),
        np.ascontiguousarray(cols, dtype=np.int64),
        int(n_classes), float(lam), int(kernel),
    )
