"""Kernel backend selection.

The compiled Cython extension is preferred; the numpy reference kernels
are the fallback.  ``NVSR_BACKEND=python`` forces the fallback.  Both
backends return bit-identical results, so the choice only affects speed
(see benchmarks/bench_backends.py).
"""

import os

import numpy as np

from . import _pyref

if os.environ.get("NVSR_BACKEND", "").lower() in ("python", "numpy", "pyref"):
    _impl = _pyref
else:
    try:
        from . import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pyref

BACKEND = _impl.NAME


def _c(x):
    return np.ascontiguousarray(x)


def im2col(x, kh, kw, stride, pad):
    return _impl.im2col(_c(x), kh, kw, stride, pad)


def col2im(cols, c, h, w, kh, kw, stride, pad):
    return _impl.col2im(_c(cols), c, h, w, kh, kw, stride, pad)


def pixel_shuffle(x, r):
    return _impl.pixel_shuffle(_c(x), r)


def pixel_unshuffle(x, r):
    return _impl.pixel_unshuffle(_c(x), r)


def upsample2x_nearest(x):
    return _impl.upsample2x_nearest(_c(x))


def downsum2x(x):
    return _impl.downsum2x(_c(x))
