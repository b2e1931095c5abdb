"""Central finite differences for gradient checks, shared across test modules."""

import numpy as np


def numeric_grad(f, x, eps=1e-6):
    """d f / d x by central differences, mutating x in place entry by entry.

    f is a zero-argument callable returning a float and reading x through
    whatever closure it holds; x should be float64 for usable accuracy.
    """
    g = np.zeros_like(x)
    flat = x.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.size):
        old = flat[i]
        flat[i] = old + eps
        hi = f()
        flat[i] = old - eps
        lo = f()
        flat[i] = old
        gf[i] = (hi - lo) / (2.0 * eps)
    return g


def rel_err(a, b):
    """max |a - b| scaled by the magnitude of b (floored at 1)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    denom = max(float(np.abs(b).max()), 1.0)
    return float(np.abs(a - b).max()) / denom
