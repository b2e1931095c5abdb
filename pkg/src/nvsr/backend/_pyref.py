"""Pure-numpy reference kernels.

Fallback used when the compiled extension is unavailable (or forced via
NVSR_BACKEND=python).  Must stay numerically bit-identical to
``nvsr.backend._core``: both sides only rearrange memory; the GEMM that
consumes the columns lives in the caller.
"""

import numpy as np

NAME = "python"


def im2col(x, kh, kw, stride, pad):
    """Patch matrix of ``x`` (B,C,H,W) -> (B, C*kh*kw, L), L = H'*W'.

    Row index is c*kh*kw + i*kw + j, matching weight.reshape(Cout, -1).
    """
    b, c, h, w = x.shape
    if pad:
        x = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    hp = (h + 2 * pad - kh) // stride + 1
    wp = (w + 2 * pad - kw) // stride + 1
    win = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(2, 3))
    win = win[:, :, ::stride, ::stride]
    cols = win.transpose(0, 1, 4, 5, 2, 3).reshape(b, c * kh * kw, hp * wp)
    return np.ascontiguousarray(cols)


def col2im(cols, c, h, w, kh, kw, stride, pad):
    """Scatter-add inverse of :func:`im2col` -> (B, C, H, W)."""
    b = cols.shape[0]
    hp = (h + 2 * pad - kh) // stride + 1
    wp = (w + 2 * pad - kw) // stride + 1
    cols6 = cols.reshape(b, c, kh, kw, hp, wp)
    out = np.zeros((b, c, h + 2 * pad, w + 2 * pad), dtype=cols.dtype)
    for i in range(kh):
        for j in range(kw):
            out[:, :, i : i + stride * hp : stride, j : j + stride * wp : stride] += cols6[
                :, :, i, j
            ]
    if pad:
        out = np.ascontiguousarray(out[:, :, pad : pad + h, pad : pad + w])
    return out


def pixel_shuffle(x, r):
    """(B, C*r*r, H, W) -> (B, C, r*H, r*W); out[...,r*y+dy,r*x+dx] = in[b, c*r*r+dy*r+dx, y, x]."""
    b, c2, h, w = x.shape
    c = c2 // (r * r)
    out = x.reshape(b, c, r, r, h, w).transpose(0, 1, 4, 2, 5, 3)
    return np.ascontiguousarray(out.reshape(b, c, h * r, w * r))


def pixel_unshuffle(x, r):
    """Exact inverse of :func:`pixel_shuffle`."""
    b, c, hr, wr = x.shape
    h, w = hr // r, wr // r
    out = x.reshape(b, c, h, r, w, r).transpose(0, 1, 3, 5, 2, 4)
    return np.ascontiguousarray(out.reshape(b, c * r * r, h, w))


def upsample2x_nearest(x):
    """(B, C, H, W) -> (B, C, 2H, 2W) by pixel repetition."""
    return np.ascontiguousarray(np.repeat(np.repeat(x, 2, axis=2), 2, axis=3))


def downsum2x(x):
    """Adjoint of :func:`upsample2x_nearest`: sum over each 2x2 block.

    Summation order fixed to match the compiled kernel bit for bit.
    """
    a = x[:, :, 0::2, 0::2]
    b = x[:, :, 0::2, 1::2]
    c = x[:, :, 1::2, 0::2]
    d = x[:, :, 1::2, 1::2]
    return ((a + b) + c) + d
