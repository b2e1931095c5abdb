# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
# cython: language_level=3
"""Compiled counterparts of the _pyref kernels.

Single-threaded on purpose: kernel determinism is part of the contract.
No -ffast-math at build either; results must match _pyref bit for bit.
"""

import numpy as np

ctypedef fused real:
    float
    double

NAME = "compiled"


def im2col(real[:, :, :, ::1] x, int kh, int kw, int stride, int pad):
    cdef Py_ssize_t nb = x.shape[0], nc = x.shape[1], h = x.shape[2], w = x.shape[3]
    cdef Py_ssize_t hp = (h + 2 * pad - kh) // stride + 1
    cdef Py_ssize_t wp = (w + 2 * pad - kw) // stride + 1
    cdef Py_ssize_t hpad = h + 2 * pad, wpad = w + 2 * pad
    if real is float:
        out_np = np.empty((nb, nc * kh * kw, hp * wp), dtype=np.float32)
    else:
        out_np = np.empty((nb, nc * kh * kw, hp * wp), dtype=np.float64)
    cdef real[:, :, ::1] out = out_np
    # pad once up front so the gather loops carry no bounds checks
    cdef real[:, :, :, ::1] xp
    cdef Py_ssize_t b, c, i, j, oy, ox, ck, y
    if pad > 0:
        if real is float:
            xp_np = np.zeros((nb, nc, hpad, wpad), dtype=np.float32)
        else:
            xp_np = np.zeros((nb, nc, hpad, wpad), dtype=np.float64)
        xp = xp_np
        for b in range(nb):
            for c in range(nc):
                for y in range(h):
                    for ox in range(w):
                        xp[b, c, y + pad, ox + pad] = x[b, c, y, ox]
    else:
        xp = x
    cdef real *src
    cdef real *dst
    for b in range(nb):
        for c in range(nc):
            for i in range(kh):
                for j in range(kw):
                    ck = (c * kh + i) * kw + j
                    for oy in range(hp):
                        src = &xp[b, c, oy * stride + i, j]
                        dst = &out[b, ck, oy * wp]
                        if stride == 1:
                            for ox in range(wp):
                                dst[ox] = src[ox]
                        else:
                            for ox in range(wp):
                                dst[ox] = src[ox * stride]
    return out_np


def col2im(real[:, :, ::1] cols, int c, int h, int w, int kh, int kw, int stride, int pad):
    cdef Py_ssize_t nb = cols.shape[0]
    cdef Py_ssize_t hp = (h + 2 * pad - kh) // stride + 1
    cdef Py_ssize_t wp = (w + 2 * pad - kw) // stride + 1
    cdef Py_ssize_t hpad = h + 2 * pad, wpad = w + 2 * pad
    if real is float:
        out_np = np.zeros((nb, c, h, w), dtype=np.float32)
        gp_np = np.zeros((nb, c, hpad, wpad), dtype=np.float32) if pad > 0 else out_np
    else:
        out_np = np.zeros((nb, c, h, w), dtype=np.float64)
        gp_np = np.zeros((nb, c, hpad, wpad), dtype=np.float64) if pad > 0 else out_np
    # scatter-add into a padded buffer, then crop: keeps inner loops branch free;
    # addend order per target cell is (i, j) ascending, same as the reference
    cdef real[:, :, :, ::1] gp = gp_np
    cdef Py_ssize_t b, ci, i, j, oy, ox, ck
    cdef real *src
    cdef real *dst
    for b in range(nb):
        for ci in range(c):
            for i in range(kh):
                for j in range(kw):
                    ck = (ci * kh + i) * kw + j
                    for oy in range(hp):
                        dst = &gp[b, ci, oy * stride + i, j]
                        src = &cols[b, ck, oy * wp]
                        if stride == 1:
                            for ox in range(wp):
                                dst[ox] += src[ox]
                        else:
                            for ox in range(wp):
                                dst[ox * stride] += src[ox]
    cdef real[:, :, :, ::1] out
    if pad > 0:
        out = out_np
        for b in range(nb):
            for ci in range(c):
                for oy in range(h):
                    for ox in range(w):
                        out[b, ci, oy, ox] = gp[b, ci, oy + pad, ox + pad]
    return out_np


def pixel_shuffle(real[:, :, :, ::1] x, int r):
    cdef Py_ssize_t nb = x.shape[0], c2 = x.shape[1], h = x.shape[2], w = x.shape[3]
    cdef Py_ssize_t nc = c2 // (r * r)
    if real is float:
        out_np = np.empty((nb, nc, h * r, w * r), dtype=np.float32)
    else:
        out_np = np.empty((nb, nc, h * r, w * r), dtype=np.float64)
    cdef real[:, :, :, ::1] out = out_np
    cdef Py_ssize_t b, c, dy, dx, y, xx
    for b in range(nb):
        for c in range(nc):
            for dy in range(r):
                for dx in range(r):
                    for y in range(h):
                        for xx in range(w):
                            out[b, c, r * y + dy, r * xx + dx] = x[b, c * r * r + dy * r + dx, y, xx]
    return out_np


def pixel_unshuffle(real[:, :, :, ::1] x, int r):
    cdef Py_ssize_t nb = x.shape[0], nc = x.shape[1], hr = x.shape[2], wr = x.shape[3]
    cdef Py_ssize_t h = hr // r, w = wr // r
    if real is float:
        out_np = np.empty((nb, nc * r * r, h, w), dtype=np.float32)
    else:
        out_np = np.empty((nb, nc * r * r, h, w), dtype=np.float64)
    cdef real[:, :, :, ::1] out = out_np
    cdef Py_ssize_t b, c, dy, dx, y, xx
    for b in range(nb):
        for c in range(nc):
            for dy in range(r):
                for dx in range(r):
                    for y in range(h):
                        for xx in range(w):
                            out[b, c * r * r + dy * r + dx, y, xx] = x[b, c, r * y + dy, r * xx + dx]
    return out_np


def upsample2x_nearest(real[:, :, :, ::1] x):
    cdef Py_ssize_t nb = x.shape[0], nc = x.shape[1], h = x.shape[2], w = x.shape[3]
    if real is float:
        out_np = np.empty((nb, nc, 2 * h, 2 * w), dtype=np.float32)
    else:
        out_np = np.empty((nb, nc, 2 * h, 2 * w), dtype=np.float64)
    cdef real[:, :, :, ::1] out = out_np
    cdef Py_ssize_t b, c, y, xx
    cdef real v
    for b in range(nb):
        for c in range(nc):
            for y in range(h):
                for xx in range(w):
                    v = x[b, c, y, xx]
                    out[b, c, 2 * y, 2 * xx] = v
                    out[b, c, 2 * y, 2 * xx + 1] = v
                    out[b, c, 2 * y + 1, 2 * xx] = v
                    out[b, c, 2 * y + 1, 2 * xx + 1] = v
    return out_np


def downsum2x(real[:, :, :, ::1] x):
    cdef Py_ssize_t nb = x.shape[0], nc = x.shape[1], h2 = x.shape[2], w2 = x.shape[3]
    cdef Py_ssize_t h = h2 // 2, w = w2 // 2
    if real is float:
        out_np = np.empty((nb, nc, h, w), dtype=np.float32)
    else:
        out_np = np.empty((nb, nc, h, w), dtype=np.float64)
    cdef real[:, :, :, ::1] out = out_np
    cdef Py_ssize_t b, c, y, xx
    for b in range(nb):
        for c in range(nc):
            for y in range(h):
                for xx in range(w):
                    out[b, c, y, xx] = (
                        x[b, c, 2 * y, 2 * xx]
                        + x[b, c, 2 * y, 2 * xx + 1]
                        + x[b, c, 2 * y + 1, 2 * xx]
                        + x[b, c, 2 * y + 1, 2 * xx + 1]
                    )
    return out_np
