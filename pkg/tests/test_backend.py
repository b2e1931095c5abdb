"""Kernel backend tests: numpy reference vs compiled core, selection logic."""

import os
import subprocess
import sys

import numpy as np
import pytest
from numpy.testing import assert_allclose

from nvsr import backend
from nvsr.backend import _pyref

_core = pytest.importorskip("nvsr.backend._core", reason="compiled core not built")

CONV_CASES = [(3, 3, 1, 1), (5, 3, 2, 2), (1, 1, 1, 0), (3, 5, 3, 1), (5, 5, 4, 0)]


def im2col_loops(x, kh, kw, stride, pad):
    """Patch extraction by explicit loops, the oracle for both backends."""
    b, c, h, w = x.shape
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad)))
    hp = (h + 2 * pad - kh) // stride + 1
    wp = (w + 2 * pad - kw) // stride + 1
    cols = np.zeros((b, c * kh * kw, hp * wp), dtype=x.dtype)
    for bi in range(b):
        for oy in range(hp):
            for ox in range(wp):
                patch = xp[bi, :, oy * stride : oy * stride + kh, ox * stride : ox * stride + kw]
                cols[bi, :, oy * wp + ox] = patch.reshape(-1)
    return cols


class TestReferenceKernels:
    @pytest.mark.parametrize("kh,kw,stride,pad", CONV_CASES)
    def test_im2col_matches_loop_oracle(self, kh, kw, stride, pad):
        rng = np.random.default_rng(kh * 100 + kw * 10 + stride + pad)
        x = rng.standard_normal((2, 3, 9, 8)).astype(np.float32)
        got = _pyref.im2col(x, kh, kw, stride, pad)
        want = im2col_loops(x, kh, kw, stride, pad)
        assert got.shape == want.shape
        assert (got == want).all()

    @pytest.mark.parametrize("kh,kw,stride,pad", CONV_CASES)
    def test_col2im_is_adjoint_of_im2col(self, kh, kw, stride, pad):
        """<im2col(x), g> must equal <x, col2im(g)>: scatter is gather transposed."""
        rng = np.random.default_rng(kh * 7 + kw * 5 + stride * 3 + pad)
        x = rng.standard_normal((2, 3, 9, 8))
        cols = _pyref.im2col(x, kh, kw, stride, pad)
        g = rng.standard_normal(cols.shape)
        lhs = float((cols * g).sum())
        rhs = float((x * _pyref.col2im(g, 3, 9, 8, kh, kw, stride, pad)).sum())
        assert_allclose(lhs, rhs, rtol=1e-12)

    def test_col2im_counts_window_coverage(self):
        """col2im(ones) counts how many sliding windows cover each pixel."""
        ones = np.ones((1, 1 * 3 * 3, 4 * 4), dtype=np.float64)
        got = _pyref.col2im(ones, 1, 4, 4, 3, 3, 1, 1)
        want = np.array(
            [[4, 6, 6, 4], [6, 9, 9, 6], [6, 9, 9, 6], [4, 6, 6, 4]], dtype=np.float64
        )
        assert (got[0, 0] == want).all()

    def test_pixel_shuffle_roundtrip(self):
        rng = np.random.default_rng(11)
        x = rng.standard_normal((2, 18, 4, 5)).astype(np.float32)
        assert (_pyref.pixel_unshuffle(_pyref.pixel_shuffle(x, 3), 3) == x).all()

    def test_downsum_is_adjoint_of_upsample(self):
        rng = np.random.default_rng(12)
        x = rng.standard_normal((1, 2, 3, 4))
        y = rng.standard_normal((1, 2, 6, 8))
        lhs = float((_pyref.upsample2x_nearest(x) * y).sum())
        rhs = float((x * _pyref.downsum2x(y)).sum())
        assert_allclose(lhs, rhs, rtol=1e-12)


class TestBackendAgreement:
    """The compiled core must be bit-identical to the numpy reference."""

    @pytest.mark.parametrize("dtype", [np.float32, np.float64])
    @pytest.mark.parametrize("kh,kw,stride,pad", CONV_CASES)
    def test_im2col_col2im_identical(self, dtype, kh, kw, stride, pad):
        rng = np.random.default_rng(99)
        x = rng.standard_normal((2, 4, 9, 7)).astype(dtype)
        a = _pyref.im2col(x, kh, kw, stride, pad)
        b = _core.im2col(x, kh, kw, stride, pad)
        assert a.dtype == b.dtype and a.shape == b.shape
        assert (a == b).all()
        g = rng.standard_normal(a.shape).astype(dtype)
        ga = _pyref.col2im(g, 4, 9, 7, kh, kw, stride, pad)
        gb = _core.col2im(g, 4, 9, 7, kh, kw, stride, pad)
        assert (ga == gb).all()

    @pytest.mark.parametrize("dtype", [np.float32, np.float64])
    def test_shuffle_and_resample_identical(self, dtype):
        rng = np.random.default_rng(100)
        x = rng.standard_normal((2, 12, 4, 6)).astype(dtype)
        assert (_pyref.pixel_shuffle(x, 2) == _core.pixel_shuffle(x, 2)).all()
        y = rng.standard_normal((2, 3, 8, 12)).astype(dtype)
        assert (_pyref.pixel_unshuffle(y, 2) == _core.pixel_unshuffle(y, 2)).all()
        assert (_pyref.upsample2x_nearest(y) == _core.upsample2x_nearest(y)).all()
        assert (_pyref.downsum2x(y) == _core.downsum2x(y)).all()


class TestSelection:
    def test_active_backend_is_compiled_here(self):
        assert backend.BACKEND == "compiled"

    def test_env_var_forces_python_backend(self):
        env = dict(os.environ, NVSR_BACKEND="python")
        out = subprocess.run(
            [sys.executable, "-c", "from nvsr import backend; print(backend.BACKEND)"],
            capture_output=True,
            text=True,
            env=env,
            check=True,
        )
        assert out.stdout.strip() == "python"

    def test_wrappers_accept_noncontiguous_input(self):
        rng = np.random.default_rng(13)
        base = rng.standard_normal((2, 6, 8, 8)).astype(np.float32)
        view = base[:, ::2]  # stride trick: not C-contiguous
        got = backend.pixel_shuffle(view, 1)
        assert (got == np.ascontiguousarray(view)).all()
