"""Synthetic generator tests: validation, determinism, per-kind structure."""

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from nvsr.errors import ConfigError
from nvsr.synth import KINDS, make_synthetic_video


def high_freq_fraction(frame):
    """Share of non-DC spectral energy above half Nyquist, by direct FFT."""
    data = frame.data.astype(np.float64)
    fy = np.fft.fftfreq(data.shape[1])[:, None]
    fx = np.fft.fftfreq(data.shape[2])[None, :]
    above = np.maximum(np.abs(fy), np.abs(fx)) > 0.25
    total = high = 0.0
    for c in range(3):
        spec = np.abs(np.fft.fft2(data[c])) ** 2
        spec[0, 0] = 0.0
        total += spec.sum()
        high += spec[above].sum()
    return high / total


class TestValidation:
    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            make_synthetic_video("sliding-window", 2, 64, 64, 0)

    def test_frame_count(self):
        with pytest.raises(ConfigError):
            make_synthetic_video("moving-checker", 0, 64, 64, 0)

    @pytest.mark.parametrize("hw", [(60, 64), (64, 60), (0, 64), (16, 8)])
    def test_dims_must_be_multiples_of_16(self, hw):
        with pytest.raises(ConfigError):
            make_synthetic_video("moving-checker", 2, hw[0], hw[1], 0)

    def test_checker_cell_bounds(self):
        with pytest.raises(ConfigError):
            make_synthetic_video("moving-checker", 2, 32, 32, 0, cell=0)
        with pytest.raises(ConfigError):
            make_synthetic_video("moving-checker", 2, 32, 32, 0, cell=33)


class TestDeterminism:
    @pytest.mark.parametrize("kind", KINDS)
    def test_same_seed_same_clip(self, kind):
        a = make_synthetic_video(kind, 3, 32, 48, seed=9)
        b = make_synthetic_video(kind, 3, 32, 48, seed=9)
        assert len(a) == 3 and a.height == 32 and a.width == 48
        for fa, fb in zip(a, b):
            assert_array_equal(fa.data, fb.data)

    @pytest.mark.parametrize("kind", KINDS)
    def test_different_seeds_differ(self, kind):
        a = make_synthetic_video(kind, 1, 32, 48, seed=0)
        b = make_synthetic_video(kind, 1, 32, 48, seed=1)
        assert not np.array_equal(a[0].data, b[0].data)


class TestMovingChecker:
    def test_frames_are_rolled_copies(self):
        clip = make_synthetic_video("moving-checker", 4, 48, 64, seed=3, velocity=(2, 5))
        for k in range(1, 4):
            assert_array_equal(
                clip[k].data, np.roll(clip[0].data, (2 * k, 5 * k), axis=(1, 2))
            )

    def test_two_flat_colors(self):
        clip = make_synthetic_video("moving-checker", 1, 32, 32, seed=7, cell=8)
        flat = clip[0].data.reshape(3, -1)
        colors = np.unique(flat.T, axis=0)
        assert colors.shape[0] == 2

    def test_cell_blocks_are_constant(self):
        clip = make_synthetic_video("moving-checker", 1, 32, 32, seed=1, cell=8)
        block = clip[0].data[:, :8, :8]
        assert np.all(block == block[:, :1, :1])


class TestTexturedNoise:
    @pytest.mark.parametrize("seed", range(4))
    def test_spectral_energy_above_half_nyquist(self, seed):
        clip = make_synthetic_video("textured-noise", 1, 64, 128, seed)
        assert high_freq_fraction(clip[0]) >= 0.30

    def test_texture_is_static(self):
        """Frame-to-frame change comes from the smooth base: the temporal
        difference carries almost no energy above half Nyquist."""
        clip = make_synthetic_video("textured-noise", 2, 64, 128, seed=2)
        diff = clip[1].data.astype(np.float64) - clip[0].data.astype(np.float64)
        from nvsr.media import Frame

        frac = high_freq_fraction(Frame(np.clip(0.5 + diff, 0.0, 1.0)))
        assert frac < 0.10

    def test_frames_move(self):
        clip = make_synthetic_video("textured-noise", 2, 32, 32, seed=0)
        assert not np.array_equal(clip[0].data, clip[1].data)


class TestGradientDrift:
    def test_smooth(self):
        """Well under the textured-noise floor; the residual high-freq
        energy is spectral leakage from the non-periodic ramp."""
        clip = make_synthetic_video("gradient-drift", 1, 64, 128, seed=0)
        assert high_freq_fraction(clip[0]) < 0.05

    def test_drifts_over_time(self):
        clip = make_synthetic_video("gradient-drift", 3, 32, 32, seed=5)
        assert not np.array_equal(clip[0].data, clip[1].data)
        assert not np.array_equal(clip[1].data, clip[2].data)
