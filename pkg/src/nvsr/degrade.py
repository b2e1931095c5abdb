"""Degradation pipeline: blur then color, used to manufacture SR inputs.

The intent is to mimic what a small implicit decoder does to a frame:
soften detail and drift colors slightly.  Both stages short-circuit on
identity parameters so the identity composition is bit-exact.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractError
from .media import Frame

# BT.601 luminance weights used for the saturation lerp.
_LUMA = np.array([0.299, 0.587, 0.114], dtype=np.float64)


@dataclass(frozen=True)
class DegradationParams:
    """One sampled degradation: blur strength plus per-channel color affine."""

    kernel_size: int
    sigma: float
    saturation: float
    gains: tuple
    biases: tuple

    def __post_init__(self):
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise ContractError(f"kernel_size must be odd and >= 1, got {self.kernel_size}")
        if self.sigma < 0:
            raise ContractError(f"sigma must be >= 0, got {self.sigma}")
        if len(self.gains) != 3 or len(self.biases) != 3:
            raise ContractError("gains and biases are per-channel triples")
        if any(g <= 0 for g in self.gains):
            raise ContractError(f"gains must be positive, got {self.gains}")


@dataclass(frozen=True)
class DegradationRanges:
    """Sampling ranges; defaults sized for mild, NeRV-like softening."""

    kernel_sizes: tuple = (3, 5)
    sigma: tuple = (0.2, 1.5)
    saturation: tuple = (0.8, 1.2)
    gain: tuple = (0.9, 1.1)
    bias: tuple = (-0.05, 0.05)


def gaussian_taps(kernel_size, sigma):
    """Normalized 1-d Gaussian sampled at integer offsets."""
    r = kernel_size // 2
    x = np.arange(-r, r + 1, dtype=np.float64)
    taps = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return taps / taps.sum()


def gaussian_blur(frame, kernel_size, sigma):
    """Separable Gaussian with mirrored edges; sigma = 0 is the identity."""
    if kernel_size < 1 or kernel_size % 2 == 0:
        raise ContractError(f"kernel_size must be odd and >= 1, got {kernel_size}")
    if sigma < 0:
        raise ContractError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0.0 or kernel_size == 1:
        return frame
    taps = gaussian_taps(kernel_size, sigma)
    r = kernel_size // 2
    arr = frame.data.astype(np.float64)
    h, w = arr.shape[1], arr.shape[2]
    padded = np.pad(arr, ((0, 0), (r, r), (0, 0)), mode="symmetric")
    arr = sum(taps[i] * padded[:, i : i + h, :] for i in range(kernel_size))
    padded = np.pad(arr, ((0, 0), (0, 0), (r, r)), mode="symmetric")
    arr = sum(taps[i] * padded[:, :, i : i + w] for i in range(kernel_size))
    return Frame(np.clip(arr, 0.0, 1.0).astype(np.float32))


def color_transform(frame, params):
    """Lerp toward luminance by (1 - s), then per-channel gain*v + bias, clamp."""
    s = params.saturation
    gains = np.asarray(params.gains, dtype=np.float64).reshape(3, 1, 1)
    biases = np.asarray(params.biases, dtype=np.float64).reshape(3, 1, 1)
    if s == 1.0 and (gains == 1.0).all() and (biases == 0.0).all():
        return frame
    arr = frame.data.astype(np.float64)
    if s != 1.0:
        lum = np.tensordot(_LUMA, arr, axes=([0], [0]))[None]
        arr = lum + s * (arr - lum)
    arr = gains * arr + biases
    return Frame(np.clip(arr, 0.0, 1.0).astype(np.float32))


def degrade(frame, params):
    """Blur, then color; the composition order is part of the contract."""
    return color_transform(gaussian_blur(frame, params.kernel_size, params.sigma), params)


def _check_span(name, lo, hi):
    if not lo <= hi:
        raise ConfigError(f"degradation range {name} is empty: [{lo}, {hi}]")


def sample_params(rng, ranges=DegradationRanges()):
    """Uniform draw from the ranges; draw order is fixed for reproducibility."""
    if not ranges.kernel_sizes:
        raise ConfigError("kernel_sizes must be a nonempty set of odd ints")
    for k in ranges.kernel_sizes:
        if k < 1 or k % 2 == 0:
            raise ConfigError(f"kernel sizes must be odd and >= 1, got {k}")
    _check_span("sigma", *ranges.sigma)
    _check_span("saturation", *ranges.saturation)
    _check_span("gain", *ranges.gain)
    _check_span("bias", *ranges.bias)
    kernel = int(rng.choice(np.asarray(ranges.kernel_sizes)))
    sigma = float(rng.uniform(*ranges.sigma))
    saturation = float(rng.uniform(*ranges.saturation))
    gains = tuple(float(g) for g in rng.uniform(*ranges.gain, size=3))
    biases = tuple(float(b) for b in rng.uniform(*ranges.bias, size=3))
    return DegradationParams(kernel, sigma, saturation, gains, biases)


IDENTITY_PARAMS = DegradationParams(3, 0.0, 1.0, (1.0, 1.0, 1.0), (0.0, 0.0, 0.0))
