"""Synthetic clip generators: deterministic stand-ins for real footage.

Three families, each seeded independently of the others:

- ``moving-checker``: a two-color checkerboard translating at a constant
  per-frame velocity with wraparound, so frame k is exactly frame 0
  rolled by k times the velocity.
- ``textured-noise``: a static per-pixel noise texture riding on a
  smoothly drifting low-frequency color base.  The texture never moves;
  the base does.  Amplitudes are tuned so a large share of each frame's
  spectral energy sits above half the Nyquist frequency.
- ``gradient-drift``: a linear luminance ramp whose orientation rotates
  slowly from frame to frame; the smoothest of the three and the fastest
  to overfit.
"""

import numpy as np

from .errors import ConfigError
from .media import Frame, VideoClip

KINDS = ("moving-checker", "textured-noise", "gradient-drift")

# independent rng streams per family; same seed never aliases across kinds
_KIND_TAG = {"moving-checker": 0xC4E, "textured-noise": 0x7E7, "gradient-drift": 0x6BA}

# clip dims must divide cleanly through every desk stride stack
_DIM_MULTIPLE = 16

_TN_WAVES = 3
_TN_BASE_AMP = 0.24
_TN_TEX_AMP = 0.22


def make_synthetic_video(kind, frames, height, width, seed, velocity=(1, 2), cell=8):
    """Generate a deterministic clip of the given kind and size.

    velocity and cell apply to moving-checker only: velocity is the
    (dy, dx) pixel shift per frame, cell the checker square size.
    """
    if kind not in KINDS:
        raise ConfigError(f"kind must be one of {KINDS}, got {kind!r}")
    if frames < 1:
        raise ConfigError(f"frame count must be >= 1, got {frames}")
    for name, dim in (("height", height), ("width", width)):
        if dim < _DIM_MULTIPLE or dim % _DIM_MULTIPLE:
            raise ConfigError(
                f"{name} must be a positive multiple of {_DIM_MULTIPLE}, got {dim}"
            )
    rng = np.random.default_rng([int(seed), _KIND_TAG[kind]])
    if kind == "moving-checker":
        return _moving_checker(rng, frames, height, width, velocity, cell)
    if kind == "textured-noise":
        return _textured_noise(rng, frames, height, width)
    return _gradient_drift(rng, frames, height, width)


def _moving_checker(rng, frames, height, width, velocity, cell):
    cell = int(cell)
    if cell < 1 or cell > min(height, width):
        raise ConfigError(f"cell must lie in [1, {min(height, width)}], got {cell}")
    vy, vx = (int(v) for v in velocity)
    ys = np.arange(height)[:, None] // cell
    xs = np.arange(width)[None, :] // cell
    mask = ((ys + xs) % 2).astype(np.float32)[None]
    colors = rng.uniform(0.1, 0.9, size=(2, 3)).astype(np.float32)
    base = colors[0].reshape(3, 1, 1) * mask + colors[1].reshape(3, 1, 1) * (1.0 - mask)
    return VideoClip(
        Frame(np.roll(base, (k * vy, k * vx), axis=(1, 2))) for k in range(frames)
    )


def _textured_noise(rng, frames, height, width):
    freqs = rng.uniform(1.0, 3.0, size=_TN_WAVES)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=_TN_WAVES)
    phase = rng.uniform(0.0, 2.0 * np.pi, size=_TN_WAVES)
    omega = rng.uniform(0.15, 0.45, size=_TN_WAVES)
    weight = rng.uniform(0.5, 1.0, size=(_TN_WAVES, 3))
    texture = rng.uniform(-1.0, 1.0, size=(3, height, width))
    y = np.arange(height)[:, None] / height
    x = np.arange(width)[None, :] / width
    norm = weight.sum(axis=0).reshape(3, 1, 1)
    out = []
    for t in range(frames):
        acc = np.zeros((3, height, width))
        for i in range(_TN_WAVES):
            arg = (
                2.0 * np.pi * freqs[i] * (np.cos(theta[i]) * x + np.sin(theta[i]) * y)
                + phase[i]
                + t * omega[i]
            )
            acc += weight[i].reshape(3, 1, 1) * np.sin(arg)[None]
        data = 0.5 + _TN_BASE_AMP * acc / norm + _TN_TEX_AMP * texture
        out.append(Frame(np.clip(data, 0.0, 1.0).astype(np.float32)))
    return VideoClip(out)


def _gradient_drift(rng, frames, height, width):
    theta0 = rng.uniform(0.0, 2.0 * np.pi)
    dtheta = rng.uniform(0.05, 0.15)
    chan_phase = rng.uniform(0.0, 2.0 * np.pi, size=3)
    y = np.arange(height)[:, None] / max(height - 1, 1) - 0.5
    x = np.arange(width)[None, :] / max(width - 1, 1) - 0.5
    out = []
    for t in range(frames):
        th = theta0 + t * dtheta
        ramp = np.cos(th) * x + np.sin(th) * y
        amp = 0.45 * np.cos(chan_phase + 0.1 * t).reshape(3, 1, 1)
        data = 0.5 + amp * ramp[None]
        out.append(Frame(data.astype(np.float32)))
    return VideoClip(out)
