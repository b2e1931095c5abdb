"""Neural video super-resolution: implicit video decoders with a learned 2x upscaler.

Small coordinate decoders regress a video from time stamps (or from a
learned per-frame embedding), and a residual super-resolution block lifts
their half-resolution output to full size.  Everything runs on numpy with
an optional compiled kernel core; see ``nvsr.backend``.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    ContractError,
    DecodeError,
    InfeasibleBudgetError,
    InvalidClipError,
    InvalidCropError,
    InvalidShapeError,
    NvsrError,
    UnsupportedFormatError,
)

__all__ = [
    "ConfigError",
    "ContractError",
    "DecodeError",
    "InfeasibleBudgetError",
    "InvalidClipError",
    "InvalidCropError",
    "InvalidShapeError",
    "NvsrError",
    "UnsupportedFormatError",
    "__version__",
]
