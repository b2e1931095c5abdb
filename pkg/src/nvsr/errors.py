"""Exception types shared across the package."""


class NvsrError(Exception):
    """Base class for all package errors."""


class InvalidShapeError(NvsrError, ValueError):
    """Tensor/array shapes violate an operation's contract."""


class ContractError(NvsrError, ValueError):
    """An operation precondition was violated."""


class ConfigError(NvsrError, ValueError):
    """Invalid configuration value, key, or combination."""


class DecodeError(NvsrError, ValueError):
    """A file could not be decoded.

    ``offset`` is the byte offset at which decoding failed, when
    determinable (always exact for the NVSR raw container).
    """

    def __init__(self, message, path=None, offset=None):
        detail = message
        if path is not None:
            detail = f"{path}: {detail}"
        if offset is not None:
            detail = f"{detail} (byte offset {offset})"
        super().__init__(detail)
        self.path = path
        self.offset = offset


class UnsupportedFormatError(NvsrError, ValueError):
    """File is well-formed but in a format this package does not handle."""


class InvalidClipError(NvsrError, ValueError):
    """Frames do not form a valid video clip."""


class InvalidCropError(NvsrError, ValueError):
    """Crop target exceeds the source frame."""


class InfeasibleBudgetError(NvsrError, ValueError):
    """No architecture width satisfies the parameter budget."""
