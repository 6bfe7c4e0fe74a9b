"""Exception taxonomy shared by all seamforge modules."""


class SeamForgeError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(SeamForgeError, ValueError):
    """A caller-supplied argument is outside its documented range."""


class DecodeError(SeamForgeError):
    """An encoded image stream could not be parsed."""


class DimensionError(SeamForgeError, ValueError):
    """Image or crop dimensions are incompatible."""


class ChannelError(SeamForgeError, ValueError):
    """Wrong channel count for the requested operation."""


class SeamError(SeamForgeError, ValueError):
    """A seam is malformed or does not fit the target image."""


class ShapeError(SeamForgeError, ValueError):
    """Tensor shapes are incompatible."""


class StateError(SeamForgeError):
    """Missing or corrupt runtime state (forward cache, checkpoint, ...)."""


class DataError(SeamForgeError, ValueError):
    """A dataset violates a precondition (missing class, empty split, ...)."""


class ForgeError(SeamForgeError):
    """Dataset generation produced no usable output."""


class DegenerateDataError(SeamForgeError, ValueError):
    """Input carries no variance to project."""
