class IqaError(Exception):
    """Base class for toolkit errors"""


class ImageFormatError(IqaError, OSError):
    """Raster could not be decoded or uses an unsupported layout"""


class DimensionMismatchError(IqaError, ValueError):
    """Image shapes disagree or are too small for a kernel/window"""


class ParameterError(IqaError, ValueError):
    """Invalid measure parameter, preset, grid or flag"""


class RangeError(ParameterError):
    """Operation applied to an image with the wrong dynamic range"""


class ManifestError(IqaError, OSError):
    """Dataset manifest, sidecar or ratings file failed validation"""
