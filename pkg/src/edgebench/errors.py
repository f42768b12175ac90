"""Exception types shared across the package."""


class ImageError(Exception):
    """Base class for errors raised while handling image data."""


class UnsupportedFormatError(ImageError):
    """File is not one of the supported raster formats (8-bit PNG, PPM, PGM)."""


class CorruptDataError(ImageError):
    """Recognized header, but the payload is damaged or truncated."""


class ChannelMismatchError(ImageError):
    """Operation received an image with the wrong number of channels."""


class DimensionMismatchError(ImageError):
    """Two rasters that must share dimensions do not."""


class OutOfBoundsError(ImageError):
    """Rectangle or coordinate falls outside the image."""


class InvalidParameterError(ValueError):
    """Parameter violates its documented range or structure."""


class IncompleteRecordsError(Exception):
    """Evaluation records do not cover every (crop, pipeline) cell."""
