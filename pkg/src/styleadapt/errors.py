"""Exception types raised across the package."""


class StyleAdaptError(Exception):
    pass


class ImageReadError(StyleAdaptError, OSError):
    """File missing, unreadable, or not a decodable image."""


class UnsupportedImageError(StyleAdaptError, ValueError):
    """Decodable image with a bit depth or color model we do not handle."""


class PixelRangeError(StyleAdaptError, ValueError):
    """Samples outside [0, 1] at save time with clamping disabled."""


class TensorFormatError(StyleAdaptError, ValueError):
    pass


class BadMagicError(TensorFormatError):
    pass


class VersionMismatchError(TensorFormatError):
    pass


class TruncatedPayloadError(TensorFormatError):
    pass


class DimensionOverflowError(TensorFormatError):
    pass


class SpectrumError(StyleAdaptError, ValueError):
    """Inverse transform left an imaginary residue above threshold."""


class CorpusError(StyleAdaptError):
    pass


class PlanError(StyleAdaptError, ValueError):
    pass


class StyleBankFormatError(StyleAdaptError, ValueError):
    pass
