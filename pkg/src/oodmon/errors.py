"""Exception types raised across the toolkit."""


class OodmonError(Exception):
    """Base class for all toolkit errors."""


# -- image files --------------------------------------------------------


class MalformedHeaderError(OodmonError):
    """File is not a parseable binary PPM/PGM."""


class UnsupportedMaxvalError(OodmonError):
    """Header declares a maxval other than 255."""


class TruncatedPixelDataError(OodmonError):
    """File holds fewer raster bytes than the header promises."""


# -- metrics ------------------------------------------------------------


class ShapeMismatchError(OodmonError):
    """Operands have different dimensions."""


class IdenticalImagesError(OodmonError):
    """MSE is zero, so PSNR is unbounded."""


class LabelOutOfRangeError(OodmonError):
    """A label map holds a class id >= num_classes."""


class EmptyMatrixError(OodmonError):
    """Confusion matrix holds no counts."""


# -- monitor ------------------------------------------------------------


class NonMonotonicFrameIdError(OodmonError):
    """A pushed frame_id did not exceed all earlier ones."""


class NonPositiveFrameRateError(OodmonError):
    """Frame rate must be > 0 to define a latency."""


# -- calibration / analysis ---------------------------------------------


class EmptyInputError(OodmonError):
    """An operation received no scores."""


class NoFullWindowError(OodmonError):
    """Fewer scores than one full window of tau."""


class TooFewPointsError(OodmonError):
    """Regression needs at least two points."""


class DegenerateXError(OodmonError):
    """All x values are equal; the regression slope is undefined."""


class MissingMiouError(OodmonError):
    """A record required to carry miou does not."""
