"""Exception types shared across the toolkit."""


class SpiError(Exception):
    """Base class for all toolkit errors."""


# --- spectral metrics ---

class DegenerateSpectrumError(SpiError):
    """All singular values are zero; entropy-based metrics are undefined."""


class InsufficientTailError(SpiError):
    """Fewer than three positive singular values available for the tail fit."""


class DivisionDegenerateError(SpiError):
    """Zero eigenvalue met a zero floor; the inverse sum is infinite."""


class IncompatibleMetricsError(SpiError):
    """Metrics computed at different truncation levels cannot be compared."""


# --- propagator chains ---

class ConstructionError(SpiError):
    """Chain configuration cannot be realized; message names the violated condition."""


class DominantPathDegenerateError(SpiError):
    """The rank-1 dominant path has zero norm (some alignment or gain is zero)."""


# --- activation store ---

class RecordValidationError(SpiError):
    """Activation record violates its invariants (shape, finiteness)."""


class SpacFormatError(SpiError):
    """Base class for container-format violations."""


class BadMagicError(SpacFormatError):
    pass


class UnsupportedVersionError(SpacFormatError):
    pass


class TruncatedPayloadError(SpacFormatError):
    pass


class DimensionOverflowError(SpacFormatError):
    pass


class InvalidHeaderError(SpacFormatError):
    pass


class DuplicateRecordError(SpiError):
    """Two files carry the same (identity key, condition); message names both paths."""


# --- analysis pipeline ---

class PairMetricsError(SpiError):
    """Metric computation failed for a record pair; message carries the pair key."""


class InsufficientDepthError(SpiError):
    """Layer-wise curves need at least two distinct layers."""
