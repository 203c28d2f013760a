"""Exception types shared across the package."""


class PnrError(Exception):
    """Base class for errors raised by this package."""


class InsufficientDataError(PnrError):
    """Too few records to perform the requested decomposition or fit."""


class DegenerateDataError(PnrError):
    """Input carries no variance (e.g. identical traces)."""


class EmptyResultError(PnrError):
    """An operation that must yield at least one record yielded none."""


class NoCrossingError(PnrError):
    """The waveform never crosses the requested threshold."""


class SaturationError(PnrError):
    """Count rate at or above the repetition rate; mean photon number undefined."""


class FitFailureError(PnrError):
    """Nonlinear fit did not converge.

    ``last_iterate`` holds the model built from the final iterate, when one
    exists, so callers can inspect how far the fit got.
    """

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class WaveformParseError(PnrError):
    """Malformed waveform file. ``offset`` is the byte position of the problem."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset
