class SidonError(Exception):
    """Base class for every error raised by this project."""


class NeedsMorePrecision(SidonError):
    """An enclosure is too wide to decide a floor or a comparison."""


class PrecisionCapExceeded(SidonError):
    def __init__(self, cap, what="value"):
        super().__init__(f"Could not determine {what} within the precision cap of {cap} bits")
        self.cap = cap
        self.what = what


class RangeEmpty(SidonError):
    """A finite construction has no qualifying prime for the requested size."""


class ResolutionTooCoarse(SidonError):
    """An alpha grid is too coarse to resolve the requested congruence event."""


class InvalidParameter(SidonError, ValueError):
    """A precondition on an argument was violated."""


class SetFileError(SidonError):
    """A set file is unreadable or malformed."""
