"""Typed error hierarchy shared by every module."""


class NmlError(Exception):
    """Base class for every domain error raised by this package."""


class BadMagic(NmlError):
    """File does not start with the expected magic bytes."""


class UnsupportedVersion(NmlError):
    """File carries a format version this build cannot read."""


class LengthMismatch(NmlError):
    """Declared counts disagree with the actual payload size."""


class InvariantViolation(NmlError):
    """A model or dataset invariant does not hold.

    The first argument names the violated invariant.
    """

    def __init__(self, name: str, detail: str = ""):
        self.name = name
        super().__init__(f"{name}: {detail}" if detail else name)


class MalformedTree(InvariantViolation):
    """Decision tree with a cycle, bad child index, or bad leaf encoding."""


class DimensionMismatch(NmlError):
    """Operand dimensions disagree."""


class KTooLarge(NmlError):
    """Requested k exceeds the number of candidates."""


class KTooLargeForChunk(NmlError):
    """Parallel kNN requires k to fit inside one worker's chunk."""


class BadCoreId(NmlError):
    """core_id outside [0, n_cores)."""


class BadFraction(NmlError):
    """Parallel fraction outside [0, 1] or core count below 1."""


class BadArgs(NmlError):
    """Arguments outside an operation's documented domain."""


class EmptyCounters(NmlError):
    """Operation counters hold no ops to compute a ratio over."""
