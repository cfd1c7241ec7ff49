"""Exception types shared by the library and mapped to CLI exit codes."""


class MargulisError(Exception):
    """Base class for all library errors."""


class AngleSpecError(MargulisError, ValueError):
    """The angle specification is malformed or violates its invariants."""


class PrecisionBudgetError(MargulisError):
    """A requested computation exceeds the certified precision of the surrogate.

    Raise the guard depth (or the working depth) and retry.
    """


class DecompositionInconsistency(MargulisError):
    """The piece decomposition disagrees with the brute-force envelope."""
