"""Exception types shared across the package; each maps to a CLI exit code."""


class LLCountError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class SpecParseError(LLCountError):
    """Malformed input file (DIMACS, projector spec, events spec, ...)."""

    exit_code = 3

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class HypothesisViolation(LLCountError):
    """A certified-guarantee hypothesis failed at a checked size and force
    was not set."""

    exit_code = 2

    def __init__(self, message, checks=None):
        super().__init__(message)
        self.checks = list(checks) if checks else []


class ResourceCapExceeded(LLCountError):
    """An operation would exceed a configured resource cap."""

    exit_code = 4


class NumericFailure(LLCountError):
    """Nonfinite intermediate value or imaginary residue above tolerance."""

    exit_code = 5
