"""Exception hierarchy and process exit codes.

Exit codes are part of the CLI contract: 0 success, 1 input error,
2 oracle unavailable, 3 statistical-input error.
"""

from __future__ import annotations

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_ORACLE_UNAVAILABLE = 2
EXIT_STATISTICAL_ERROR = 3


class SofixError(Exception):
    """Base class for all package errors."""

    exit_code = EXIT_INPUT_ERROR


class IngestError(SofixError):
    """Malformed or inconsistent input dump data."""

    exit_code = EXIT_INPUT_ERROR


class UnresolvedParentError(IngestError):
    """An answer references a question that is not in the dump.

    Callers skip the record and count it; this is not fatal for a run.
    """


class InputError(SofixError):
    """Bad user-supplied arguments or files."""

    exit_code = EXIT_INPUT_ERROR


class ContractError(SofixError):
    """A documented precondition was violated by the caller."""

    exit_code = EXIT_INPUT_ERROR


class OracleUnavailableError(SofixError):
    """The interpreter-oracle worker cannot be started or keeps dying."""

    exit_code = EXIT_ORACLE_UNAVAILABLE


class TokenizeError(SofixError):
    """The worker could not tokenize the submitted source."""

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        super().__init__(message)
        self.line = line
        self.col = col


class StatisticalInputError(SofixError):
    """Invalid input to a statistical routine (arity mismatch, bad probabilities)."""

    exit_code = EXIT_STATISTICAL_ERROR


class NumericalError(SofixError):
    """A numerical routine failed to converge within its iteration cap."""

    exit_code = EXIT_STATISTICAL_ERROR


class NoCandidateError(SofixError):
    """A replacement mutation has no vocabulary entry that differs from the original."""
