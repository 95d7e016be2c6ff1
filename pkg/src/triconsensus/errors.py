"""Exceptions raised by computations that fail for numerical (not usage) reasons."""

from __future__ import annotations


class ConsensusError(Exception):
    """Base class for computation failures (CLI exit status 1)."""


class DivergenceError(ConsensusError):
    """The iteration does not contract: gamma >= 1, or a run blew up."""


class EigensolverError(ConsensusError):
    """The symmetric eigensolver failed or produced an out-of-bound residual."""


class InconclusiveError(ConsensusError):
    """A stability probe could not decide within the horizon it was given."""
