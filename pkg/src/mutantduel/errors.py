"""Exception types shared across the package."""

from __future__ import annotations


class MutantDuelError(Exception):
    """Base class for everything raised deliberately by this package."""


class RuleParseError(MutantDuelError):
    def __init__(self, message: str, line: int, col: int) -> None:
        super().__init__(f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col


class AssertionParseError(MutantDuelError):
    def __init__(self, message: str, col: int) -> None:
        super().__init__(f"col {col}: {message}")
        self.col = col


class LayoutError(MutantDuelError):
    """Malformed level: out-of-bounds or overlapping spawns."""


class TerminalStateError(MutantDuelError):
    """step() called on a state whose game is already over."""


class ScopeError(MutantDuelError):
    """Assertion scope indices do not fit the trace."""


class TraceFormatError(MutantDuelError):
    """Trace file malformed or inconsistent with its header."""


class StaleMutantError(MutantDuelError):
    """Mutant refers to a statement the script no longer contains."""


class MatchRuleError(MutantDuelError):
    """A match command violated a phase or economy precondition."""

    def __init__(self, code: str, message: str) -> None:
        super().__init__(message)
        self.code = code


class StoreError(MutantDuelError):
    """Missing or corrupt store records."""


class ProtocolError(MutantDuelError):
    """A wire frame or message body that cannot be decoded."""


class HashMismatchError(MutantDuelError):
    """A test or record references a different script than the one supplied."""


class UntrainableTargetError(MutantDuelError):
    """No harvested trace covers the requested target statement."""
