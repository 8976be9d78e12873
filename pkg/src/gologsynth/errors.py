"""Exception types shared across the toolkit."""

from __future__ import annotations


class SynthError(Exception):
    """Base class for all toolkit errors."""


# --- world model / action theory ---

class UndeclaredAction(SynthError):
    pass


class UndeclaredFluent(SynthError):
    pass


class ArityMismatch(SynthError):
    pass


# --- formula evaluation ---

class UnboundVariable(SynthError):
    pass


class MembershipOutsideActionContext(SynthError):
    pass


# --- program semantics ---

class UnresolvedPickVariable(SynthError):
    pass


# --- mapping rules ---

class NoMappingForAction(SynthError):
    pass


class UnmappedObservableFluent(SynthError):
    pass


# --- quotient / abstraction ---

class BoundExceeded(SynthError):
    """Raised when an arena state's active domain exceeds the configured bound.

    Carries the offending state and the chain of canonical keys that led to it
    so the overflow is reproducible.
    """

    def __init__(self, message: str, state=None, trace=()):
        super().__init__(message)
        self.state = state
        self.trace = tuple(trace)


class BisimulationBroken(SynthError):
    """Internal invariant violation in strategy transfer; indicates a bug."""


# --- model checking / synthesis ---

class NonMonotone(SynthError):
    pass


class UnboundSOVariable(SynthError):
    pass


class NotRealizable(SynthError):
    pass


# --- controller execution ---

class IllegalTargetMove(SynthError):
    pass


class NotInWinningRelation(SynthError):
    pass


# --- frontend ---

class ProblemSyntaxError(SynthError):
    """Parse or validation failure; collects every error found, not just the first."""

    def __init__(self, issues):
        self.issues = tuple(issues)
        super().__init__("\n".join(str(i) for i in self.issues))


class FreeVariableWarning(UserWarning):
    """A precondition or observation formula used an undeclared free variable;
    it is read as existentially quantified."""
