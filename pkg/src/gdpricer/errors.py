"""Exception types shared across the engine."""


class EngineError(Exception):
    """Base class for all engine errors."""


class ValidationError(EngineError):
    """One or more scenario/input validation failures.

    Carries a list of (json_pointer, message) pairs so callers can report
    every failure at once.
    """

    def __init__(self, failures):
        if isinstance(failures, str):
            failures = [("", failures)]
        self.failures = list(failures)
        super().__init__("; ".join(f"{ptr or '/'}: {msg}" for ptr, msg in self.failures))


class ExprSyntaxError(EngineError):
    """Parse failure with byte offset and the set of expected tokens."""

    def __init__(self, offset, expected, found=""):
        self.offset = offset
        self.expected = sorted(expected)
        self.found = found
        super().__init__(
            f"syntax error at offset {offset}: expected {', '.join(self.expected)}"
            + (f", found {found!r}" if found else "")
        )


class ExprDomainError(EngineError):
    """Expression evaluated outside its effective domain (e.g. sqrt of a negative)."""


class NotReplicable(EngineError):
    """Payoff is not in the span of the basic securities."""


class NotPolyhedral(EngineError):
    """Operation needs a finite cone description that this acceptance set lacks."""


class DimensionTooLarge(EngineError):
    """Cone enumeration requested beyond the supported state-space size."""


class PointednessFailed(EngineError):
    """The generated acceptance cone contains a line; strict deflators cannot exist."""


class HypothesesNotMet(EngineError):
    """A dual characterization was invoked outside its theorem hypotheses."""


class NotTwoSidedlyAttainable(EngineError):
    """Payoff is not attainable in both directions (X and -X in the market)."""


class InternalInconsistency(EngineError):
    """Primal and dual pipelines disagree beyond tolerance."""


class ConvexityWarning(EngineError):
    """Sampled midpoint-convexity violation in a scripted expression."""


class BoxTooSmall(EngineError):
    """Cutting-plane localization box pinned the optimum even after expansion."""
