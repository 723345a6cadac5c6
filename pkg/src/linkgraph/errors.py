"""Exception types shared across the package."""


class LinkGraphError(Exception):
    """Base class for all linkgraph errors."""


class ParseError(LinkGraphError):
    """Malformed export file; message carries the offending record index."""


class IntegrityError(LinkGraphError):
    """Export violates a structural constraint (e.g. duplicate issue key)."""


class UnknownLinkTypeError(LinkGraphError):
    """A raw link type matched no taxonomy rule and the policy is 'error'."""

    def __init__(self, raw_type: str):
        super().__init__(f"unknown link type: {raw_type!r}")
        self.raw_type = raw_type


class UndefinedValueError(LinkGraphError):
    """A requested statistic has no defined value (e.g. empty denominator)."""


class ExhaustionError(LinkGraphError):
    """Sampling could not produce the requested number of items."""

    def __init__(self, requested: int, produced: int):
        super().__init__(
            f"requested {requested} pairs but only {produced} are satisfiable"
        )
        self.requested = requested
        self.produced = produced


class InsufficientDataError(LinkGraphError):
    """A dataset or training operation is missing a required class."""


class SplitError(LinkGraphError):
    """A split could not meet its configured constraints."""


class ValidationError(LinkGraphError):
    """Invalid configuration or CLI input, detected before any work."""
