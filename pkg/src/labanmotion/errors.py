"""Exception types shared across the pipeline."""

from __future__ import annotations


class LabanMotionError(Exception):
    """Base class for all library errors."""


class MalformedFrame(LabanMotionError):
    """A skeleton frame is missing a joint or carries invalid geometry."""

    def __init__(self, index: int, joint: str, detail: str = ""):
        self.index = index
        self.joint = joint
        msg = f"frame {index}: joint {joint}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class TimeOrderError(LabanMotionError):
    """Timestamps are not strictly increasing."""

    def __init__(self, index: int, detail: str = ""):
        self.index = index
        msg = f"non-increasing timestamp at index {index}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class InsufficientData(LabanMotionError):
    """Too few frames or samples for the requested operation."""


class DegeneratePose(LabanMotionError):
    """Joint geometry too degenerate to define a direction or frame."""


class BadDescriptor(LabanMotionError):
    """Unknown or malformed synthetic-motion descriptor."""


class BadInput(LabanMotionError):
    """Numeric input violates a precondition (e.g. non-unit vector)."""


class BadSymbol(LabanMotionError):
    """A direction/level combination with no limb meaning."""


class ParseError(LabanMotionError):
    """Syntactic or token-level error in an input file."""

    def __init__(self, location: str, detail: str):
        self.location = location
        self.detail = detail
        super().__init__(f"{location}: {detail}")


class ValidationError(LabanMotionError):
    """A structurally parsed object violates semantic rules."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class OutOfRange(LabanMotionError):
    """Query time outside the score's duration."""


class NoKeyFrames(LabanMotionError):
    """Key-frame detection produced nothing to encode."""


class MissingColumn(LabanMotionError):
    """A robot segment's source column never appears in the score."""

    def __init__(self, segment: str, column: str):
        self.segment = segment
        self.column = column
        super().__init__(f"segment {segment}: column {column} never appears in score")


class ShapeError(LabanMotionError):
    """Mismatched sample counts or joint sets."""
