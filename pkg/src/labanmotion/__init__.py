"""labanmotion: skeleton motion -> Labanotation scores -> robot trajectories.

The pipeline has four stages, each usable on its own:

  skeleton    load/synthesize skeleton sequences, body coordinate frame
  keyframe    per-part motion energy and key-frame detection
  encoder     key poses -> direction/level symbols -> timed score
  robot       score -> joint-space key poses on a described robot
  trajectory  key poses -> sampled trajectories, motion dictionary
"""

from .errors import (
    BadDescriptor,
    BadInput,
    BadSymbol,
    DegeneratePose,
    InsufficientData,
    LabanMotionError,
    MalformedFrame,
    MissingColumn,
    NoKeyFrames,
    OutOfRange,
    ParseError,
    ShapeError,
    TimeOrderError,
    ValidationError,
)

__version__ = "0.1.0"

__all__ = [
    "BadDescriptor",
    "BadInput",
    "BadSymbol",
    "DegeneratePose",
    "InsufficientData",
    "LabanMotionError",
    "MalformedFrame",
    "MissingColumn",
    "NoKeyFrames",
    "OutOfRange",
    "ParseError",
    "ShapeError",
    "TimeOrderError",
    "ValidationError",
    "__version__",
]
