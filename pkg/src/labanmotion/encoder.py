"""Quantize key poses into Labanotation symbols and assemble scores.

Directions are measured in the body frame: elevation against the up axis,
azimuth from forward toward left. The sphere is partitioned into eight
45-degree azimuth sectors by three levels, plus straight-up/straight-down
caps, so every unit vector maps to exactly one of the 26 limb symbols.

Band boundaries (degrees):
    elevation  [67.5,  90]  Place High
               [22.5, 67.5) High
              (-22.5, 22.5) Middle
              (-67.5,-22.5] Low
              [-90, -67.5]  Place Low
    azimuth    [center - 22.5, center + 22.5) per sector, lower-closed
"""

from __future__ import annotations

import math

import numpy as np

from .errors import BadInput, DegeneratePose, NoKeyFrames
from .keyframe import KeyFrameSet
from .laban import Cell, Direction, LabanColumn, LabanScore, LabanSymbol, Level
from .skeleton import PARENT, BodyFrame, JointName, SkeletonFrame, SkeletonSequence, body_frame

# Sector order is counterclockwise from forward (+azimuth toward left).
AZIMUTH_SECTORS: tuple[Direction, ...] = (
    Direction.Forward,
    Direction.LeftForward,
    Direction.Left,
    Direction.LeftBackward,
    Direction.Backward,
    Direction.RightBackward,
    Direction.Right,
    Direction.RightForward,
)

SECTOR_CENTER_DEG: dict[Direction, float] = {
    Direction.Forward: 0.0,
    Direction.LeftForward: 45.0,
    Direction.Left: 90.0,
    Direction.LeftBackward: 135.0,
    Direction.Backward: 180.0,
    Direction.RightBackward: -135.0,
    Direction.Right: -90.0,
    Direction.RightForward: -45.0,
}

LEVEL_ELEVATION_DEG: dict[Level, float] = {
    Level.High: 45.0,
    Level.Middle: 0.0,
    Level.Low: -45.0,
}

# Column name -> distal joint whose parent-relative segment is digitized.
# Whole-arm columns use the forearm segment (wrist relative to elbow); split
# mode exposes upper arm and forearm separately.
COLUMN_DISTAL: dict[str, JointName] = {
    "LeftArm": JointName.WristLeft,
    "RightArm": JointName.WristRight,
    "LeftUpperArm": JointName.ElbowLeft,
    "RightUpperArm": JointName.ElbowRight,
    "LeftForearm": JointName.WristLeft,
    "RightForearm": JointName.WristRight,
    "Head": JointName.Head,
}

ARM_COLUMNS: tuple[str, ...] = ("LeftArm", "RightArm", "Head")
SPLIT_COLUMNS: tuple[str, ...] = (
    "LeftUpperArm",
    "LeftForearm",
    "RightUpperArm",
    "RightForearm",
    "Head",
)


def columns_for_mode(mode: str) -> tuple[str, ...]:
    if mode == "arm":
        return ARM_COLUMNS
    if mode == "split":
        return SPLIT_COLUMNS
    raise ValueError(f"unknown columns mode: {mode!r}")


def segment_direction(frame: SkeletonFrame, distal: JointName, bf: BodyFrame | None = None) -> np.ndarray:
    """Unit direction of the distal joint relative to its parent, expressed
    as (forward, left, up) components of the frame's body frame."""
    parent = PARENT[distal]
    if parent is None:
        raise DegeneratePose(f"{distal.value} has no parent")
    d = frame.positions[distal] - frame.positions[parent]
    norm = float(np.linalg.norm(d))
    if norm < 1e-9:
        raise DegeneratePose(f"zero-length segment at {distal.value}")
    bf = bf or body_frame(frame)
    return bf.to_body(d / norm)


def classify_elevation(elevation_deg: float) -> LabanSymbol | Level:
    """Band of an elevation angle: a Place symbol in the polar caps, else the
    level. Caps are closed at 67.5, High/Low own their 22.5 boundaries."""
    if elevation_deg >= 67.5:
        return LabanSymbol(Direction.Place, Level.High)
    if elevation_deg <= -67.5:
        return LabanSymbol(Direction.Place, Level.Low)
    if elevation_deg >= 22.5:
        return Level.High
    if elevation_deg <= -22.5:
        return Level.Low
    return Level.Middle


def classify_azimuth(azimuth_deg: float) -> Direction:
    """Sector of an azimuth angle; sectors are closed at their lower edge."""
    sector = int(math.floor((azimuth_deg + 22.5) / 45.0)) % 8
    return AZIMUTH_SECTORS[sector]


def digitize(v: np.ndarray) -> LabanSymbol:
    """Map a unit body-frame direction to its Labanotation symbol."""
    v = np.asarray(v, dtype=float)
    norm = float(np.linalg.norm(v))
    if abs(norm - 1.0) > 1e-6:
        raise BadInput(f"expected a unit vector, |v| = {norm}")
    band = classify_elevation(math.degrees(math.asin(max(-1.0, min(1.0, float(v[2]))))))
    if isinstance(band, LabanSymbol):
        return band
    azimuth = math.degrees(math.atan2(float(v[1]), float(v[0])))
    return LabanSymbol(classify_azimuth(azimuth), band)


def encode_pose(frame: SkeletonFrame, columns: tuple[str, ...] = ARM_COLUMNS) -> dict[str, LabanSymbol]:
    """Symbols for one frame, per column."""
    bf = body_frame(frame)
    out: dict[str, LabanSymbol] = {}
    for column in columns:
        try:
            out[column] = digitize(segment_direction(frame, COLUMN_DISTAL[column], bf))
        except DegeneratePose as exc:
            raise DegeneratePose(f"column {column}: {exc}") from exc
    return out


def encode_sequence(
    seq: SkeletonSequence,
    kfs: KeyFrameSet,
    columns: tuple[str, ...] = ARM_COLUMNS,
) -> LabanScore:
    """Build a score with one cell per column per merged key frame.

    Cell k covers (t_{k-1}, t_k] with the symbol of the pose at key frame k;
    the first cell starts at 0. Consecutive cells with identical symbols are
    coalesced. A key frame at t = 0 would yield an empty interval and is
    skipped.
    """
    ts = seq.timestamps()
    merged = [i for i in kfs.merged if ts[i] > 0.0]
    if not merged:
        raise NoKeyFrames("no merged key frames to encode")
    # microsecond quantization keeps cell arithmetic consistent with the
    # score file format's 6-decimal times
    key_times = [round(float(ts[i]), 6) for i in merged]
    key_symbols = [encode_pose(seq.frames[i], columns) for i in merged]

    laban_columns = []
    for column in columns:
        cells: list[Cell] = []
        prev_t = 0.0
        for t, symbols in zip(key_times, key_symbols):
            symbol = symbols[column]
            if cells and cells[-1].symbol == symbol:
                last = cells[-1]
                cells[-1] = Cell(symbol, last.start, t - last.start)
            else:
                cells.append(Cell(symbol, prev_t, t - prev_t))
            prev_t = t
        laban_columns.append(LabanColumn(name=column, cells=tuple(cells)))

    rate = seq.sample_rate
    meta = (("sample_rate", "" if rate is None else f"{rate:g}"),)
    return LabanScore(columns=tuple(laban_columns), total_duration=key_times[-1], meta=meta)
