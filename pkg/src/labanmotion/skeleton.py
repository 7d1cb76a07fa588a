"""Skeleton sequences: loading, validation, resampling, body frame, synthesis.

The skeleton file format is JSON:

    {"sample_rate_hint": 30.0,
     "frames": [{"t": 0.0, "joints": {"WristLeft": [x, y, z], ...}}, ...]}

Coordinates are meters in an arbitrary rigid world frame; all direction
encoding downstream goes through the person-anchored body frame built by
:func:`body_frame`, so the world frame never matters.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    BadDescriptor,
    DegeneratePose,
    InsufficientData,
    MalformedFrame,
    ParseError,
    TimeOrderError,
)


class JointName(str, Enum):
    SpineBase = "SpineBase"
    SpineShoulder = "SpineShoulder"
    Neck = "Neck"
    Head = "Head"
    ShoulderLeft = "ShoulderLeft"
    ShoulderRight = "ShoulderRight"
    ElbowLeft = "ElbowLeft"
    ElbowRight = "ElbowRight"
    WristLeft = "WristLeft"
    WristRight = "WristRight"
    HandLeft = "HandLeft"
    HandRight = "HandRight"


# Fixed parent relation; SpineBase is the root.
PARENT: dict[JointName, JointName | None] = {
    JointName.SpineBase: None,
    JointName.SpineShoulder: JointName.SpineBase,
    JointName.Neck: JointName.SpineShoulder,
    JointName.Head: JointName.Neck,
    JointName.ShoulderLeft: JointName.SpineShoulder,
    JointName.ShoulderRight: JointName.SpineShoulder,
    JointName.ElbowLeft: JointName.ShoulderLeft,
    JointName.ElbowRight: JointName.ShoulderRight,
    JointName.WristLeft: JointName.ElbowLeft,
    JointName.WristRight: JointName.ElbowRight,
    JointName.HandLeft: JointName.WristLeft,
    JointName.HandRight: JointName.WristRight,
}

ALL_JOINTS: tuple[JointName, ...] = tuple(JointName)


@dataclass(eq=False)
class SkeletonFrame:
    """One time-stamped snapshot of all twelve joint positions (meters)."""

    timestamp: float
    positions: dict[JointName, np.ndarray]


@dataclass(eq=False)
class SkeletonSequence:
    """Ordered frames plus the sampling rate once the timing is uniform.

    ``sample_rate`` is None for raw, possibly non-uniform recordings and is
    set by :func:`resample`.
    """

    frames: list[SkeletonFrame]
    sample_rate: float | None = None

    def __len__(self) -> int:
        return len(self.frames)

    def positions_of(self, joint: JointName) -> np.ndarray:
        """(n, 3) array of one joint's positions over time."""
        return np.array([f.positions[joint] for f in self.frames])

    def timestamps(self) -> np.ndarray:
        return np.array([f.timestamp for f in self.frames])


@dataclass(frozen=True)
class BodyFrame:
    """Right-handed person-anchored frame: forward = left x up."""

    origin: np.ndarray
    forward: np.ndarray
    left: np.ndarray
    up: np.ndarray

    def to_body(self, v: np.ndarray) -> np.ndarray:
        """World-frame direction -> (forward, left, up) components."""
        return np.array([self.forward @ v, self.left @ v, self.up @ v])


def validate_frame(frame: SkeletonFrame, index: int) -> None:
    """Raise MalformedFrame unless all joints are present, finite, distinct."""
    for joint in ALL_JOINTS:
        if joint not in frame.positions:
            raise MalformedFrame(index, joint.value, "missing")
        p = frame.positions[joint]
        if p.shape != (3,) or not np.all(np.isfinite(p)):
            raise MalformedFrame(index, joint.value, "non-finite coordinate")
    for joint, parent in PARENT.items():
        if parent is None:
            continue
        d = frame.positions[joint] - frame.positions[parent]
        if float(np.linalg.norm(d)) <= 0.0:
            raise MalformedFrame(index, joint.value, "coincides with parent")


def _frame_from_obj(obj: dict, index: int) -> SkeletonFrame:
    joints = obj.get("joints")
    if not isinstance(joints, dict):
        raise ParseError(f"frames[{index}]", "missing 'joints' object")
    positions: dict[JointName, np.ndarray] = {}
    for joint in ALL_JOINTS:
        if joint.value in joints:
            coords = joints[joint.value]
            try:
                positions[joint] = np.array([float(c) for c in coords], dtype=float)
            except (TypeError, ValueError):
                raise MalformedFrame(index, joint.value, "bad coordinate triple")
    t = obj.get("t")
    if not isinstance(t, (int, float)):
        raise ParseError(f"frames[{index}].t", "missing or non-numeric timestamp")
    frame = SkeletonFrame(timestamp=float(t), positions=positions)
    validate_frame(frame, index)
    return frame


def load_sequence(path: str) -> SkeletonSequence:
    """Load and validate a skeleton sequence file.

    Raises MalformedFrame for missing joints or non-finite coordinates,
    TimeOrderError for non-increasing timestamps, ParseError for bad JSON.
    """
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return parse_sequence(text)


def parse_sequence(text: str) -> SkeletonSequence:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"line {exc.lineno}, column {exc.colno}", exc.msg)
    if not isinstance(obj, dict) or "frames" not in obj:
        raise ParseError("$", "expected object with a 'frames' list")
    frames = [_frame_from_obj(f, i) for i, f in enumerate(obj["frames"])]
    for i in range(1, len(frames)):
        if frames[i].timestamp <= frames[i - 1].timestamp:
            raise TimeOrderError(i)
    hint = obj.get("sample_rate_hint")
    rate = float(hint) if isinstance(hint, (int, float)) else None
    return SkeletonSequence(frames=frames, sample_rate=rate)


def serialize_sequence(seq: SkeletonSequence) -> str:
    """Canonical text form; numbers keep full precision (repr round-trip)."""
    lines = ["{"]
    if seq.sample_rate is None:
        lines.append('  "sample_rate_hint": null,')
    else:
        lines.append(f'  "sample_rate_hint": {float(seq.sample_rate)!r},')
    lines.append('  "frames": [')
    for i, frame in enumerate(seq.frames):
        joints = ", ".join(
            '"%s": [%r, %r, %r]'
            % (j.value, float(frame.positions[j][0]), float(frame.positions[j][1]),
               float(frame.positions[j][2]))
            for j in sorted(frame.positions, key=lambda j: j.value)
        )
        comma = "," if i + 1 < len(seq.frames) else ""
        lines.append(f'    {{"t": {float(frame.timestamp)!r}, "joints": {{{joints}}}}}{comma}')
    lines.append("  ]")
    lines.append("}")
    return "\n".join(lines) + "\n"


def save_sequence(seq: SkeletonSequence, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_sequence(seq))


def resample(seq: SkeletonSequence, rate: float) -> SkeletonSequence:
    """Resample to a uniform grid from the first to the last timestamp.

    Positions are interpolated linearly per coordinate. Idempotent when the
    input is already uniform at the requested rate.
    """
    if rate <= 0:
        raise ValueError("rate must be positive")
    if len(seq.frames) < 2:
        raise InsufficientData("resample needs at least 2 frames")
    ts = seq.timestamps()
    t0, t1 = float(ts[0]), float(ts[-1])
    # microsecond slack: spans quantized to 6 decimals still cover the last
    # original timestamp; interpolation clamps at the ends
    n = int(math.floor((t1 - t0) * rate + 1e-6 * rate + 1e-9)) + 1
    grid = t0 + np.arange(n) / rate
    per_joint = {j: seq.positions_of(j) for j in ALL_JOINTS}
    frames = []
    for t in grid:
        pos = {
            j: np.array([np.interp(t, ts, per_joint[j][:, c]) for c in range(3)])
            for j in ALL_JOINTS
        }
        frames.append(SkeletonFrame(timestamp=float(t), positions=pos))
    return SkeletonSequence(frames=frames, sample_rate=float(rate))


_MIN_SPAN = 1e-6  # meters; below this the pose cannot define a frame


def body_frame(frame: SkeletonFrame) -> BodyFrame:
    """Build the body frame: origin at SpineShoulder, up along the spine,
    left along the shoulder line with the spine component removed."""
    origin = frame.positions[JointName.SpineShoulder]
    spine = origin - frame.positions[JointName.SpineBase]
    spine_len = float(np.linalg.norm(spine))
    if spine_len < _MIN_SPAN:
        raise DegeneratePose("zero spine length")
    up = spine / spine_len
    span = frame.positions[JointName.ShoulderLeft] - frame.positions[JointName.ShoulderRight]
    if float(np.linalg.norm(span)) < _MIN_SPAN:
        raise DegeneratePose("zero shoulder span")
    left_raw = span - (span @ up) * up
    left_len = float(np.linalg.norm(left_raw))
    if left_len < _MIN_SPAN:
        raise DegeneratePose("shoulders parallel to spine")
    left = left_raw / left_len
    forward = np.cross(left, up)
    return BodyFrame(origin=origin, forward=forward, left=left, up=up)


# ---------------------------------------------------------------------------
# Synthetic motion generator
# ---------------------------------------------------------------------------
# Fixed anthropomorphic dimensions (meters).
UPPER_ARM_LEN = 0.30
FOREARM_LEN = 0.27
HAND_LEN = 0.08
_SPINE_LEN = 0.50
_NECK_RISE = 0.06
_HEAD_LEN = 0.17
_HALF_SHOULDER = 0.18

# Canonical standing skeleton in a world frame aligned with the body frame:
# forward = +x, left = +y, up = +z.
_BASE = {
    JointName.SpineBase: np.array([0.0, 0.0, 0.0]),
    JointName.SpineShoulder: np.array([0.0, 0.0, _SPINE_LEN]),
    JointName.Neck: np.array([0.0, 0.0, _SPINE_LEN + _NECK_RISE]),
    JointName.ShoulderLeft: np.array([0.0, _HALF_SHOULDER, _SPINE_LEN]),
    JointName.ShoulderRight: np.array([0.0, -_HALF_SHOULDER, _SPINE_LEN]),
}

_POSE_AZIMUTH = {
    "place": 0.0,
    "forward": 0.0,
    "left_forward": 45.0,
    "left": 90.0,
    "left_backward": 135.0,
    "backward": 180.0,
    "right_backward": -135.0,
    "right": -90.0,
    "right_forward": -45.0,
}
_POSE_ELEVATION = {"high": 45.0, "middle": 0.0, "low": -45.0}

# Move profile: cosine ease-in to cruise speed, constant-velocity cruise,
# abrupt stop at arrival. The ease-in lasts a fixed time (not a fixed
# fraction) so long moves still depart with a readable acceleration, while
# staying gentler than the arrival so the stop is the dominant event.
_EASE_SECONDS = 0.6
_MAX_EASE_FRACTION = 0.75
DEFAULT_MOVE_SECONDS = 0.8
DEFAULT_LEAD_SECONDS = 0.6
# Long arcs take proportionally longer, capping angular velocity; otherwise
# the centripetal acceleration of fast wide sweeps dwarfs every other
# feature of the motion.
_SECONDS_PER_RADIAN = 0.7


def pose_vector(name: str) -> np.ndarray:
    """Unit direction for a pose name like 'forward_middle' or 'place_low'."""
    parts = name.lower().rsplit("_", 1)
    if len(parts) != 2 or parts[0] not in _POSE_AZIMUTH or parts[1] not in _POSE_ELEVATION:
        raise BadDescriptor(f"unknown pose name: {name!r}")
    direction, level = parts
    if direction == "place":
        if level == "middle":
            raise BadDescriptor("pose 'place_middle' has no direction")
        elev = 90.0 if level == "high" else -90.0
        azim = 0.0
    else:
        elev = _POSE_ELEVATION[level]
        azim = _POSE_AZIMUTH[direction]
    th, ph = math.radians(elev), math.radians(azim)
    return np.array([math.cos(th) * math.cos(ph), math.cos(th) * math.sin(ph), math.sin(th)])


def _slerp(a: np.ndarray, b: np.ndarray, s: float) -> np.ndarray:
    dot = float(np.clip(a @ b, -1.0, 1.0))
    if dot > 1.0 - 1e-12:
        return a
    if dot < -1.0 + 1e-9:
        # antipodal: route through a deterministic perpendicular
        perp = np.cross(a, np.array([1.0, 0.0, 0.0]))
        if np.linalg.norm(perp) < 1e-9:
            perp = np.cross(a, np.array([0.0, 1.0, 0.0]))
        perp /= np.linalg.norm(perp)
        if s <= 0.5:
            return _slerp(a, perp, 2.0 * s)
        return _slerp(perp, b, 2.0 * s - 1.0)
    omega = math.acos(dot)
    v = (math.sin((1.0 - s) * omega) * a + math.sin(s * omega) * b) / math.sin(omega)
    return v / np.linalg.norm(v)


def _move_profile(tau: float, seconds: float) -> float:
    """Normalized position along a move: ease-in, cruise, hard stop."""
    e = min(_EASE_SECONDS / seconds, _MAX_EASE_FRACTION)
    total = (2.0 * e / math.pi) + (1.0 - e)
    if tau <= 0.0:
        return 0.0
    if tau >= 1.0:
        return 1.0
    if tau < e:
        s = (2.0 * e / math.pi) * (1.0 - math.cos(math.pi * tau / (2.0 * e)))
    else:
        s = (2.0 * e / math.pi) + (tau - e)
    return s / total


def _frame_for(arm_dirs: dict[str, np.ndarray], head_dir: np.ndarray, t: float) -> SkeletonFrame:
    pos = dict(_BASE)
    pos[JointName.Head] = pos[JointName.Neck] + _HEAD_LEN * head_dir
    for side, shoulder, elbow, wrist, hand in (
        ("left", JointName.ShoulderLeft, JointName.ElbowLeft, JointName.WristLeft, JointName.HandLeft),
        ("right", JointName.ShoulderRight, JointName.ElbowRight, JointName.WristRight, JointName.HandRight),
    ):
        u = arm_dirs[side]
        pos[elbow] = pos[shoulder] + UPPER_ARM_LEN * u
        pos[wrist] = pos[elbow] + FOREARM_LEN * u
        pos[hand] = pos[wrist] + HAND_LEN * u
    return SkeletonFrame(timestamp=t, positions={j: p.copy() for j, p in pos.items()})


def _part_key(part: str) -> str:
    key = part.lower()
    if key not in ("left_arm", "right_arm", "head"):
        raise BadDescriptor(f"unknown part: {part!r}")
    return key


def _arc_angle(a: np.ndarray, b: np.ndarray) -> float:
    return math.acos(max(-1.0, min(1.0, float(a @ b))))


def _segment_plan(descriptor: dict) -> tuple[str, list[tuple[str, float, np.ndarray, np.ndarray]]]:
    """Expand a descriptor into (part, [(kind, seconds, from_dir, to_dir)...])."""
    pattern = descriptor.get("pattern")
    move_floor = float(descriptor.get("move_seconds", DEFAULT_MOVE_SECONDS))

    def move_seconds(a: np.ndarray, b: np.ndarray) -> float:
        return max(move_floor, _SECONDS_PER_RADIAN * _arc_angle(a, b))

    if pattern == "static":
        dur = float(descriptor.get("duration", 2.0))
        if dur <= 0:
            raise BadDescriptor("static duration must be positive")
        down = pose_vector("place_low")
        return "right_arm", [("dwell", dur, down, down)]
    if pattern == "move_hold_move":
        part = _part_key(descriptor.get("part", "right_arm"))
        hold = float(descriptor.get("hold", 0.5))
        if hold <= 0:
            raise BadDescriptor("hold must be positive")
        a = pose_vector(descriptor["from_pose"])
        b = pose_vector(descriptor["to_pose"])
        lead = float(descriptor.get("lead_seconds", DEFAULT_LEAD_SECONDS))
        return part, [("dwell", lead, a, a), ("move", move_seconds(a, b), a, b), ("dwell", hold, b, b)]
    if pattern == "reach_sequence":
        part = _part_key(descriptor.get("part", "right_arm"))
        poses = descriptor.get("poses")
        if not poses or len(poses) < 2:
            raise BadDescriptor("reach_sequence needs at least 2 poses")
        plan: list[tuple[str, float, np.ndarray, np.ndarray]] = []
        prev = None
        for name, dwell in poses:
            u = pose_vector(name)
            if float(dwell) <= 0:
                raise BadDescriptor("dwell times must be positive")
            if prev is not None:
                plan.append(("move", move_seconds(prev, u), prev, u))
            plan.append(("dwell", float(dwell), u, u))
            prev = u
        return part, plan
    raise BadDescriptor(f"unknown pattern: {pattern!r}")


def descriptor_timeline(descriptor: dict) -> list[tuple[str, float, float]]:
    """(kind, start, end) segments the generator will realize, in order.

    Useful for tests and tools that need to know where the dwell plateaus
    and transit segments of a synthetic clip lie.
    """
    _, plan = _segment_plan(descriptor)
    out = []
    t = 0.0
    for kind, seconds, _, _ in plan:
        out.append((kind, t, t + seconds))
        t += seconds
    return out


def synth_motion(descriptor: dict, rate: float = 30.0) -> SkeletonSequence:
    """Generate a deterministic synthetic sequence from a descriptor dict.

    Patterns:
      {"pattern": "static", "duration": s}
      {"pattern": "move_hold_move", "part": p, "from_pose": n, "to_pose": n, "hold": s}
      {"pattern": "reach_sequence", "part": p, "poses": [[name, dwell_s], ...]}

    The moved part travels with a cosine ease-in to constant speed and an
    abrupt stop, so arrivals read as brief stops. Parts not named stay at
    their defaults (arms down, head up).
    """
    if rate <= 0:
        raise BadDescriptor("rate must be positive")
    part, plan = _segment_plan(descriptor)
    total = sum(seconds for _, seconds, _, _ in plan)
    n = int(round(total * rate))
    if n < 1:
        raise BadDescriptor("descriptor spans less than one frame")

    down = pose_vector("place_low")
    up = pose_vector("place_high")
    frames = []
    for i in range(n):
        t = i / rate
        u = plan[-1][3]  # past the last segment: final pose
        acc = 0.0
        for kind, seconds, a, b in plan:
            if t < acc + seconds - 1e-12:
                if kind == "dwell":
                    u = a
                else:
                    u = _slerp(a, b, _move_profile((t - acc) / seconds, seconds))
                break
            acc += seconds
        arm_dirs = {"left": down, "right": down}
        head_dir = up
        if part == "head":
            head_dir = u
        else:
            arm_dirs[part.split("_")[0]] = u
        frames.append(_frame_for(arm_dirs, head_dir, t))
    return SkeletonSequence(frames=frames, sample_rate=float(rate))
