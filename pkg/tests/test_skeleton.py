import json
import math

import numpy as np
import pytest

from labanmotion.errors import (
    BadDescriptor,
    DegeneratePose,
    InsufficientData,
    MalformedFrame,
    TimeOrderError,
)
from labanmotion.skeleton import (
    ALL_JOINTS,
    JointName,
    SkeletonFrame,
    SkeletonSequence,
    body_frame,
    load_sequence,
    parse_sequence,
    resample,
    save_sequence,
    serialize_sequence,
    synth_motion,
)

from conftest import random_rotation, transform_sequence


def _upright_frame(t=0.0):
    pos = {
        JointName.SpineBase: np.array([0.0, 0.0, 0.0]),
        JointName.SpineShoulder: np.array([0.0, 0.0, 0.5]),
        JointName.Neck: np.array([0.0, 0.0, 0.56]),
        JointName.Head: np.array([0.0, 0.0, 0.73]),
        JointName.ShoulderLeft: np.array([0.0, 0.18, 0.5]),
        JointName.ShoulderRight: np.array([0.0, -0.18, 0.5]),
        JointName.ElbowLeft: np.array([0.0, 0.48, 0.5]),
        JointName.ElbowRight: np.array([0.0, -0.48, 0.5]),
        JointName.WristLeft: np.array([0.0, 0.75, 0.5]),
        JointName.WristRight: np.array([0.0, -0.75, 0.5]),
        JointName.HandLeft: np.array([0.0, 0.83, 0.5]),
        JointName.HandRight: np.array([0.0, -0.83, 0.5]),
    }
    return SkeletonFrame(timestamp=t, positions=pos)


def _file_obj(frames):
    return {
        "sample_rate_hint": None,
        "frames": [
            {"t": f.timestamp, "joints": {j.value: list(map(float, p)) for j, p in f.positions.items()}}
            for f in frames
        ],
    }


def test_load_two_frame_file(tmp_path):
    path = tmp_path / "seq.json"
    path.write_text(json.dumps(_file_obj([_upright_frame(0.0), _upright_frame(0.1)])))
    seq = load_sequence(str(path))
    assert len(seq) == 2


def test_load_missing_joint(tmp_path):
    obj = _file_obj([_upright_frame(0.0), _upright_frame(0.1)])
    del obj["frames"][1]["joints"]["WristLeft"]
    path = tmp_path / "seq.json"
    path.write_text(json.dumps(obj))
    with pytest.raises(MalformedFrame) as exc:
        load_sequence(str(path))
    assert exc.value.index == 1
    assert exc.value.joint == "WristLeft"


def test_load_duplicate_timestamp(tmp_path):
    obj = _file_obj([_upright_frame(0.0), _upright_frame(0.0)])
    path = tmp_path / "seq.json"
    path.write_text(json.dumps(obj))
    with pytest.raises(TimeOrderError) as exc:
        load_sequence(str(path))
    assert exc.value.index == 1


def test_load_non_finite_coordinate(tmp_path):
    obj = _file_obj([_upright_frame(0.0)])
    obj["frames"][0]["joints"]["Head"][2] = float("nan")
    path = tmp_path / "seq.json"
    path.write_text(json.dumps(obj).replace("NaN", "NaN"))
    with pytest.raises(MalformedFrame):
        load_sequence(str(path))


def test_resample_identity_at_same_rate():
    seq = synth_motion({"pattern": "static", "duration": 1.0}, rate=30.0)
    out = resample(seq, 30.0)
    assert len(out) == len(seq)
    for a, b in zip(seq.frames, out.frames):
        for j in ALL_JOINTS:
            assert np.max(np.abs(a.positions[j] - b.positions[j])) < 1e-9


def test_resample_midpoint():
    f0 = _upright_frame(0.0)
    f1 = _upright_frame(1.0)
    for j in ALL_JOINTS:
        f1.positions[j] = f1.positions[j] + np.array([1.0, 0.0, 0.0])
    seq = SkeletonSequence(frames=[f0, f1])
    out = resample(seq, 2.0)
    assert len(out) == 3
    assert out.frames[1].timestamp == pytest.approx(0.5, abs=1e-12)
    assert out.frames[1].positions[JointName.WristRight][0] == pytest.approx(
        f0.positions[JointName.WristRight][0] + 0.5, abs=1e-12
    )


def test_resample_single_frame():
    seq = SkeletonSequence(frames=[_upright_frame(0.0)])
    with pytest.raises(InsufficientData):
        resample(seq, 30.0)


def test_resample_idempotent(rng):
    seq = synth_motion(
        {"pattern": "move_hold_move", "part": "right_arm",
         "from_pose": "place_low", "to_pose": "forward_middle", "hold": 0.5},
        rate=30.0,
    )
    once = resample(seq, 30.0)
    twice = resample(once, 30.0)
    assert len(once) == len(twice)
    for a, b in zip(once.frames, twice.frames):
        for j in ALL_JOINTS:
            assert np.max(np.abs(a.positions[j] - b.positions[j])) < 1e-9


def test_body_frame_axis_aligned():
    bf = body_frame(_upright_frame())
    assert np.allclose(bf.up, [0, 0, 1], atol=1e-12)
    assert np.allclose(bf.left, [0, 1, 0], atol=1e-12)
    assert np.allclose(bf.forward, [1, 0, 0], atol=1e-12)
    assert np.allclose(bf.origin, [0, 0, 0.5], atol=1e-12)


def test_body_frame_rotated_90_about_z():
    Rz = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    frame = _upright_frame()
    rotated = SkeletonFrame(
        timestamp=0.0, positions={j: Rz @ p for j, p in frame.positions.items()}
    )
    bf = body_frame(rotated)
    assert np.allclose(bf.forward, Rz @ np.array([1.0, 0.0, 0.0]), atol=1e-9)
    assert np.allclose(bf.left, Rz @ np.array([0.0, 1.0, 0.0]), atol=1e-9)
    # orthonormality preserved
    M = np.column_stack([bf.forward, bf.left, bf.up])
    assert np.allclose(M.T @ M, np.eye(3), atol=1e-9)


def test_body_frame_equivariance_randomized(rng):
    frame = _upright_frame()
    for _ in range(25):
        R = random_rotation(rng)
        t = rng.normal(size=3)
        moved = SkeletonFrame(
            timestamp=0.0, positions={j: R @ p + t for j, p in frame.positions.items()}
        )
        bf0 = body_frame(frame)
        bf1 = body_frame(moved)
        assert np.max(np.abs(bf1.forward - R @ bf0.forward)) < 1e-6
        assert np.max(np.abs(bf1.left - R @ bf0.left)) < 1e-6
        assert np.max(np.abs(bf1.up - R @ bf0.up)) < 1e-6


def test_body_frame_orthonormal_and_right_handed():
    bf = body_frame(_upright_frame())
    for v in (bf.forward, bf.left, bf.up):
        assert abs(np.linalg.norm(v) - 1.0) < 1e-9
    assert abs(bf.forward @ bf.left) < 1e-9
    assert abs(bf.forward @ bf.up) < 1e-9
    assert abs(bf.left @ bf.up) < 1e-9
    det = np.linalg.det(np.column_stack([bf.forward, bf.left, bf.up]))
    assert abs(det - 1.0) < 1e-6


def test_body_frame_degenerate_shoulders():
    frame = _upright_frame()
    frame.positions[JointName.ShoulderLeft] = frame.positions[JointName.ShoulderRight].copy()
    with pytest.raises(DegeneratePose):
        body_frame(frame)


def test_synth_static_frame_count_and_constancy():
    seq = synth_motion({"pattern": "static", "duration": 2.0}, rate=30.0)
    assert len(seq) == 60
    first = seq.frames[0]
    for f in seq.frames[1:]:
        for j in ALL_JOINTS:
            assert np.array_equal(f.positions[j], first.positions[j])


def test_synth_move_hold_move_constant_on_hold():
    hold = 0.5
    seq = synth_motion(
        {"pattern": "move_hold_move", "part": "right_arm",
         "from_pose": "place_low", "to_pose": "forward_middle", "hold": hold},
        rate=30.0,
    )
    ts = seq.timestamps()
    hold_start = ts[-1] - hold + 1e-9
    wrist = seq.positions_of(JointName.WristRight)
    on_hold = wrist[ts >= hold_start]
    assert len(on_hold) >= 10
    assert np.max(np.abs(on_hold - on_hold[0])) < 1e-12


def test_synth_reach_sequence_three_plateaus():
    # derived: count low-speed runs in the generated wrist speed signal
    seq = synth_motion(
        {"pattern": "reach_sequence", "part": "right_arm",
         "poses": [["place_low", 0.6], ["forward_middle", 0.6], ["left_high", 0.6]]},
        rate=30.0,
    )
    wrist = seq.positions_of(JointName.WristRight)
    speed = np.linalg.norm(np.diff(wrist, axis=0), axis=1) * 30.0
    still = speed < 1e-6
    runs = 0
    prev = False
    length = 0
    for s in list(still) + [False]:
        if s:
            length += 1
        else:
            if length >= 5:
                runs += 1
            length = 0
    assert runs == 3


def test_synth_unknown_pattern():
    with pytest.raises(BadDescriptor):
        synth_motion({"pattern": "wiggle"})


def test_synth_unknown_pose():
    with pytest.raises(BadDescriptor):
        synth_motion(
            {"pattern": "move_hold_move", "part": "right_arm",
             "from_pose": "sideways_sorta", "to_pose": "forward_middle", "hold": 0.5}
        )


def test_serialize_load_roundtrip_bitwise(tmp_path):
    seq = synth_motion(
        {"pattern": "move_hold_move", "part": "left_arm",
         "from_pose": "place_low", "to_pose": "left_high", "hold": 0.4},
        rate=30.0,
    )
    path = tmp_path / "seq.json"
    save_sequence(seq, str(path))
    back = load_sequence(str(path))
    assert back.sample_rate == seq.sample_rate
    assert len(back) == len(seq)
    for a, b in zip(seq.frames, back.frames):
        assert a.timestamp == b.timestamp
        for j in ALL_JOINTS:
            assert np.array_equal(a.positions[j], b.positions[j])


def test_serialize_parse_identity_twice():
    seq = synth_motion({"pattern": "static", "duration": 0.5}, rate=30.0)
    text1 = serialize_sequence(seq)
    text2 = serialize_sequence(parse_sequence(text1))
    assert text1 == text2
