import io
import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from repcount.pose import (
    ExerciseKind,
    JointTriple,
    Keypoint,
    PoseFrame,
    TraceParseError,
    TraceSchemaError,
    confidence_gate,
    encode_frame,
    joint_triples,
    read_trace,
    write_trace,
)
from repcount.synth import MotionProfile, gen_pose_trace

from .conftest import make_frame


def test_empty_stream_reads_nothing():
    assert list(read_trace(io.BytesIO(b""))) == []


def test_single_line_frame():
    kp = [[float(i), float(2 * i), 0.5] for i in range(33)]
    line = json.dumps({"t": 0.0, "kp": kp}).encode() + b"\n"
    (frame,) = read_trace(io.BytesIO(line))
    assert frame.timestamp == 0.0
    assert len(frame.keypoints) == 33
    assert frame[7] == Keypoint(7.0, 14.0, 0.5)


def test_missing_point_is_schema_error_with_line_number():
    frames, _ = gen_pose_trace(MotionProfile(reps=1), seed=0)
    lines = [encode_frame(f) for f in frames[:4]]
    record = json.loads(lines[2])
    del record["kp"][5]
    lines[2] = json.dumps(record)
    with pytest.raises(TraceSchemaError) as info:
        list(read_trace(io.StringIO("\n".join(lines))))
    assert info.value.lineno == 3
    assert "line 3" in str(info.value)
    assert "32" in str(info.value)


@pytest.mark.parametrize(
    "line, error",
    [
        ("{not json", TraceParseError),
        ("[1, 2]", TraceParseError),
        ('{"t": 0}', TraceSchemaError),
        ('{"t": "a", "kp": []}', TraceSchemaError),
    ],
)
def test_malformed_lines(line, error):
    with pytest.raises(error) as info:
        list(read_trace(io.StringIO(line + "\n")))
    assert info.value.lineno == 1


def test_bad_confidence_and_nan_rejected():
    good = json.loads(encode_frame(make_frame()))
    for bad in ([1.0, 2.0, 1.5], [float("nan"), 0.0, 0.5]):
        rec = dict(good, kp=[bad] + good["kp"][1:])
        with pytest.raises(TraceSchemaError):
            list(read_trace(io.StringIO(json.dumps(rec))))


def test_decreasing_timestamp_rejected():
    text = encode_frame(make_frame(1.0)) + "\n" + encode_frame(make_frame(0.5)) + "\n"
    with pytest.raises(TraceSchemaError) as info:
        list(read_trace(io.StringIO(text)))
    assert info.value.lineno == 2


def test_blank_lines_skipped_and_numbering_kept():
    text = encode_frame(make_frame(0.0)) + "\n\n" + '{"t": 1}' + "\n"
    with pytest.raises(TraceSchemaError) as info:
        list(read_trace(io.StringIO(text)))
    assert info.value.lineno == 3


def test_keypoint_invariants():
    with pytest.raises(ValueError):
        Keypoint(0.0, 0.0, 1.01)
    with pytest.raises(ValueError):
        Keypoint(math.inf, 0.0, 0.5)
    with pytest.raises(ValueError):
        PoseFrame(0.0, (Keypoint(0, 0, 1),) * 32)


coords = st.floats(-1e4, 1e4, allow_nan=False)
keypoints = st.builds(Keypoint, coords, coords, st.floats(0.0, 1.0))
frames = st.lists(keypoints, min_size=33, max_size=33).map(tuple)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 1e3), frames), max_size=5))
def test_write_read_round_trip(items):
    ts = sorted(t for t, _ in items)
    original = [PoseFrame(t, kps) for t, (_, kps) in zip(ts, items)]
    for sink in (io.BytesIO(), io.StringIO()):
        write_trace(original, sink)
        sink.seek(0)
        assert list(read_trace(sink)) == original


def test_joint_triples():
    squat = joint_triples(ExerciseKind.SQUAT)
    assert squat == [JointTriple(24, 26, 28), JointTriple(23, 25, 27)]
    assert {t.vertex for t in squat} == {26, 25}
    push = joint_triples(ExerciseKind.PUSH_UP)
    assert push == [JointTriple(12, 14, 16), JointTriple(11, 13, 15)]
    assert joint_triples(ExerciseKind.PULL_UP) == push
    for kind in ExerciseKind:
        for t in joint_triples(kind):
            assert len(set(t)) == 3 and all(0 <= i <= 32 for i in t)


def test_elbow_triples_sweep_the_upper_limb_bands():
    from repcount.kinematics import exercise_angle
    from repcount.phases import DEFAULT_BANDS

    for kind in (ExerciseKind.PUSH_UP, ExerciseKind.PULL_UP):
        trace, _ = gen_pose_trace(MotionProfile(exercise=kind, reps=1), seed=1)
        angles = [exercise_angle(f, kind) for f in trace]
        band = DEFAULT_BANDS[kind]
        assert min(angles) < band.lower and max(angles) > band.upper


def test_exercise_parse():
    assert ExerciseKind.parse("Push-Up") is ExerciseKind.PUSH_UP
    assert ExerciseKind.parse("pull_up") is ExerciseKind.PULL_UP
    with pytest.raises(ValueError):
        ExerciseKind.parse("lunge")


SQUAT = joint_triples(ExerciseKind.SQUAT)
SQUAT_POINTS = [24, 26, 28, 23, 25, 27]


def test_gate_confident():
    frame = make_frame(points={i: (i, i, 0.9) for i in SQUAT_POINTS}, confidence=0.1)
    kept = confidence_gate(frame, SQUAT, 0.75)
    assert kept is not None and len(kept) == 6


def test_gate_one_point_below():
    frame = make_frame(points={26: (0, 0, 0.74)}, confidence=1.0)
    assert confidence_gate(frame, SQUAT, 0.75) is None


def test_gate_threshold_zero_always_passes():
    assert confidence_gate(make_frame(confidence=0.0), SQUAT, 0.0) is not None


def test_gate_ignores_landmarks_outside_triples():
    frame = make_frame(points={0: (0, 0, 0.0), 15: (0, 0, 0.0)}, confidence=0.9)
    assert confidence_gate(frame, SQUAT, 0.75) is not None


@given(st.lists(st.floats(0, 1), min_size=6, max_size=6), st.floats(0, 1), st.floats(0, 1))
def test_gate_monotone_in_threshold(confs, t1, t2):
    lo, hi = sorted((t1, t2))
    frame = make_frame(points={i: (i, i, c) for i, c in zip(SQUAT_POINTS, confs)})
    if confidence_gate(frame, SQUAT, hi) is not None:
        assert confidence_gate(frame, SQUAT, lo) is not None
