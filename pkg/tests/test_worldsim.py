import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hapticseek.guidance import Detection, Direction, FrameGeometry, directional_command
from hapticseek.worldsim import (
    NO_NOISE,
    CameraPose,
    DetectorNoise,
    Scene,
    SceneObject,
    detect,
    load_scene,
    project,
    scene_from_dict,
    steer_direction,
    step_camera,
    wrap_degrees,
)


@pytest.mark.parametrize(
    "angle,expected",
    [
        (0.0, 0.0),
        (180.0, 180.0),
        (-180.0, 180.0),
        (190.0, -170.0),
        (-190.0, 170.0),
        (360.0, 0.0),
        (725.0, 5.0),
        (-725.0, -5.0),
    ],
)
def test_wrap_degrees(angle, expected):
    assert wrap_degrees(angle) == pytest.approx(expected)


@given(st.floats(-1e6, 1e6, allow_nan=False))
def test_wrap_degrees_range_and_identity(angle):
    w = wrap_degrees(angle)
    assert -180.0 < w <= 180.0
    # wrapping preserves the angle modulo full turns
    assert math.isclose((angle - w) % 360.0, 0.0, abs_tol=1e-6) or math.isclose(
        (angle - w) % 360.0, 360.0, abs_tol=1e-6
    )


# -- projection ------------------------------------------------------------------


def test_project_centered_object(frame):
    obj = SceneObject(class_id=41, pan_deg=0.0, tilt_deg=0.0, angular_size_deg=6.0)
    det = project(obj, CameraPose(), frame)
    assert det is not None
    assert det.bbox == pytest.approx((288.0, 208.0, 352.0, 272.0))
    assert det.center == pytest.approx((320.0, 240.0))


def test_project_is_linear_in_offset(frame):
    obj = SceneObject(class_id=41, pan_deg=15.0, tilt_deg=0.0, angular_size_deg=6.0)
    det = project(obj, CameraPose(), frame)
    # x = width * (0.5 + 15/60)
    assert det.center[0] == pytest.approx(640.0 * 0.75)
    assert det.center[1] == pytest.approx(240.0)

    obj = SceneObject(class_id=41, pan_deg=0.0, tilt_deg=11.25, angular_size_deg=6.0)
    det = project(obj, CameraPose(), frame)
    assert det.center[1] == pytest.approx(480.0 * 0.75)


def test_project_clips_to_frame(frame):
    obj = SceneObject(class_id=41, pan_deg=-29.0, tilt_deg=0.0, angular_size_deg=8.0)
    det = project(obj, CameraPose(), frame)
    assert det is not None
    assert det.bbox[0] == 0.0
    assert det.bbox[2] > 0.0


def test_project_outside_fov_is_none(frame):
    far = SceneObject(class_id=41, pan_deg=40.0, tilt_deg=0.0, angular_size_deg=8.0)
    assert project(far, CameraPose(), frame) is None
    below = SceneObject(class_id=41, pan_deg=0.0, tilt_deg=-30.0, angular_size_deg=8.0)
    assert project(below, CameraPose(), frame) is None


def test_project_wraps_across_seam(frame):
    obj = SceneObject(class_id=41, pan_deg=350.0, tilt_deg=0.0, angular_size_deg=6.0)
    det = project(obj, CameraPose(pan_deg=-5.0), frame)
    assert det is not None
    # effective offset is -5 degrees
    assert det.center[0] == pytest.approx(640.0 * (0.5 - 5.0 / 60.0))


def test_project_scales_with_fov():
    frame = FrameGeometry(640, 480)
    obj = SceneObject(class_id=41, pan_deg=10.0, tilt_deg=0.0, angular_size_deg=6.0)
    wide = project(obj, CameraPose(hfov_deg=120.0), frame)
    narrow = project(obj, CameraPose(hfov_deg=40.0), frame)
    # narrower lens pushes the same offset further from center and magnifies it
    assert narrow.center[0] - 320.0 > wide.center[0] - 320.0
    assert narrow.area > wide.area


# -- detector noise ---------------------------------------------------------------


def scene_objects():
    return [
        SceneObject(class_id=41, pan_deg=10.0, tilt_deg=-4.0, angular_size_deg=8.0),
        SceneObject(class_id=80, pan_deg=-18.0, tilt_deg=5.0, angular_size_deg=20.0),
    ]


def test_detect_noise_free_matches_projection(frame):
    pose = CameraPose()
    dets = detect(scene_objects(), pose, frame, NO_NOISE, tick_index=0)
    expected = [project(o, pose, frame) for o in scene_objects()]
    assert dets == expected


def test_detect_deterministic_per_tick(frame):
    noise = DetectorNoise(seed=7, pixel_sigma=2.0, dropout_prob=0.2, confidence_base=0.8,
                          confidence_sigma=0.1)
    pose = CameraPose()
    a = detect(scene_objects(), pose, frame, noise, tick_index=3)
    b = detect(scene_objects(), pose, frame, noise, tick_index=3)
    assert a == b
    c = detect(scene_objects(), pose, frame, noise, tick_index=4)
    assert a != c


def test_detect_draw_alignment_is_positional(frame):
    """Noise draws are consumed per scene slot, so earlier objects are
    unaffected by what follows, and an invisible object still consumes draws."""
    noise = DetectorNoise(seed=11, pixel_sigma=3.0)
    pose = CameraPose()
    first = scene_objects()[0]
    out_of_view = SceneObject(class_id=2, pan_deg=120.0, tilt_deg=0.0, angular_size_deg=5.0)

    solo = detect([first], pose, frame, noise, tick_index=5)
    with_tail = detect([first, out_of_view], pose, frame, noise, tick_index=5)
    assert solo[0] == with_tail[0]

    behind_visible = detect([scene_objects()[1], first], pose, frame, noise, 5)
    behind_invisible = detect([out_of_view, first], pose, frame, noise, 5)
    assert behind_visible[-1] == behind_invisible[-1]


def test_detect_dropout_extremes(frame):
    always = DetectorNoise(seed=1, dropout_prob=0.0)
    never = DetectorNoise(seed=1, dropout_prob=1.0)
    for tick in range(20):
        assert len(detect(scene_objects(), CameraPose(), frame, always, tick)) == 2
        assert detect(scene_objects(), CameraPose(), frame, never, tick) == []


def test_detect_dropout_rate(frame):
    noise = DetectorNoise(seed=3, dropout_prob=0.3)
    obj = [scene_objects()[0]]
    hits = sum(len(detect(obj, CameraPose(), frame, noise, t)) for t in range(2000))
    assert hits / 2000 == pytest.approx(0.7, abs=0.03)


def test_detect_jitter_stays_in_frame(frame):
    noise = DetectorNoise(seed=5, pixel_sigma=40.0)
    for tick in range(200):
        for det in detect(scene_objects(), CameraPose(), frame, noise, tick):
            x0, y0, x1, y1 = det.bbox
            assert 0.0 <= x0 < x1 <= frame.width_px
            assert 0.0 <= y0 < y1 <= frame.height_px


def test_detect_confidence_clamped(frame):
    noise = DetectorNoise(seed=9, confidence_base=0.9, confidence_sigma=0.5)
    seen = [
        det.confidence
        for tick in range(300)
        for det in detect(scene_objects(), CameraPose(), frame, noise, tick)
    ]
    assert all(0.0 <= c <= 1.0 for c in seen)
    assert max(seen) == 1.0  # clamping actually engages at this sigma


def test_detect_rejects_negative_tick(frame):
    with pytest.raises(ValueError):
        detect(scene_objects(), CameraPose(), frame, NO_NOISE, tick_index=-1)


# -- camera stepping -----------------------------------------------------------


def test_step_camera_signs():
    pose = CameraPose(10.0, -5.0)
    assert step_camera(pose, Direction.LEFT, 2.0).pan_deg == 8.0
    assert step_camera(pose, Direction.RIGHT, 2.0).pan_deg == 12.0
    assert step_camera(pose, Direction.UP, 2.0).tilt_deg == -7.0
    assert step_camera(pose, Direction.DOWN, 2.0).tilt_deg == -3.0


def test_step_camera_rejects_nonpositive_gain():
    with pytest.raises(ValueError):
        step_camera(CameraPose(), Direction.LEFT, 0.0)
    with pytest.raises(ValueError):
        step_camera(CameraPose(), Direction.LEFT, -1.0)


@given(
    pan=st.floats(-25, 25, allow_nan=False),
    tilt=st.floats(-18, 18, allow_nan=False),
)
def test_following_the_command_reduces_the_offset(pan, tilt):
    """Closing the loop: one step along the spoken command strictly shrinks
    the dominant angular offset whenever a command is issued at all."""
    frame = FrameGeometry(640, 480)
    pose = CameraPose()
    obj = SceneObject(class_id=41, pan_deg=pan, tilt_deg=tilt, angular_size_deg=4.0)
    det = project(obj, pose, frame)
    if det is None:
        return
    direction = directional_command(det, frame)
    if direction is None:
        return  # already inside the fine-guidance region
    gain = 1.0
    stepped = step_camera(pose, direction, gain)
    if direction in (Direction.LEFT, Direction.RIGHT):
        before, after = abs(pan - pose.pan_deg), abs(pan - stepped.pan_deg)
    else:
        before, after = abs(tilt - pose.tilt_deg), abs(tilt - stepped.tilt_deg)
    assert after < before


def test_steer_direction_has_no_outer_gate(frame):
    det = Detection(41, 1.0, (330, 230, 350, 250))  # just right of center
    assert directional_command(det, frame) is None
    assert steer_direction(det, frame) is Direction.RIGHT
    centered = Detection(41, 1.0, (300, 220, 340, 260))
    assert steer_direction(centered, frame) is None


# -- scene files -----------------------------------------------------------------


def test_scene_from_dict_resolves_names_and_defaults():
    scene = scene_from_dict(
        {
            "objects": [
                {"class": "cup", "pan_deg": 12.0, "tilt_deg": -3.0, "size_deg": 8.0},
                {"class": 80, "pan_deg": -20.0, "tilt_deg": 0.0, "size_deg": 25.0},
            ],
            "camera": {"hfov_deg": 70.0},
            "noise": {"seed": 4, "dropout_prob": 0.1},
            "target": "cup",
        }
    )
    assert scene.objects[0].class_id == 41
    assert scene.objects[1].class_id == 80
    assert scene.camera.hfov_deg == 70.0
    assert scene.camera.vfov_deg == 45.0
    assert scene.noise.dropout_prob == 0.1
    assert scene.target_class == 41


def test_scene_round_trips_through_json(tmp_path):
    data = {
        "objects": [{"class": "door", "pan_deg": 31.0, "tilt_deg": 2.0, "size_deg": 30.0}],
        "camera": {"pan_deg": 5.0, "tilt_deg": 0.0, "hfov_deg": 60.0, "vfov_deg": 45.0},
        "noise": {"seed": 1, "pixel_sigma": 2.0},
        "target": "door",
    }
    path = tmp_path / "scene.json"
    path.write_text(json.dumps(data))
    scene = load_scene(path)
    assert scene == scene_from_dict(data)
    assert scene.objects[0].class_id == 80
    assert scene.noise.pixel_sigma == 2.0


def test_empty_scene_detects_nothing(frame):
    assert detect([], CameraPose(), frame, NO_NOISE, 0) == []
    assert Scene() == Scene(objects=(), camera=CameraPose(), noise=NO_NOISE, target_class=None)
