"""Deterministic virtual world standing in for a live object detector.

Objects live at angular positions (pan/tilt, degrees); a pan/tilt camera with
a rectangular field of view projects them onto the frame with a linear
angle-to-pixel mapping. A seeded noise model (corner jitter, dropout,
confidence perturbation) makes the fake detector imperfect but fully
reproducible: the random stream for a tick is derived from (seed, tick_index),
so tick order never matters.

The linear projection is intentionally simpler than a pinhole camera: it is
monotone in the angular offset, which is all the guidance loop needs.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import labels
from .guidance import NUM_CLASSES, Detection, Direction, FrameGeometry


def wrap_degrees(angle: float) -> float:
    """Wrap an angle to (-180, 180] so commands take the short way around."""
    a = angle % 360.0
    return a - 360.0 if a > 180.0 else a


@dataclass(frozen=True)
class SceneObject:
    class_id: int
    pan_deg: float
    tilt_deg: float
    angular_size_deg: float  # apparent width == height

    def __post_init__(self):
        if not (0 <= self.class_id < NUM_CLASSES):
            raise ValueError(f"class_id must be in [0, {NUM_CLASSES - 1}]")
        if self.angular_size_deg <= 0:
            raise ValueError("angular_size_deg must be positive")


@dataclass(frozen=True)
class CameraPose:
    pan_deg: float = 0.0
    tilt_deg: float = 0.0
    hfov_deg: float = 60.0
    vfov_deg: float = 45.0

    def __post_init__(self):
        if not (0.0 < self.hfov_deg < 180.0 and 0.0 < self.vfov_deg < 180.0):
            raise ValueError("fields of view must be in (0, 180) degrees")


@dataclass(frozen=True)
class DetectorNoise:
    seed: int = 0
    pixel_sigma: float = 0.0
    dropout_prob: float = 0.0
    confidence_base: float = 1.0
    confidence_sigma: float = 0.0

    def __post_init__(self):
        if self.pixel_sigma < 0 or self.confidence_sigma < 0:
            raise ValueError("sigmas must be non-negative")
        if not (0.0 <= self.dropout_prob <= 1.0):
            raise ValueError("dropout_prob must be in [0, 1]")
        if not (0.0 < self.confidence_base <= 1.0):
            raise ValueError("confidence_base must be in (0, 1]")


NO_NOISE = DetectorNoise()


def project(
    obj: SceneObject,
    pose: CameraPose,
    frame: FrameGeometry,
    confidence: float = 1.0,
) -> Optional[Detection]:
    """Noise-free projection of one object, or None when outside the view.

    Bbox center: x = width * (0.5 + dpan/hfov), y = height * (0.5 + dtilt/vfov)
    (screen-down positive tilt offset); bbox extent is the angular size scaled
    the same way. The bbox is clipped to the frame; a fully clipped-away box
    yields None.
    """
    dpan = wrap_degrees(obj.pan_deg - pose.pan_deg)
    dtilt = wrap_degrees(obj.tilt_deg - pose.tilt_deg)
    half = obj.angular_size_deg / 2.0
    if abs(dpan) > pose.hfov_deg / 2.0 + half or abs(dtilt) > pose.vfov_deg / 2.0 + half:
        return None

    w, h = float(frame.width_px), float(frame.height_px)
    cx = w * (0.5 + dpan / pose.hfov_deg)
    cy = h * (0.5 + dtilt / pose.vfov_deg)
    bw = w * (obj.angular_size_deg / pose.hfov_deg)
    bh = h * (obj.angular_size_deg / pose.vfov_deg)

    x0 = max(0.0, cx - bw / 2.0)
    y0 = max(0.0, cy - bh / 2.0)
    x1 = min(w, cx + bw / 2.0)
    y1 = min(h, cy + bh / 2.0)
    if not (x0 < x1 and y0 < y1):
        return None
    return Detection(class_id=obj.class_id, confidence=confidence, bbox=(x0, y0, x1, y1))


def detect(
    scene: list[SceneObject],
    pose: CameraPose,
    frame: FrameGeometry,
    noise: DetectorNoise = NO_NOISE,
    tick_index: int = 0,
) -> list[Detection]:
    """Simulated detector output for one tick.

    Each object independently survives dropout, gets Gaussian jitter on its
    bbox corners, and a perturbed confidence clamped to [0, 1]. The stream is
    a pure function of (noise.seed, tick_index): the per-object draws are
    consumed in scene order regardless of visibility, so one object's result
    never depends on another's.
    """
    if tick_index < 0:
        raise ValueError("tick_index must be non-negative")
    rng = np.random.default_rng([noise.seed & 0xFFFFFFFFFFFFFFFF, tick_index])
    w, h = float(frame.width_px), float(frame.height_px)
    out: list[Detection] = []
    for obj in scene:
        u = rng.random()
        jitter = rng.normal(0.0, 1.0, size=4)
        conf_jitter = rng.normal(0.0, 1.0)
        det = project(obj, pose, frame, confidence=noise.confidence_base)
        if det is None or u < noise.dropout_prob:
            continue
        x0, y0, x1, y1 = det.bbox
        if noise.pixel_sigma > 0:
            x0 = min(max(x0 + noise.pixel_sigma * jitter[0], 0.0), w)
            y0 = min(max(y0 + noise.pixel_sigma * jitter[1], 0.0), h)
            x1 = min(max(x1 + noise.pixel_sigma * jitter[2], 0.0), w)
            y1 = min(max(y1 + noise.pixel_sigma * jitter[3], 0.0), h)
            if not (x0 < x1 and y0 < y1):
                continue
        conf = det.confidence
        if noise.confidence_sigma > 0:
            conf = float(min(max(conf + noise.confidence_sigma * conf_jitter, 0.0), 1.0))
        out.append(Detection(class_id=det.class_id, confidence=conf, bbox=(x0, y0, x1, y1)))
    return out


def step_camera(pose: CameraPose, direction: Direction, gain_deg: float) -> CameraPose:
    """Move the camera one step in the commanded direction.

    Sign convention matches the spoken commands: following the command always
    shrinks the corresponding angular offset (as long as gain < 2x offset).
    """
    if gain_deg <= 0:
        raise ValueError("gain_deg must be positive")
    if direction is Direction.LEFT:
        return replace(pose, pan_deg=pose.pan_deg - gain_deg)
    if direction is Direction.RIGHT:
        return replace(pose, pan_deg=pose.pan_deg + gain_deg)
    if direction is Direction.UP:
        return replace(pose, tilt_deg=pose.tilt_deg - gain_deg)
    if direction is Direction.DOWN:
        return replace(pose, tilt_deg=pose.tilt_deg + gain_deg)
    raise ValueError(f"unknown direction: {direction!r}")


def steer_direction(det: Detection, frame: FrameGeometry) -> Optional[Direction]:
    """Dominant-axis direction toward center with no outer-region gate.

    This is the simulated user's policy in closed-loop runs: inside the fine
    band there is no spoken command, so the virtual user keeps nudging the
    dominant axis. Returns None when the bbox center sits exactly on center.
    """
    cx, cy = frame.center
    x, y = det.center
    ux = (x - cx) / (frame.width_px / 2.0)
    uy = (y - cy) / (frame.height_px / 2.0)
    if ux == 0.0 and uy == 0.0:
        return None
    if abs(ux) >= abs(uy):
        return Direction.LEFT if ux < 0 else Direction.RIGHT
    return Direction.UP if uy < 0 else Direction.DOWN


@dataclass(frozen=True)
class Scene:
    """A scene file: objects, camera FOV (plus optional start pose), noise,
    and an optional default target class."""

    objects: tuple[SceneObject, ...] = ()
    camera: CameraPose = CameraPose()
    noise: DetectorNoise = NO_NOISE
    target_class: Optional[int] = None


def scene_from_dict(data: dict) -> Scene:
    objects = []
    for entry in data.get("objects", []):
        objects.append(
            SceneObject(
                class_id=labels.resolve_class(entry["class"]),
                pan_deg=float(entry["pan_deg"]),
                tilt_deg=float(entry["tilt_deg"]),
                angular_size_deg=float(entry["size_deg"]),
            )
        )
    cam = data.get("camera", {})
    camera = CameraPose(
        pan_deg=float(cam.get("pan_deg", 0.0)),
        tilt_deg=float(cam.get("tilt_deg", 0.0)),
        hfov_deg=float(cam.get("hfov_deg", 60.0)),
        vfov_deg=float(cam.get("vfov_deg", 45.0)),
    )
    nz = data.get("noise", {})
    noise = DetectorNoise(
        seed=int(nz.get("seed", 0)),
        pixel_sigma=float(nz.get("pixel_sigma", 0.0)),
        dropout_prob=float(nz.get("dropout_prob", 0.0)),
        confidence_base=float(nz.get("confidence_base", 1.0)),
        confidence_sigma=float(nz.get("confidence_sigma", 0.0)),
    )
    target = data.get("target")
    target_class = labels.resolve_class(target) if target is not None else None
    return Scene(objects=tuple(objects), camera=camera, noise=noise, target_class=target_class)


def load_scene(path: str | Path) -> Scene:
    with open(path, encoding="utf-8") as f:
        return scene_from_dict(json.load(f))
