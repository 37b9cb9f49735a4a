"""Two-stage object-centering guidance.

Coarse stage: spoken directional commands while the target sits in the
periphery of the frame. Fine stage: the pulse cadence of the haptic channel
rises as the target's bounding-box center approaches the frame center
(Geiger-counter style), ending in a continuous vibration plus a one-shot
confirmation tone once the target is locked.

Everything here is a pure state machine: no threads, no clocks of its own.
Callers feed detections and a monotonic timestamp into ``guidance_tick`` and
get back a new state plus the feedback events for that tick.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Union


class Direction(Enum):
    LEFT = "left"
    RIGHT = "right"
    UP = "up"
    DOWN = "down"


#: Canonical spoken command per direction. Byte-exact; downstream consumers
#: (speech output, UI captions, tests) must not re-derive these strings.
SPEECH_TEXT = {
    Direction.LEFT: "Move camera to the left",
    Direction.RIGHT: "Move camera to the right",
    Direction.UP: "Tilt up",
    Direction.DOWN: "Tilt down",
}

#: Number of object classes: 80 detector categories plus "door" at index 80.
NUM_CLASSES = 81


class Tier(Enum):
    """Haptic cadence tier, a direct function of normalized distance."""

    PERIPHERAL = "peripheral"
    APPROACHING = "approaching"
    LOCKED = "locked"


class Phase(Enum):
    """Guidance phase. LOCKED requires the lock-hysteresis streak."""

    SEARCHING = "searching"
    COARSE = "coarse"
    APPROACHING = "approaching"
    LOCKED = "locked"


@dataclass(frozen=True)
class FrameGeometry:
    """Camera frame size in pixels."""

    width_px: int
    height_px: int

    def __post_init__(self):
        if self.width_px <= 0 or self.height_px <= 0:
            raise ValueError("frame dimensions must be positive")

    @property
    def center(self) -> tuple[float, float]:
        return self.width_px / 2.0, self.height_px / 2.0

    @property
    def half_diagonal(self) -> float:
        return math.hypot(self.width_px / 2.0, self.height_px / 2.0)


@dataclass(frozen=True)
class Detection:
    """One detected object: class index, confidence, pixel bounding box.

    Instances are plain value objects; they are not validated on construction
    because they may arrive from the wire. ``is_wellformed`` is the gate used
    by the tick loop, which skips (and counts) malformed entries.
    """

    class_id: int
    confidence: float
    bbox: tuple[float, float, float, float]  # x_min, y_min, x_max, y_max

    @property
    def center(self) -> tuple[float, float]:
        x0, y0, x1, y1 = self.bbox
        return (x0 + x1) / 2.0, (y0 + y1) / 2.0

    @property
    def area(self) -> float:
        x0, y0, x1, y1 = self.bbox
        return (x1 - x0) * (y1 - y0)

    def is_wellformed(self, frame: FrameGeometry) -> bool:
        x0, y0, x1, y1 = self.bbox
        if not all(math.isfinite(v) for v in (x0, y0, x1, y1, self.confidence)):
            return False
        if not (0 <= self.class_id < NUM_CLASSES):
            return False
        if not (0.0 <= self.confidence <= 1.0):
            return False
        if not (x0 < x1 and y0 < y1):
            return False
        return 0 <= x0 and x1 <= frame.width_px and 0 <= y0 and y1 <= frame.height_px


@dataclass(frozen=True)
class PulsePattern:
    """Vibration pulse timing. ``continuous`` means steady vibration."""

    on_ms: int
    off_ms: int
    continuous: bool = False

    def __post_init__(self):
        if self.on_ms < 0 or self.off_ms < 0:
            raise ValueError("pulse durations must be non-negative")
        if self.continuous:
            if self.off_ms != 0:
                raise ValueError("continuous pattern must have off_ms == 0")
        elif self.on_ms <= 0 or self.off_ms <= 0:
            raise ValueError("intermittent pattern needs on_ms > 0 and off_ms > 0")

    @property
    def period_ms(self) -> int:
        return self.on_ms + self.off_ms

    @property
    def frequency_hz(self) -> Optional[float]:
        """Pulse repetition rate; None for continuous vibration."""
        if self.continuous:
            return None
        return 1000.0 / self.period_ms


PERIPHERAL_PATTERN = PulsePattern(on_ms=200, off_ms=300)
APPROACHING_PATTERN = PulsePattern(on_ms=200, off_ms=100)
LOCKED_PATTERN = PulsePattern(on_ms=200, off_ms=0, continuous=True)


@dataclass(frozen=True)
class GuidanceConfig:
    """Tunables for the guidance loop.

    ``t_outer`` and ``t_inner`` are fractions of the frame half-diagonal that
    bound the coarse / approaching / locked regions. The pulse patterns
    default to the canonical 200/300, 200/100 and continuous timings.
    """

    t_outer: float = 0.35
    t_inner: float = 0.10
    lock_ticks: int = 3
    speech_debounce_ms: int = 1500
    peripheral_pattern: PulsePattern = PERIPHERAL_PATTERN
    approaching_pattern: PulsePattern = APPROACHING_PATTERN
    locked_pattern: PulsePattern = LOCKED_PATTERN
    lost_grace_ticks: int = 5  # empty ticks tolerated while LOCKED

    def __post_init__(self):
        if not (0.0 < self.t_inner < self.t_outer <= 1.0):
            raise ValueError("need 0 < t_inner < t_outer <= 1")
        if self.lock_ticks < 1:
            raise ValueError("lock_ticks must be >= 1")
        if self.speech_debounce_ms < 0:
            raise ValueError("speech_debounce_ms must be >= 0")
        if self.lost_grace_ticks < 1:
            raise ValueError("lost_grace_ticks must be >= 1")
        if not self.locked_pattern.continuous:
            raise ValueError("locked_pattern must be continuous")


@dataclass(frozen=True)
class Speech:
    text: str
    direction: Direction


@dataclass(frozen=True)
class Haptic:
    pattern: PulsePattern


@dataclass(frozen=True)
class LockedTone:
    """One-shot confirmation tone, emitted once per lock acquisition."""


FeedbackEvent = Union[Speech, Haptic, LockedTone]


@dataclass(frozen=True)
class GuidanceState:
    """Immutable tick-to-tick state of the guidance loop."""

    phase: Phase = Phase.SEARCHING
    direction: Optional[Direction] = None
    lock_streak: int = 0
    miss_streak: int = 0
    last_speech_ms: Optional[float] = None
    tone_armed: bool = True
    malformed_skipped: int = 0


def select_target(detections: list[Detection], target_class: int) -> Optional[Detection]:
    """Pick the best detection of ``target_class``.

    Highest confidence wins; ties fall to the larger bbox area, then to the
    smaller x_min. Returns None when no detection matches.
    """
    if not (0 <= target_class < NUM_CLASSES):
        raise ValueError(f"target_class must be in [0, {NUM_CLASSES - 1}]")
    candidates = [d for d in detections if d.class_id == target_class]
    if not candidates:
        return None
    return max(candidates, key=lambda d: (d.confidence, d.area, -d.bbox[0]))


def normalized_center_distance(det: Detection, frame: FrameGeometry) -> float:
    """Euclidean distance from bbox center to frame center, as a fraction of
    the frame half-diagonal. 0 = perfectly centered, 1 = at a frame corner."""
    cx, cy = frame.center
    x, y = det.center
    return math.hypot(x - cx, y - cy) / frame.half_diagonal


def directional_command(
    det: Detection, frame: FrameGeometry, cfg: GuidanceConfig = GuidanceConfig()
) -> Optional[Direction]:
    """Dominant-axis direction toward the frame center, or None inside the
    central region (where the fine haptic stage takes over).

    Axis offsets are normalized by the respective half-extent so squat frames
    do not bias the choice; an exact tie goes to the horizontal axis.
    """
    if normalized_center_distance(det, frame) < cfg.t_outer:
        return None
    cx, cy = frame.center
    x, y = det.center
    ux = (x - cx) / (frame.width_px / 2.0)
    uy = (y - cy) / (frame.height_px / 2.0)
    if abs(ux) >= abs(uy):
        return Direction.LEFT if ux < 0 else Direction.RIGHT
    return Direction.UP if uy < 0 else Direction.DOWN


def haptic_tier(d: float, cfg: GuidanceConfig = GuidanceConfig()) -> tuple[Tier, PulsePattern]:
    """Map normalized distance to a cadence tier and its pulse pattern."""
    if not (0.0 <= d <= 1.0):  # also rejects NaN
        raise ValueError(f"distance must be in [0, 1], got {d!r}")
    if d >= cfg.t_outer:
        return Tier.PERIPHERAL, cfg.peripheral_pattern
    if d >= cfg.t_inner:
        return Tier.APPROACHING, cfg.approaching_pattern
    return Tier.LOCKED, cfg.locked_pattern


def guidance_tick(
    detections: list[Detection],
    target_class: int,
    frame: FrameGeometry,
    state: GuidanceState,
    cfg: GuidanceConfig = GuidanceConfig(),
    now_ms: float = 0.0,
) -> tuple[GuidanceState, list[FeedbackEvent]]:
    """Advance the guidance loop by one tick.

    Pure function: identical inputs always yield identical outputs. ``now_ms``
    must be non-decreasing across calls sharing a state; it only gates the
    speech debounce.

    Behavior summary:

    * no target: SEARCHING with no events, except a short grace period while
      LOCKED (steady vibration persists for ``lost_grace_ticks - 1`` empty
      ticks before reverting);
    * coarse region (d >= t_outer): peripheral pulses plus a debounced spoken
      command;
    * approaching band: rapid pulses;
    * inner region (d < t_inner): continuous vibration immediately, but the
      LOCKED phase and its one-shot tone latch only after ``lock_ticks``
      consecutive inner ticks (hysteresis against boundary jitter).
    """
    wellformed = []
    skipped = 0
    for det in detections:
        if det.is_wellformed(frame):
            wellformed.append(det)
        else:
            skipped += 1
    malformed_total = state.malformed_skipped + skipped

    target = select_target(wellformed, target_class)

    if target is None:
        if state.phase is Phase.LOCKED and state.miss_streak + 1 < cfg.lost_grace_ticks:
            # Brief dropout while locked: hold the steady vibration.
            new_state = replace(
                state,
                miss_streak=state.miss_streak + 1,
                malformed_skipped=malformed_total,
            )
            return new_state, [Haptic(cfg.locked_pattern)]
        new_state = replace(
            state,
            phase=Phase.SEARCHING,
            direction=None,
            lock_streak=0,
            miss_streak=0,
            tone_armed=True,
            malformed_skipped=malformed_total,
        )
        return new_state, []

    d = normalized_center_distance(target, frame)
    events: list[FeedbackEvent] = []

    if d >= cfg.t_outer:
        direction = directional_command(target, frame, cfg)
        events.append(Haptic(cfg.peripheral_pattern))
        last = state.last_speech_ms
        if last is None or now_ms - last >= cfg.speech_debounce_ms:
            events.append(Speech(SPEECH_TEXT[direction], direction))
            last = now_ms
        new_state = replace(
            state,
            phase=Phase.COARSE,
            direction=direction,
            lock_streak=0,
            miss_streak=0,
            last_speech_ms=last,
            tone_armed=True,
            malformed_skipped=malformed_total,
        )
        return new_state, events

    if d >= cfg.t_inner:
        events.append(Haptic(cfg.approaching_pattern))
        new_state = replace(
            state,
            phase=Phase.APPROACHING,
            direction=None,
            lock_streak=0,
            miss_streak=0,
            tone_armed=True,
            malformed_skipped=malformed_total,
        )
        return new_state, events

    # Inner region: continuous vibration driven directly by d; the phase and
    # tone wait for the hysteresis streak.
    streak = state.lock_streak + 1
    events.append(Haptic(cfg.locked_pattern))
    if state.phase is Phase.LOCKED:
        new_state = replace(
            state,
            lock_streak=streak,
            miss_streak=0,
            malformed_skipped=malformed_total,
        )
        return new_state, events
    if streak >= cfg.lock_ticks:
        if state.tone_armed:
            events.append(LockedTone())
        new_state = replace(
            state,
            phase=Phase.LOCKED,
            direction=None,
            lock_streak=streak,
            miss_streak=0,
            tone_armed=False,
            malformed_skipped=malformed_total,
        )
        return new_state, events
    new_state = replace(
        state,
        phase=Phase.APPROACHING,
        direction=None,
        lock_streak=streak,
        miss_streak=0,
        malformed_skipped=malformed_total,
    )
    return new_state, events
