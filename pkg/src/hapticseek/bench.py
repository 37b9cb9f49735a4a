"""Benchmark harness: runtime measurements over the wire and closed-loop
convergence campaigns run in-process.

Runtime trials are strictly sequential on one connection so queueing never
inflates the end-to-end numbers. Convergence campaigns replay the guidance
loop against the world simulator with a scripted operator who steps the
camera one increment along the dominant axis per tick and holds still while
the vibration is continuous.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from .guidance import (
    GuidanceConfig,
    GuidanceState,
    FrameGeometry,
    Haptic,
    Phase,
    guidance_tick,
    select_target,
)
from .offload.client import OffloadClient, OffloadError
from .offload.protocol import KIND_FIND, KIND_OCR, KIND_SCENE, Request
from .worldsim import CameraPose, Scene, detect, steer_direction, step_camera

_SEED_MASK = (1 << 64) - 1

RUNTIME_KINDS = (KIND_SCENE, KIND_OCR, KIND_FIND)


@dataclass(frozen=True)
class RuntimeStats:
    """Latency summary for one request kind."""

    kind: str
    n: int
    server_mean_s: float
    server_std_s: float
    e2e_mean_s: float
    e2e_std_s: float
    valid: bool = True
    # Raw per-trial samples, kept out of equality and serialization.
    server_samples_s: tuple = field(default=(), compare=False, repr=False)
    e2e_samples_s: tuple = field(default=(), compare=False, repr=False)

    @property
    def fps(self) -> Optional[float]:
        # Frame-rate framing only makes sense for the detector loop.
        if self.kind != KIND_FIND or self.e2e_mean_s <= 0:
            return None
        return 1.0 / self.e2e_mean_s

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "n": self.n,
            "server_mean_s": self.server_mean_s,
            "server_std_s": self.server_std_s,
            "e2e_mean_s": self.e2e_mean_s,
            "e2e_std_s": self.e2e_std_s,
            "valid": self.valid,
            "fps": self.fps,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RuntimeStats":
        return cls(
            kind=data["kind"],
            n=int(data["n"]),
            server_mean_s=float(data["server_mean_s"]),
            server_std_s=float(data["server_std_s"]),
            e2e_mean_s=float(data["e2e_mean_s"]),
            e2e_std_s=float(data["e2e_std_s"]),
            valid=bool(data["valid"]),
        )


def _summarize(kind: str, server_s: Sequence[float], e2e_s: Sequence[float],
               requested: int, valid: bool) -> RuntimeStats:
    def stats(xs: Sequence[float]) -> tuple[float, float]:
        if not xs:
            return float("nan"), float("nan")
        arr = np.asarray(xs, dtype=float)
        sd = float(np.std(arr, ddof=1)) if arr.size > 1 else 0.0
        return float(arr.mean()), sd

    sm, ss = stats(server_s)
    em, es = stats(e2e_s)
    return RuntimeStats(
        kind=kind,
        n=len(server_s),
        server_mean_s=sm,
        server_std_s=ss,
        e2e_mean_s=em,
        e2e_std_s=es,
        valid=valid and len(server_s) == requested,
        server_samples_s=tuple(server_s),
        e2e_samples_s=tuple(e2e_s),
    )


def run_runtime_eval(
    endpoint: str,
    kind: str,
    trials: int = 20,
    fixture: str = "office_desk",
    target_class: int = 41,
    pose: tuple[float, float] = (0.0, 0.0),
    timeout_s: float = 60.0,
) -> RuntimeStats:
    """Issue ``trials`` sequential requests of one kind and summarize latency."""
    if kind not in RUNTIME_KINDS:
        raise ValueError(f"kind must be one of {RUNTIME_KINDS}, got {kind!r}")
    if trials < 1:
        raise ValueError("trials must be >= 1")

    server_s: list[float] = []
    e2e_s: list[float] = []
    valid = True
    try:
        with OffloadClient.from_endpoint(endpoint, timeout_s=timeout_s) as client:
            for i in range(trials):
                if kind == KIND_FIND:
                    req = Request(id=f"bench-{kind}-{i}", kind=kind,
                                  target_class=target_class, pose=pose)
                else:
                    req = Request(id=f"bench-{kind}-{i}", kind=kind, fixture=fixture)
                resp = client.call(req)
                if not resp.ok or resp.server_ms is None or resp.e2e_ms is None:
                    valid = False
                    break
                server_s.append(resp.server_ms / 1000.0)
                e2e_s.append(resp.e2e_ms / 1000.0)
    except OffloadError:
        valid = False
    return _summarize(kind, server_s, e2e_s, trials, valid)


def render_runtime_table(rows: Iterable[RuntimeStats]) -> str:
    lines = [f"{'Functionality':<16}{'Server (s)':<18}{'E2E (s)':<18}{'FPS':<8}"]
    for r in rows:
        server = f"{r.server_mean_s:.2f} ± {r.server_std_s:.2f}"
        e2e = f"{r.e2e_mean_s:.2f} ± {r.e2e_std_s:.2f}"
        fps = f"{r.fps:.2f}" if r.fps is not None else "-"
        flag = "" if r.valid else "  [invalid]"
        lines.append(f"{r.kind:<16}{server:<18}{e2e:<18}{fps:<8}{flag}")
    return "\n".join(lines)


# -- closed-loop convergence -------------------------------------------------


@dataclass(frozen=True)
class ConvergenceReport:
    scenarios: int
    successes: int
    budget: int
    gain_deg: float
    ticks_to_lock: tuple[Optional[int], ...] = field(default_factory=tuple)

    @property
    def success_rate(self) -> float:
        if self.scenarios == 0:
            return float("nan")
        return self.successes / self.scenarios

    @property
    def mean_ticks(self) -> Optional[float]:
        locked = [t for t in self.ticks_to_lock if t is not None]
        if not locked:
            return None
        return float(np.mean(locked))

    def to_dict(self) -> dict[str, Any]:
        return {
            "scenarios": self.scenarios,
            "successes": self.successes,
            "budget": self.budget,
            "gain_deg": self.gain_deg,
            "success_rate": self.success_rate,
            "ticks_to_lock": list(self.ticks_to_lock),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ConvergenceReport":
        return cls(
            scenarios=int(data["scenarios"]),
            successes=int(data["successes"]),
            budget=int(data["budget"]),
            gain_deg=float(data["gain_deg"]),
            ticks_to_lock=tuple(
                None if t is None else int(t) for t in data.get("ticks_to_lock", [])
            ),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ConvergenceReport":
        return cls.from_dict(json.loads(text))


def random_start_pose(scene: Scene, seed: int, margin: float = 0.9) -> CameraPose:
    """Uniform pose with the target inside the field of view (margin < 1 keeps
    it strictly visible even under pixel jitter)."""
    target = scene.target_class
    if target is None:
        raise ValueError("scene has no target_class")
    objs = [o for o in scene.objects if o.class_id == target]
    if not objs:
        raise ValueError(f"scene contains no object of class {target}")
    obj = objs[0]
    cam = scene.camera
    rng = np.random.default_rng([seed & _SEED_MASK, 0x5EED])
    span_pan = (cam.hfov_deg / 2.0 + obj.angular_size_deg / 2.0) * margin
    span_tilt = (cam.vfov_deg / 2.0 + obj.angular_size_deg / 2.0) * margin
    pan = obj.pan_deg + rng.uniform(-span_pan, span_pan)
    tilt = obj.tilt_deg + rng.uniform(-span_tilt, span_tilt)
    return replace(cam, pan_deg=pan, tilt_deg=tilt)


def run_scenario(
    scene: Scene,
    start: CameraPose,
    gain_deg: float,
    budget: int,
    frame: FrameGeometry,
    config: GuidanceConfig,
    tick_ms: float = 100.0,
) -> Optional[int]:
    """Run one closed-loop episode; return ticks until lock, or None."""
    assert scene.target_class is not None
    pose = start
    state = GuidanceState()
    now_ms = 0.0
    for tick in range(budget):
        detections = detect(list(scene.objects), pose, frame, scene.noise, tick)
        state, events = guidance_tick(
            detections, scene.target_class, frame, state, config, now_ms
        )
        now_ms += tick_ms
        if state.phase is Phase.LOCKED:
            return tick + 1
        # Scripted operator: hold on silence or continuous buzz, else one
        # dominant-axis step toward the target.
        well = [d for d in detections if d.is_wellformed(frame)]
        det = select_target(well, scene.target_class)
        if det is None:
            continue
        continuous = any(
            isinstance(ev, Haptic) and ev.pattern.continuous for ev in events
        )
        if continuous:
            continue
        direction = steer_direction(det, frame)
        if direction is not None:
            pose = step_camera(pose, direction, gain_deg)
    return None


def run_convergence(
    scene: Scene,
    seeds: int = 100,
    gain_deg: float = 5.0,
    budget: int = 200,
    frame: FrameGeometry = FrameGeometry(640, 480),
    config: GuidanceConfig | None = None,
    dropout: float | None = None,
    pixel_sigma: float | None = None,
) -> ConvergenceReport:
    """Run ``seeds`` scripted episodes; noise draws are independent per episode."""
    if seeds < 1:
        raise ValueError("seeds must be >= 1")
    config = config or GuidanceConfig()
    noise = scene.noise
    if dropout is not None:
        noise = replace(noise, dropout_prob=dropout)
    if pixel_sigma is not None:
        noise = replace(noise, pixel_sigma=pixel_sigma)

    ticks: list[Optional[int]] = []
    for seed in range(seeds):
        start = random_start_pose(scene, seed)
        episode_rng = np.random.default_rng([seed & _SEED_MASK, 0x0D15EA5E])
        episode_noise = replace(noise, seed=int(episode_rng.integers(0, 1 << 63)))
        episode = replace(scene, noise=episode_noise)
        ticks.append(run_scenario(episode, start, gain_deg, budget, frame, config))
    successes = sum(1 for t in ticks if t is not None)
    return ConvergenceReport(
        scenarios=seeds,
        successes=successes,
        budget=budget,
        gain_deg=gain_deg,
        ticks_to_lock=tuple(ticks),
    )


def render_convergence(report: ConvergenceReport) -> str:
    lines = [
        f"scenarios      {report.scenarios}",
        f"successes      {report.successes}",
        f"success rate   {report.success_rate:.1%}",
        f"tick budget    {report.budget}",
    ]
    if report.mean_ticks is not None:
        lines.append(f"mean ticks     {report.mean_ticks:.1f}")
    return "\n".join(lines)
