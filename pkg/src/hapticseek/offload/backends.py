"""Simulated model backends: per-kind latency profiles and canned answers.

The default latency numbers are the measured server-side runtimes of the
three functionalities (seconds, mean and standard deviation). Latency draws
come from a Gaussian censored at zero: negative samples are clamped rather
than redrawn, because the find profile's std/mean ratio would otherwise bias
the redraw loop noticeably.

A scale factor shrinks the whole profile (means and stds alike) so a 20-trial
benchmark finishes in seconds on a desk run while keeping the same
mean/spread shape.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping

import numpy as np

from .protocol import KIND_FIND, KIND_OCR, KIND_SCENE

#: Prompt applied to visual question answering when the client asks nothing
#: specific.
VQA_PROMPT = "What is this? Provide the answer as summarized as possible."
#: Prompt applied to every transcription request.
OCR_PROMPT = "Transcribe the text present in this image."


@dataclass(frozen=True)
class LatencyModel:
    mean_s: float
    std_s: float

    def __post_init__(self):
        if self.mean_s < 0 or self.std_s < 0:
            raise ValueError("latency mean and std must be non-negative")

    def censored_moments(self) -> tuple[float, float]:
        """Analytic mean and std of max(N(mean, std), 0)."""
        from scipy.stats import norm

        if self.std_s == 0:
            return self.mean_s, 0.0
        a = self.mean_s / self.std_s
        ey = self.mean_s * norm.cdf(a) + self.std_s * norm.pdf(a)
        ey2 = (self.mean_s**2 + self.std_s**2) * norm.cdf(a) + self.mean_s * self.std_s * norm.pdf(a)
        return float(ey), float(np.sqrt(max(ey2 - ey * ey, 0.0)))


@dataclass(frozen=True)
class BackendProfile:
    scene: LatencyModel = LatencyModel(7.34, 1.10)
    ocr: LatencyModel = LatencyModel(7.09, 2.57)
    find: LatencyModel = LatencyModel(0.23, 0.18)
    network_overhead_s: float = 0.0

    def __post_init__(self):
        if self.network_overhead_s < 0:
            raise ValueError("network_overhead_s must be non-negative")

    def for_kind(self, kind: str) -> LatencyModel:
        try:
            return {KIND_SCENE: self.scene, KIND_OCR: self.ocr, KIND_FIND: self.find}[kind]
        except KeyError:
            raise KeyError(f"no latency model for kind {kind!r}") from None

    def scaled(self, factor: float) -> "BackendProfile":
        if factor <= 0:
            raise ValueError("scale factor must be positive")
        return BackendProfile(
            scene=LatencyModel(self.scene.mean_s * factor, self.scene.std_s * factor),
            ocr=LatencyModel(self.ocr.mean_s * factor, self.ocr.std_s * factor),
            find=LatencyModel(self.find.mean_s * factor, self.find.std_s * factor),
            network_overhead_s=self.network_overhead_s,
        )


def profile_from_dict(data: Mapping) -> BackendProfile:
    def model(key: str, default: LatencyModel) -> LatencyModel:
        entry = data.get(key)
        if entry is None:
            return default
        return LatencyModel(float(entry["mean_s"]), float(entry["std_s"]))

    base = BackendProfile()
    return BackendProfile(
        scene=model("scene", base.scene),
        ocr=model("ocr", base.ocr),
        find=model("find", base.find),
        network_overhead_s=float(data.get("network_overhead_s", 0.0)),
    )


def load_profile(path: str | Path) -> BackendProfile:
    with open(path, encoding="utf-8") as f:
        return profile_from_dict(json.load(f))


class LatencySampler:
    """Seeded stream of censored-Gaussian latency draws, one per request."""

    def __init__(self, seed: int):
        self._rng = np.random.default_rng(seed & 0xFFFFFFFFFFFFFFFF)

    def sample_s(self, model: LatencyModel) -> float:
        if model.std_s == 0.0:
            return model.mean_s
        return float(max(self._rng.normal(model.mean_s, model.std_s), 0.0))


class UnknownFixtureError(KeyError):
    pass


class FixtureStore:
    """Canned text answers keyed by fixture name. Unknown keys are errors;
    the store never invents an answer."""

    def __init__(self, fixtures: Mapping[str, str] | None = None):
        self._fixtures = dict(fixtures or {})
        for key, value in self._fixtures.items():
            if not isinstance(key, str) or not isinstance(value, str):
                raise ValueError("fixtures must map string keys to string answers")

    def get(self, key: str | None) -> str:
        if key is None or key not in self._fixtures:
            raise UnknownFixtureError(key)
        return self._fixtures[key]

    def __contains__(self, key: str) -> bool:
        return key in self._fixtures

    def __len__(self) -> int:
        return len(self._fixtures)

    @classmethod
    def from_file(cls, path: str | Path) -> "FixtureStore":
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
        if not isinstance(data, dict):
            raise ValueError("fixtures file must be a JSON object")
        return cls(data)


#: Small demo store mirroring typical transcription/VQA outputs.
DEFAULT_FIXTURES = {
    "street_sign": "CARRER DE L'ARTISTA FOGUERER.",
    "beans_bag": "Legumbres PEDRO ALUBIAS beans.",
    "medicine_box": "...Nolotil 575 mg capsulas duras Metamizol...",
    "softener_bottle": "A se vi Suavizante Azul pres ccr intense.",
    "office_desk": "A desk with a laptop, a cup and a stack of papers.",
    "empty": "",
}
