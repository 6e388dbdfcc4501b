"""Role contracts for the four model backends and shared result types."""

from __future__ import annotations

import json
import threading
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import NamedTuple, Protocol, Sequence

import yaml

from ..raster import Image, Mask
from ..schema import BBox, Scaffold


@dataclass(frozen=True)
class Detection:
    bbox: BBox
    score: float
    phrase: str

    def to_dict(self) -> dict:
        return {"bbox": self.bbox.to_list(), "score": self.score, "phrase": self.phrase}


class DetectionResult(tuple):
    """Detections sorted by score descending (ties: larger area, then y, then x)."""

    def __new__(cls, detections: Sequence[Detection] = ()):
        for d in detections:
            if not 0.0 <= d.score <= 1.0:
                raise ValueError(f"detection score {d.score} outside [0, 1]")
        ordered = sorted(detections, key=lambda d: (-d.score, -d.bbox.area, d.bbox.y_min, d.bbox.x_min))
        return super().__new__(cls, ordered)

    def to_list(self) -> list[dict]:
        return [d.to_dict() for d in self]


class ScaffoldProvider(Protocol):
    def infer(self, img: Image, prompt_text: str | None = None, diagnostics: list | None = None) -> Scaffold: ...


class Detector(Protocol):
    def detect(self, img: Image, phrase: str) -> DetectionResult: ...


class Segmenter(Protocol):
    def segment(self, img: Image, box: BBox, phrase: str) -> Mask: ...


class Inpainter(Protocol):
    def inpaint(self, img: Image, m: Mask) -> Image: ...


class Backends(NamedTuple):
    scaffold: ScaffoldProvider
    detector: Detector
    segmenter: Segmenter
    inpainter: Inpainter


class CallCounter:
    """Thread-safe per-role call tally shared by the counting wrappers."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._counts: Counter[str] = Counter()

    def bump(self, role: str) -> None:
        with self._lock:
            self._counts[role] += 1

    def as_dict(self) -> dict[str, int]:
        with self._lock:
            return {role: self._counts.get(role, 0) for role in ("scaffold", "detect", "segment", "inpaint")}


class _Counting:
    def __init__(self, inner, role: str, counter: CallCounter):
        self._inner, self._role, self._counter = inner, role, counter

    def _call(self, method: str, *args, **kwargs):
        self._counter.bump(self._role)
        return getattr(self._inner, method)(*args, **kwargs)

    def infer(self, *args, **kwargs):
        return self._call("infer", *args, **kwargs)

    def detect(self, *args, **kwargs):
        return self._call("detect", *args, **kwargs)

    def segment(self, *args, **kwargs):
        return self._call("segment", *args, **kwargs)

    def inpaint(self, *args, **kwargs):
        return self._call("inpaint", *args, **kwargs)


def counted(backends: Backends, counter: CallCounter) -> Backends:
    return Backends(
        _Counting(backends.scaffold, "scaffold", counter),
        _Counting(backends.detector, "detect", counter),
        _Counting(backends.segmenter, "segment", counter),
        _Counting(backends.inpainter, "inpaint", counter),
    )


@dataclass(frozen=True)
class Prompt:
    name: str
    version: int
    text: str
    rationales: dict[str, str]


def load_prompt(path: str | Path | None = None) -> Prompt:
    """Load a prompt file (YAML front matter + body). Defaults to the shipped UI-Master prompt."""
    if path is None:
        raw = resources.files("uirecon").joinpath("data/ui_master_prompt.md").read_text(encoding="utf-8")
    else:
        raw = Path(path).read_text(encoding="utf-8")
    meta: dict = {}
    body = raw
    if raw.startswith("---\n"):
        head, _, body = raw[4:].partition("\n---\n")
        meta = yaml.safe_load(head) or {}
    text = body.strip()
    if not text:
        raise ValueError("prompt text is empty")
    return Prompt(
        name=str(meta.get("name", Path(path).stem if path else "ui-master")),
        version=int(meta.get("version", 1)),
        text=text,
        rationales=dict(meta.get("rationales", {})),
    )


def default_palette() -> dict[str, tuple[int, int, int]]:
    raw = json.loads(resources.files("uirecon").joinpath("data/palette.json").read_text(encoding="utf-8"))
    return {name: tuple(rgb) for name, rgb in raw.items()}
