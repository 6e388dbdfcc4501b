"""Deterministic stand-ins for the four model roles.

They work on synthetic screenshots drawn with exact palette colors: a color
word in the phrase ("red play button") selects the pixels to detect or
segment. Every call is a pure function of the image bytes, the arguments and
the fixture manifest.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np
from scipy import ndimage

from ..diagnostics import BackendError, ContractError
from ..raster import Image, Mask
from ..schema import LENIENT, BBox, Scaffold, parse_scaffold, validate
from .base import Detection, DetectionResult, default_palette

MID_GRAY = (128, 128, 128, 255)
_WORD = re.compile(r"[a-z]+")


def palette_color(phrase: str, palette: dict[str, tuple[int, int, int]]) -> tuple[int, int, int] | None:
    """First palette color named in ``phrase`` (whole-word, case-insensitive)."""
    for word in _WORD.findall(phrase.lower()):
        if word in palette:
            return tuple(palette[word])
    return None


def _color_match(img: Image, rgb) -> np.ndarray:
    return np.all(img.to_array()[:, :, :3] == np.asarray(rgb, dtype=np.uint8), axis=2)


class FixtureManifest:
    """``{"images": {id: {"scaffold": path, "sha256": hex}}, "palette": {...}, "segment_mode": ...}``."""

    def __init__(self, path: str | Path | None = None, data: dict | None = None):
        self.base = Path(path).parent if path else Path(".")
        if data is None:
            data = json.loads(Path(path).read_text(encoding="utf-8")) if path else {}
        self.images: dict[str, dict] = dict(data.get("images", {}))
        palette = default_palette()
        palette.update({k: tuple(v) for k, v in data.get("palette", {}).items()})
        self.palette = palette
        self.segment_mode = data.get("segment_mode")

    def lookup(self, img: Image) -> dict | None:
        if img.name and img.name in self.images:
            return self.images[img.name]
        digest = img.digest()
        for entry in self.images.values():
            if entry.get("sha256") == digest:
                return entry
        return None


class MockScaffoldProvider:
    def __init__(self, manifest: FixtureManifest):
        self.manifest = manifest

    def infer(self, img: Image, prompt_text: str | None = None, diagnostics: list | None = None) -> Scaffold:
        if prompt_text is not None and not prompt_text.strip():
            raise ValueError("prompt_text must be nonempty")
        entry = self.manifest.lookup(img)
        if entry is None:
            raise BackendError(f"mock manifest has no scaffold for image {img.name or img.digest()[:12]}",
                               role="scaffold", kind="protocol")
        text = (self.manifest.base / entry["scaffold"]).read_text(encoding="utf-8")
        s = parse_scaffold(text, canvas=(img.width, img.height), source_image=entry.get("source_image"))
        if diagnostics is not None:
            diagnostics.extend(validate(s, LENIENT))
        return s


class MockDetector:
    def __init__(self, palette: dict[str, tuple[int, int, int]] | None = None):
        self.palette = palette or default_palette()

    def detect(self, img: Image, phrase: str) -> DetectionResult:
        if not phrase.strip():
            raise ValueError("phrase must be nonempty")
        rgb = palette_color(phrase, self.palette)
        if rgb is None:
            return DetectionResult()
        labels, count = ndimage.label(_color_match(img, rgb))
        found = []
        for index, sl in enumerate(ndimage.find_objects(labels), start=1):
            if sl is None:
                continue
            box = BBox(sl[1].start, sl[0].start, sl[1].stop, sl[0].stop)
            pixels = int((labels[sl] == index).sum())
            found.append(Detection(box, pixels / box.area, phrase))
        return DetectionResult(found)


class MockSegmenter:
    """``rect`` mode fills the box; ``color`` mode keeps box pixels of the phrase's color.

    Without a color word, color mode uses the color at the box center. An
    empty color mask falls back to the filled box.
    """

    def __init__(self, mode: str = "color", palette: dict[str, tuple[int, int, int]] | None = None):
        if mode not in ("rect", "color"):
            raise ValueError(f"unknown segment mode {mode!r}")
        self.mode = mode
        self.palette = palette or default_palette()

    def segment(self, img: Image, box: BBox, phrase: str) -> Mask:
        if not (box.is_valid and box.within_canvas(img.width, img.height)):
            raise ContractError(f"segment box {box.to_list()} is not inside the {img.width}x{img.height} image")
        rect = Mask.from_box(img.width, img.height, box)
        if self.mode == "rect":
            return rect
        rgb = palette_color(phrase, self.palette)
        if rgb is None:
            cy, cx = (box.y_min + box.y_max - 1) // 2, (box.x_min + box.x_max - 1) // 2
            rgb = tuple(img.to_array()[cy, cx, :3])
        inside = np.zeros((img.height, img.width), dtype=bool)
        inside[box.y_min:box.y_max, box.x_min:box.x_max] = True
        mask = inside & _color_match(img, rgb)
        return Mask.from_array(mask) if mask.any() else rect


def ring_mean(img: Image, m: Mask) -> tuple[int, ...] | None:
    """Rounded mean RGBA over the 1-px ring of pixels 8-adjacent to the mask."""
    mask = m.to_array()
    ring = ndimage.binary_dilation(mask, structure=np.ones((3, 3), dtype=bool)) & ~mask
    n = int(ring.sum())
    if n == 0:
        return None
    sums = img.to_array()[ring].astype(np.int64).sum(axis=0)
    return tuple(int((2 * s + n) // (2 * n)) for s in sums)


class MockInpainter:
    def inpaint(self, img: Image, m: Mask) -> Image:
        if (m.width, m.height) != (img.width, img.height):
            raise ContractError("mask and image dimensions differ")
        mask = m.to_array()
        if not mask.any():
            return img
        fill = ring_mean(img, m) or MID_GRAY
        out = img.to_array().copy()
        out[mask] = fill
        return Image.from_array(out, img.name)
