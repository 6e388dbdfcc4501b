"""Programmatically rendered ``synthetic_hud`` fixture.

The render paints exact palette colors, so the mock detector and segmenter
recover pixel-exact geometry. The module returns the ground truth and a
deliberately imprecise scaffold that stands in for model output.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .evaluation import scaffold_to_design_json
from .fsutil import atomic_write
from .perception.base import default_palette
from .raster import Image
from .schema import BBox, Label, Scaffold, UIElement, serialize_scaffold

NAME = "synthetic_hud"
CANVAS = (320, 180)
BACKGROUND = (0, 0, 0)

# id, label, parent, exact box, color word, coarse box as a model might report it
_LAYOUT = [
    ("hud_root", "panel", None, (8, 8, 312, 172), "navy", (6, 9, 314, 170)),
    ("status_panel", "panel", "hud_root", (16, 16, 176, 164), "gray", (18, 14, 178, 160)),
    ("btn_play", "button", "status_panel", (28, 28, 164, 68), "red", (25, 30, 166, 66)),
    ("btn_quit", "button", "status_panel", (28, 80, 164, 120), "orange", (30, 78, 160, 124)),
    ("health_bar", "progress_bar", "hud_root", (188, 140, 304, 156), "green", (186, 137, 316, 159)),
]
_PROMPTS = {
    "hud_root": "navy hud frame panel",
    "status_panel": "gray status sub panel",
    "btn_play": "red play button",
    "btn_quit": "orange quit button",
    "health_bar": "green health progress bar",
}


def truth_scaffold() -> Scaffold:
    elements = [
        UIElement(el_id, Label(label), BBox(*box), parent, _PROMPTS[el_id])
        for el_id, label, parent, box, _, _ in _LAYOUT
    ]
    return Scaffold(*CANVAS, tuple(elements), source_image=f"{NAME}.png", phase="scaffolded")


def coarse_scaffold() -> Scaffold:
    elements = [
        UIElement(el_id, Label(label), BBox(*coarse), parent, _PROMPTS[el_id])
        for el_id, label, parent, _, _, coarse in _LAYOUT
    ]
    return Scaffold(*CANVAS, tuple(elements), source_image=f"{NAME}.png", phase="scaffolded")


def render() -> Image:
    palette = default_palette()
    width, height = CANVAS
    pixels = np.empty((height, width, 4), dtype=np.uint8)
    pixels[:, :, :3] = BACKGROUND
    pixels[:, :, 3] = 255
    for _, _, _, (x0, y0, x1, y1), color, _ in _LAYOUT:
        pixels[y0:y1, x0:x1, :3] = palette[color]
    return Image.from_array(pixels, NAME)


def write_fixture(directory: str | Path) -> dict[str, Path]:
    """Write the image, coarse scaffold, ground truth, mock manifest and mock config."""
    directory = Path(directory)
    img = render()
    paths = {
        "image": directory / f"{NAME}.png",
        "scaffold": directory / f"{NAME}.scaffold.yaml",
        "truth": directory / f"{NAME}.truth.json",
        "manifest": directory / "manifest.json",
        "config": directory / "mock.ini",
    }
    atomic_write(paths["image"], img.to_png_bytes())
    coarse = coarse_scaffold()
    # model output carries no canvas metadata; the provider fills it from the image
    text = serialize_scaffold(coarse, "yaml")
    atomic_write(paths["scaffold"], text)
    truth = scaffold_to_design_json(truth_scaffold(), NAME)
    atomic_write(paths["truth"], json.dumps(truth, indent=2) + "\n")
    manifest = {
        "images": {NAME: {"scaffold": paths["scaffold"].name, "sha256": img.digest(),
                          "source_image": paths["image"].name}},
        "segment_mode": "color",
    }
    atomic_write(paths["manifest"], json.dumps(manifest, indent=2) + "\n")
    atomic_write(paths["config"], "[backend]\nkind = mock\nfixture_manifest = manifest.json\n\n"
                                  "[pipeline]\nparallelism = 4\nmode = lenient\n")
    return paths
