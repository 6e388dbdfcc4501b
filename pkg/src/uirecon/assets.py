"""Sprite extraction, background recovery and the raster IoU oracle."""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np
from PIL import Image as PILImage
from PIL import PngImagePlugin

from .diagnostics import AssetError, ContractError
from .fsutil import atomic_write
from .naming import sanitize_name
from .raster import Image, Mask
from .schema import BBox

_META_ID = "uirecon:element_id"
_META_ORIGIN = "uirecon:origin"


@dataclass(frozen=True, eq=False)
class SpriteAsset:
    element_id: str
    x: int
    y: int
    image: Image

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SpriteAsset):
            return NotImplemented
        return (self.element_id, self.x, self.y, self.image) == (other.element_id, other.x, other.y, other.image)

    @property
    def origin(self) -> tuple[int, int]:
        return self.x, self.y

    @property
    def bbox(self) -> BBox:
        return BBox(self.x, self.y, self.x + self.image.width, self.y + self.image.height)

    @property
    def alpha_popcount(self) -> int:
        return int((self.image.to_array()[:, :, 3] > 0).sum())


def extract_sprite(img: Image, m: Mask, element_id: str) -> SpriteAsset:
    """Crop ``img`` to the mask's tight box; pixels outside the mask get alpha 0."""
    if (m.width, m.height) != (img.width, img.height):
        raise AssetError(f"mask {m.width}x{m.height} does not match image {img.width}x{img.height}")
    box = m.bbox()
    if box is None:
        raise AssetError(f"empty mask for {element_id!r}")
    src = img.to_array()[box.y_min:box.y_max, box.x_min:box.x_max]
    inside = m.to_array()[box.y_min:box.y_max, box.x_min:box.x_max]
    out = np.zeros_like(src)
    out[inside] = src[inside]
    # source alpha is copied verbatim; a fully transparent source pixel is
    # bumped to 1 so the sprite's alpha still marks every masked pixel
    alpha = out[:, :, 3]
    alpha[inside & (alpha == 0)] = 1
    return SpriteAsset(element_id, box.x_min, box.y_min, Image.from_array(out, sanitize_name(element_id)))


def composite(background: Image, sprite: SpriteAsset) -> Image:
    """Alpha-composite ``sprite`` over ``background`` at its origin."""
    bg = background.to_array().astype(np.float64).copy()
    box = sprite.bbox
    if not background_box(background).contains(box):
        raise ContractError("sprite does not fit inside the background")
    fg = sprite.image.to_array().astype(np.float64)
    region = bg[box.y_min:box.y_max, box.x_min:box.x_max]
    a = fg[:, :, 3:4] / 255.0
    region[:, :, :3] = fg[:, :, :3] * a + region[:, :, :3] * (1 - a)
    region[:, :, 3:4] = fg[:, :, 3:4] + region[:, :, 3:4] * (1 - a)
    return Image.from_array(np.rint(bg).astype(np.uint8), background.name)


def background_box(img: Image) -> BBox:
    return BBox(0, 0, img.width, img.height)


def recover_background(img: Image, m: Mask, backend) -> Image:
    """Inpaint the masked region via ``backend`` and check nothing else changed."""
    if m.popcount == 0:
        return img
    out = backend.inpaint(img, m)
    if (out.width, out.height) != (img.width, img.height):
        raise ContractError("inpainter changed the image dimensions")
    outside = ~m.to_array()
    if not np.array_equal(out.to_array()[outside], img.to_array()[outside]):
        raise ContractError("inpainter modified pixels outside the mask")
    return out


def raster_iou_oracle(a: BBox, b: BBox, canvas_w: int, canvas_h: int) -> Fraction:
    """IoU by painting both boxes on a grid and counting pixels. Test oracle only."""
    grid_a = np.zeros((canvas_h, canvas_w), dtype=bool)
    grid_b = np.zeros((canvas_h, canvas_w), dtype=bool)
    grid_a[a.y_min:a.y_max, a.x_min:a.x_max] = True
    grid_b[b.y_min:b.y_max, b.x_min:b.x_max] = True
    union = int((grid_a | grid_b).sum())
    return Fraction(int((grid_a & grid_b).sum()), union) if union else Fraction(0)


def sprite_png_bytes(sp: SpriteAsset) -> bytes:
    info = PngImagePlugin.PngInfo()
    info.add_text(_META_ID, sp.element_id)
    info.add_text(_META_ORIGIN, f"{sp.x},{sp.y}")
    buf = io.BytesIO()
    PILImage.fromarray(sp.image.to_array().copy(), "RGBA").save(buf, format="PNG", pnginfo=info)
    return buf.getvalue()


def write_sprite(sp: SpriteAsset, directory: str | Path, filename: str | None = None) -> Path:
    """Write ``sp`` as ``<directory>/<sanitized id>.png``.

    The element id and origin travel inside the PNG as text chunks, so
    :func:`read_sprite` needs nothing else.
    """
    path = Path(directory) / (filename or f"{sanitize_name(sp.element_id)}.png")
    try:
        atomic_write(path, sprite_png_bytes(sp))
    except OSError as exc:
        raise OSError(f"cannot write sprite {path}: {exc}") from exc
    return path


def read_sprite(path: str | Path) -> SpriteAsset:
    path = Path(path)
    with PILImage.open(path) as im:
        meta = dict(im.text)
        array = np.asarray(im.convert("RGBA"))
    if _META_ID not in meta or _META_ORIGIN not in meta:
        raise AssetError(f"{path} has no sprite metadata")
    x, y = (int(v) for v in meta[_META_ORIGIN].split(","))
    return SpriteAsset(meta[_META_ID], x, y, Image.from_array(array, path.stem))


def manifest_entry(sp: SpriteAsset, asset_path: str) -> dict:
    return {"element_id": sp.element_id, "asset_path": asset_path, "origin": [sp.x, sp.y],
            "size": [sp.image.width, sp.image.height]}


def write_manifest(entries: list[dict], path: str | Path) -> None:
    atomic_write(Path(path), (json.dumps(entries, ensure_ascii=False, separators=(",", ":")) + "\n").encode())
