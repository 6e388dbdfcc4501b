"""RGBA images and bit-packed binary masks."""

from __future__ import annotations

import hashlib
import io
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .schema import BBox


@dataclass(frozen=True, eq=False)
class Image:
    """Immutable 8-bit RGBA image, row-major. ``name`` is a free-form id (e.g. file stem)."""

    width: int
    height: int
    data: bytes
    name: str | None = field(default=None)

    def __post_init__(self) -> None:
        if len(self.data) != self.width * self.height * 4:
            raise ValueError(
                f"buffer has {len(self.data)} bytes, expected {self.width}x{self.height}x4")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Image):
            return NotImplemented
        return (self.width, self.height, self.data) == (other.width, other.height, other.data)

    def __hash__(self) -> int:
        return hash((self.width, self.height, self.data))

    @classmethod
    def from_array(cls, array: np.ndarray, name: str | None = None) -> "Image":
        array = np.asarray(array, dtype=np.uint8)
        if array.ndim != 3 or array.shape[2] != 4:
            raise ValueError(f"expected an HxWx4 array, got shape {array.shape}")
        return cls(array.shape[1], array.shape[0], array.tobytes(), name)

    @classmethod
    def solid(cls, width: int, height: int, rgba=(255, 255, 255, 255), name: str | None = None) -> "Image":
        array = np.empty((height, width, 4), dtype=np.uint8)
        array[:] = rgba
        return cls.from_array(array, name)

    def to_array(self) -> np.ndarray:
        """Read-only ``(height, width, 4)`` view of the pixels."""
        return np.frombuffer(self.data, dtype=np.uint8).reshape(self.height, self.width, 4)

    def digest(self) -> str:
        return hashlib.sha256(self.data).hexdigest()

    @property
    def has_transparency(self) -> bool:
        return bool((self.to_array()[:, :, 3] < 255).any())

    @classmethod
    def from_png_bytes(cls, blob: bytes, name: str | None = None) -> "Image":
        with PILImage.open(io.BytesIO(blob)) as im:
            return cls.from_array(np.asarray(im.convert("RGBA")), name)

    def to_png_bytes(self) -> bytes:
        buf = io.BytesIO()
        PILImage.fromarray(self.to_array().copy(), "RGBA").save(buf, format="PNG")
        return buf.getvalue()

    @classmethod
    def load(cls, path: str | Path) -> "Image":
        path = Path(path)
        return cls.from_png_bytes(path.read_bytes(), name=path.stem)


@dataclass(frozen=True, eq=False)
class Mask:
    """Binary mask stored one bit per pixel (``ceil(w*h/8)`` bytes, MSB first)."""

    width: int
    height: int
    bits: bytes

    def __post_init__(self) -> None:
        expected = (self.width * self.height + 7) // 8
        if len(self.bits) != expected:
            raise ValueError(f"mask buffer has {len(self.bits)} bytes, expected {expected}")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Mask):
            return NotImplemented
        return (self.width, self.height, self.bits) == (other.width, other.height, other.bits)

    def __hash__(self) -> int:
        return hash((self.width, self.height, self.bits))

    @classmethod
    def from_array(cls, array: np.ndarray) -> "Mask":
        array = np.asarray(array, dtype=bool)
        if array.ndim != 2:
            raise ValueError("mask array must be 2-D")
        return cls(array.shape[1], array.shape[0], np.packbits(array.ravel()).tobytes())

    @classmethod
    def empty(cls, width: int, height: int) -> "Mask":
        return cls.from_array(np.zeros((height, width), dtype=bool))

    @classmethod
    def from_box(cls, width: int, height: int, box: BBox) -> "Mask":
        array = np.zeros((height, width), dtype=bool)
        array[max(box.y_min, 0):box.y_max, max(box.x_min, 0):box.x_max] = True
        return cls.from_array(array)

    def to_array(self) -> np.ndarray:
        flat = np.unpackbits(np.frombuffer(self.bits, dtype=np.uint8), count=self.width * self.height)
        return flat.reshape(self.height, self.width).astype(bool)

    @cached_property
    def popcount(self) -> int:
        return int(np.unpackbits(np.frombuffer(self.bits, dtype=np.uint8)).sum())

    def bbox(self) -> BBox | None:
        """Tight bounding box of the set pixels, or None for an empty mask."""
        array = self.to_array()
        rows = np.flatnonzero(array.any(axis=1))
        if rows.size == 0:
            return None
        cols = np.flatnonzero(array.any(axis=0))
        return BBox(int(cols[0]), int(rows[0]), int(cols[-1]) + 1, int(rows[-1]) + 1)

    def union(self, other: "Mask") -> "Mask":
        if (self.width, self.height) != (other.width, other.height):
            raise ValueError("mask dimensions differ")
        merged = np.bitwise_or(np.frombuffer(self.bits, np.uint8), np.frombuffer(other.bits, np.uint8))
        return Mask(self.width, self.height, merged.tobytes())

    def to_png_bytes(self) -> bytes:
        buf = io.BytesIO()
        PILImage.fromarray(self.to_array().astype(np.uint8) * 255, "L").save(buf, format="PNG")
        return buf.getvalue()

    @classmethod
    def from_png_bytes(cls, blob: bytes) -> "Mask":
        with PILImage.open(io.BytesIO(blob)) as im:
            return cls.from_array(np.asarray(im.convert("L")) > 0)
