"""Model backends: scaffold inference, detection, segmentation, inpainting."""

from __future__ import annotations

from ..config import HTTP, BackendConfig
from .base import (
    Backends,
    CallCounter,
    Detection,
    DetectionResult,
    Prompt,
    counted,
    default_palette,
    load_prompt,
)
from .mock import FixtureManifest, MockDetector, MockInpainter, MockScaffoldProvider, MockSegmenter


def build_backends(config: BackendConfig) -> Backends:
    if config.kind == HTTP:
        from .http import HttpClient, HttpDetector, HttpInpainter, HttpScaffoldProvider, HttpSegmenter

        client = HttpClient(config)
        return Backends(HttpScaffoldProvider(client), HttpDetector(client), HttpSegmenter(client),
                        HttpInpainter(client))
    manifest = FixtureManifest(config.fixture_manifest)
    mode = manifest.segment_mode or config.segment_mode
    return Backends(
        MockScaffoldProvider(manifest),
        MockDetector(manifest.palette),
        MockSegmenter(mode, manifest.palette),
        MockInpainter(),
    )


__all__ = [
    "Backends",
    "CallCounter",
    "Detection",
    "DetectionResult",
    "FixtureManifest",
    "MockDetector",
    "MockInpainter",
    "MockScaffoldProvider",
    "MockSegmenter",
    "Prompt",
    "build_backends",
    "counted",
    "default_palette",
    "load_prompt",
]
