"""JSON-over-HTTP clients for remote model servers. Wire format: WIRE.md."""

from __future__ import annotations

import base64
import os
import re
import time
from typing import Callable

import numpy as np
import requests

from ..config import BackendConfig
from ..diagnostics import BackendError, ConfigError, Diagnostic, ParseError, SchemaError
from ..raster import Image, Mask
from ..schema import LENIENT, BBox, Scaffold, parse_scaffold, validate
from .base import Detection, DetectionResult

_FENCE = re.compile(r"^\s*```[a-zA-Z]*\s*\n(.*?)\n\s*```\s*$", re.S)


def b64_png(blob: bytes) -> str:
    return base64.b64encode(blob).decode("ascii")


def strip_code_fence(text: str) -> str:
    m = _FENCE.match(text)
    return m.group(1) if m else text


class HttpClient:
    """POSTs JSON to a role's endpoint, retrying timeouts, transport errors and 5xx/429.

    At most ``1 + max_retries`` attempts; the wait before retry ``k`` is
    ``backoff_base_ms * 2**k``.
    """

    def __init__(self, config: BackendConfig, session: requests.Session | None = None,
                 sleep: Callable[[float], None] = time.sleep):
        self.config = config
        self.session = session or requests.Session()
        self.sleep = sleep

    def _headers(self, role: str) -> dict[str, str]:
        env_name = self.config.credentials.get(role)
        if not env_name:
            return {}
        token = os.environ.get(env_name)
        if token is None:
            raise ConfigError(f"environment variable {env_name} (credential for {role}) is not set")
        return {"Authorization": f"Bearer {token}"}

    def post(self, role: str, payload: dict) -> dict:
        url = self.config.endpoints[role]
        headers = self._headers(role)
        timeout = self.config.timeout_ms / 1000.0
        attempts = 1 + self.config.max_retries
        failure: BackendError | None = None
        for attempt in range(attempts):
            try:
                resp = self.session.post(url, json=payload, headers=headers, timeout=timeout)
            except requests.Timeout as exc:
                failure = BackendError(f"{role}: timed out after {timeout:g}s ({exc})", role=role, kind="timeout")
            except requests.RequestException as exc:
                failure = BackendError(f"{role}: transport error: {exc}", role=role, kind="transport")
            else:
                if resp.status_code == 429 or resp.status_code >= 500:
                    failure = BackendError(f"{role}: HTTP {resp.status_code}", role=role, kind="http",
                                           status=resp.status_code)
                elif resp.status_code >= 400:
                    raise BackendError(f"{role}: HTTP {resp.status_code}: {resp.text[:200]}", role=role,
                                       kind="http", status=resp.status_code)
                else:
                    try:
                        body = resp.json()
                    except ValueError:
                        raise BackendError(f"{role}: response is not JSON", role=role, kind="protocol") from None
                    if not isinstance(body, dict):
                        raise BackendError(f"{role}: response must be a JSON object", role=role, kind="protocol")
                    return body
            if attempt + 1 < attempts:
                self.sleep(self.config.backoff_base_ms * (2 ** attempt) / 1000.0)
        assert failure is not None
        raise failure


def _field(body: dict, key: str, role: str):
    if key not in body:
        raise BackendError(f"{role}: response lacks {key!r}", role=role, kind="protocol")
    return body[key]


def _decode_png(value, role: str) -> bytes:
    try:
        return base64.b64decode(value, validate=True)
    except (ValueError, TypeError):
        raise BackendError(f"{role}: payload is not base64", role=role, kind="protocol") from None


class HttpScaffoldProvider:
    def __init__(self, client: HttpClient):
        self.client = client

    def infer(self, img: Image, prompt_text: str | None = None, diagnostics: list | None = None) -> Scaffold:
        if not prompt_text or not prompt_text.strip():
            raise ValueError("prompt_text must be nonempty")
        body = self.client.post("scaffold", {
            "image": b64_png(img.to_png_bytes()),
            "prompt": prompt_text,
            "width": img.width,
            "height": img.height,
        })
        raw = _field(body, "scaffold", "scaffold")
        if not isinstance(raw, str):
            raise SchemaError(Diagnostic("E_MISSING_FIELD", "scaffold response must be YAML text"), str(raw))
        try:
            s = parse_scaffold(strip_code_fence(raw), canvas=(img.width, img.height))
        except ParseError as exc:
            raise SchemaError(Diagnostic("E_MISSING_FIELD", f"backend returned unparseable YAML: {exc}"),
                              raw) from exc
        except SchemaError as exc:
            raise SchemaError(exc.diagnostic, raw) from exc
        if diagnostics is not None:
            diagnostics.extend(validate(s, LENIENT))
        return s


class HttpDetector:
    def __init__(self, client: HttpClient):
        self.client = client

    def detect(self, img: Image, phrase: str) -> DetectionResult:
        if not phrase.strip():
            raise ValueError("phrase must be nonempty")
        body = self.client.post("detect", {"image": b64_png(img.to_png_bytes()), "phrase": phrase})
        found = []
        try:
            for item in _field(body, "detections", "detect"):
                box = BBox.from_seq(item["bbox"])
                if not (box.is_valid and box.within_canvas(img.width, img.height)):
                    continue
                found.append(Detection(box, float(item.get("score", 1.0)), str(item.get("phrase", phrase))))
            return DetectionResult(found)
        except (KeyError, TypeError, ValueError) as exc:
            raise BackendError(f"detect: malformed detections: {exc}", role="detect", kind="protocol") from exc


class HttpSegmenter:
    def __init__(self, client: HttpClient):
        self.client = client

    def segment(self, img: Image, box: BBox, phrase: str) -> Mask:
        body = self.client.post("segment", {
            "image": b64_png(img.to_png_bytes()),
            "phrase": phrase,
            "box": box.to_list(),
        })
        try:
            mask = Mask.from_png_bytes(_decode_png(_field(body, "mask", "segment"), "segment"))
        except OSError as exc:
            raise BackendError(f"segment: mask is not a PNG: {exc}", role="segment", kind="protocol") from exc
        if (mask.width, mask.height) != (img.width, img.height):
            raise BackendError("segment: mask size differs from image", role="segment", kind="protocol")
        # keep the confinement contract even if the server bleeds outside the box
        confined = np.zeros((img.height, img.width), dtype=bool)
        confined[box.y_min:box.y_max, box.x_min:box.x_max] = True
        return Mask.from_array(mask.to_array() & confined)


class HttpInpainter:
    def __init__(self, client: HttpClient):
        self.client = client

    def inpaint(self, img: Image, m: Mask) -> Image:
        body = self.client.post("inpaint", {
            "image": b64_png(img.to_png_bytes()),
            "mask": b64_png(m.to_png_bytes()),
        })
        try:
            out = Image.from_png_bytes(_decode_png(_field(body, "image", "inpaint"), "inpaint"), img.name)
        except OSError as exc:
            raise BackendError(f"inpaint: image is not a PNG: {exc}", role="inpaint", kind="protocol") from exc
        if (out.width, out.height) != (img.width, img.height):
            raise BackendError("inpaint: output size differs from input", role="inpaint", kind="protocol")
        return out
