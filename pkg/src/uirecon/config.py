"""Backend and pipeline configuration, read from INI-style key-value files.

Example::

    [backend]
    kind = http
    timeout_ms = 30000
    max_retries = 2
    backoff_base_ms = 500

    [endpoints]
    scaffold = http://vlm.internal:8000/scaffold
    detect = http://detector.internal:8001/detect
    segment = http://segmenter.internal:8002/segment
    inpaint = http://inpainter.internal:8003/inpaint

    [credentials]
    scaffold = VLM_API_KEY

    [calibration]
    containment_tolerance_frac = 0.02

    [pipeline]
    parallelism = 4
    mode = lenient

Relative paths are resolved against the file's directory.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields
from pathlib import Path

from .calibration import CalibrationParams
from .diagnostics import ConfigError
from .schema import LENIENT, STRICT

ROLES = ("scaffold", "detect", "segment", "inpaint")
MOCK = "mock"
HTTP = "http"


@dataclass(frozen=True)
class BackendConfig:
    kind: str = MOCK
    endpoints: dict[str, str] = field(default_factory=dict)
    timeout_ms: int = 30_000
    max_retries: int = 2
    backoff_base_ms: int = 500
    # role -> name of the environment variable holding its bearer token
    credentials: dict[str, str] = field(default_factory=dict)
    fixture_manifest: Path | None = None
    segment_mode: str = "color"

    def __post_init__(self) -> None:
        if self.kind not in (MOCK, HTTP):
            raise ConfigError(f"backend kind must be mock or http, got {self.kind!r}")
        if self.kind == HTTP:
            missing = [r for r in ROLES if not self.endpoints.get(r)]
            if missing:
                raise ConfigError(f"http backend needs endpoints for: {', '.join(missing)}")
        if self.timeout_ms <= 0 or self.max_retries < 0 or self.backoff_base_ms < 0:
            raise ConfigError("timeout_ms must be positive; max_retries and backoff_base_ms non-negative")
        if self.segment_mode not in ("color", "rect"):
            raise ConfigError(f"segment_mode must be color or rect, got {self.segment_mode!r}")


@dataclass(frozen=True)
class PipelineConfig:
    backend: BackendConfig = field(default_factory=BackendConfig)
    calibration: CalibrationParams = field(default_factory=CalibrationParams)
    output_dir: Path | None = None
    parallelism: int = 4
    mode: str = LENIENT
    prompt_file: Path | None = None

    def __post_init__(self) -> None:
        if self.parallelism < 1:
            raise ConfigError("parallelism must be >= 1")
        if self.mode not in (STRICT, LENIENT):
            raise ConfigError(f"mode must be strict or lenient, got {self.mode!r}")


def _read(path: Path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return parser


def _number(section, key: str, convert, default):
    if key not in section:
        return default
    try:
        return convert(section[key])
    except ValueError:
        raise ConfigError(f"[{section.name}] {key} must be a number, got {section[key]!r}") from None


def _resolve(base: Path, value: str | None) -> Path | None:
    if not value:
        return None
    path = Path(value)
    return path if path.is_absolute() else base / path


def backend_from_parser(parser: configparser.ConfigParser, base: Path) -> BackendConfig:
    sec = parser["backend"] if parser.has_section("backend") else parser[parser.default_section]
    endpoints = dict(parser["endpoints"]) if parser.has_section("endpoints") else {}
    credentials = dict(parser["credentials"]) if parser.has_section("credentials") else {}
    unknown = set(endpoints) - set(ROLES)
    if unknown:
        raise ConfigError(f"unknown endpoint roles: {sorted(unknown)}")
    return BackendConfig(
        kind=sec.get("kind", MOCK).strip(),
        endpoints=endpoints,
        timeout_ms=_number(sec, "timeout_ms", int, 30_000),
        max_retries=_number(sec, "max_retries", int, 2),
        backoff_base_ms=_number(sec, "backoff_base_ms", int, 500),
        credentials=credentials,
        fixture_manifest=_resolve(base, sec.get("fixture_manifest")),
        segment_mode=sec.get("segment_mode", "color").strip(),
    )


def load_backend_config(path: str | Path) -> BackendConfig:
    path = Path(path)
    return backend_from_parser(_read(path), path.parent)


def load_pipeline_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    parser = _read(path)
    base = path.parent
    pipe = parser["pipeline"] if parser.has_section("pipeline") else {}

    backend_path = _resolve(base, pipe.get("backend_config")) if pipe else None
    if backend_path is not None:
        if not backend_path.exists():
            raise ConfigError(f"backend config {backend_path} does not exist")
        backend = load_backend_config(backend_path)
    else:
        backend = backend_from_parser(parser, base)

    cal_kwargs = {}
    if parser.has_section("calibration"):
        sec = parser["calibration"]
        for f in fields(CalibrationParams):
            convert = int if f.name == "min_box_px" else float
            if f.name in sec:
                cal_kwargs[f.name] = _number(sec, f.name, convert, None)
    try:
        calibration = CalibrationParams(**cal_kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    prompt_file = _resolve(base, pipe.get("prompt_file")) if pipe else None
    if prompt_file is not None and not prompt_file.exists():
        raise ConfigError(f"prompt file {prompt_file} does not exist")
    return PipelineConfig(
        backend=backend,
        calibration=calibration,
        output_dir=_resolve(base, pipe.get("output_dir")) if pipe else None,
        parallelism=_number(pipe, "parallelism", int, 4) if pipe else 4,
        mode=(pipe.get("mode", LENIENT) if pipe else LENIENT).strip(),
        prompt_file=prompt_file,
    )
