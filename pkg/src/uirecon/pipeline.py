"""Three-stage run: scaffold inference, grounding + extraction, UXML/USS synthesis."""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path, PurePosixPath

from .assets import extract_sprite, manifest_entry, recover_background, sprite_png_bytes
from .calibration import CalibrationParams, calibrate, iou
from .config import PipelineConfig
from .diagnostics import BackendError, Diagnostic, SchemaError
from .fsutil import atomic_write
from .graph import assign_z_order, build_graph
from .naming import assign_names
from .perception import Backends, CallCounter, build_backends, counted, load_prompt
from .perception.base import DetectionResult
from .raster import Image, Mask
from .schema import LENIENT, STRICT, BBox, Scaffold, serialize_scaffold, validate
from .synthesis import compile as compile_ui
from .synthesis import default_document_name


def pick_detection(scaffold_box: BBox, found: DetectionResult) -> BBox | None:
    """The detection overlapping the scaffold box most (first in score order on ties)."""
    best, best_iou = None, 0
    for d in found:
        value = iou(scaffold_box, d.bbox) if scaffold_box.is_valid else 0
        if value > best_iou:
            best, best_iou = d.bbox, value
    return best


def detect_all(s: Scaffold, img: Image, detector, parallelism: int = 4) -> dict[str, BBox | None]:
    todo = [el for el in s.elements if el.seg_prompt.strip()]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        results = list(pool.map(lambda el: detector.detect(img, el.seg_prompt), todo))
    return {el.id: pick_detection(el.bbox, found) for el, found in zip(todo, results)}


def sprite_path(s: Scaffold) -> dict[str, str]:
    """Relative sprite path per non-panel element (its asset_path, or assets/<name>.png)."""
    names = assign_names(el.id for el in assign_z_order(build_graph(s, LENIENT)).elements())
    return {el.id: el.asset_path or f"assets/{names[el.id]}.png"
            for el in s.elements if not el.label.is_container}


def extract_all(s: Scaffold, img: Image, backends: Backends, out_dir: Path,
                parallelism: int = 4) -> tuple[list[dict], Image]:
    """Segment and write every non-panel sprite, then inpaint their union into a clean background."""
    paths = sprite_path(s)
    todo = [el for el in s.elements if el.id in paths]
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        masks = list(pool.map(lambda el: backends.segmenter.segment(img, el.bbox, el.seg_prompt or el.label.raw),
                              todo))
    entries = []
    union = Mask.empty(img.width, img.height)
    for el, mask in zip(todo, masks):
        sprite = extract_sprite(img, mask, el.id)
        rel = paths[el.id]
        atomic_write(out_dir / PurePosixPath(rel), sprite_png_bytes(sprite))
        entries.append(manifest_entry(sprite, rel))
        union = union.union(mask)
    background = recover_background(img, union, backends.inpainter)
    return entries, background


@dataclass
class RunReport:
    image: str
    started_at: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())
    status: str = "running"
    failed_stage: str | None = None
    error: str | None = None
    stages: list[dict] = field(default_factory=list)
    backend_calls: dict[str, int] = field(default_factory=dict)
    diagnostics: list[dict] = field(default_factory=list)
    artifacts: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, ensure_ascii=False) + "\n"


class StageFailure(Exception):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"{stage}: {cause}")
        self.stage = stage
        self.cause = cause


def run_pipeline(image_path: str | Path, config: PipelineConfig, out_dir: str | Path,
                 backends: Backends | None = None, log=None) -> RunReport:
    """Run all three stages, writing artifacts into ``out_dir``.

    Always writes ``run_report.json``. On failure, raises StageFailure after
    the report and every artifact produced so far are on disk.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = RunReport(image=str(image_path))
    counter = CallCounter()
    backends = counted(backends or build_backends(config.backend), counter)
    notes: list[Diagnostic] = []
    emit = log or (lambda stage, msg: None)

    def write(rel: str, blob) -> None:
        atomic_write(out_dir / rel, blob)
        report.artifacts.append(rel)

    def stage(name: str, fn):
        t0 = time.perf_counter()
        emit(name, "start")
        try:
            result = fn()
        except Exception as exc:
            report.stages.append({"name": name, "status": "failed", "seconds": round(time.perf_counter() - t0, 4)})
            raise StageFailure(name, exc) from exc
        report.stages.append({"name": name, "status": "ok", "seconds": round(time.perf_counter() - t0, 4)})
        emit(name, "done")
        return result

    try:
        img = Image.load(image_path)
        prompt = load_prompt(config.prompt_file)

        def stage1() -> Scaffold:
            s = backends.scaffold.infer(img, prompt.text, notes)
            if not s.source_image:
                s = s.with_elements(s.elements, source_image=Path(image_path).name)
            write("scaffold.yaml", serialize_scaffold(s, "yaml"))
            if config.mode == STRICT:
                # strict runs stop here instead of letting calibration repair the scaffold
                problems = [d for d in validate(s, STRICT) if d.is_error]
                if problems:
                    raise SchemaError(problems[0])
            return s

        scaffold = stage("stage1_scaffold", stage1)

        def stage2() -> Scaffold:
            detections = detect_all(scaffold, img, backends.detector, config.parallelism)
            calibrated = calibrate(scaffold, detections, config.calibration, diagnostics=notes)
            write("scaffold.calibrated.yaml", serialize_scaffold(calibrated, "yaml"))
            entries, background = extract_all(calibrated, img, backends, out_dir, config.parallelism)
            report.artifacts.extend(e["asset_path"] for e in entries)
            write("assets/sprites.json", json.dumps(entries, separators=(",", ":")) + "\n")
            write("background.png", background.to_png_bytes())
            return calibrated

        calibrated = stage("stage2_grounding", stage2)

        def stage3() -> None:
            name = default_document_name(calibrated)
            ui = compile_ui(calibrated, name)
            write(f"{name}.uxml", ui.uxml_text)
            write(f"{name}.uss", ui.uss_text)
            write("manifest.json", ui.manifest_json() + "\n")

        stage("stage3_synthesis", stage3)
        report.status = "ok"
    except StageFailure as failure:
        report.status = "failed"
        report.failed_stage = failure.stage
        report.error = f"{type(failure.cause).__name__}: {failure.cause}"
        raise
    finally:
        report.backend_calls = counter.as_dict()
        report.diagnostics = [d.to_dict() for d in notes]
        atomic_write(out_dir / "run_report.json", report.to_json())
    return report


def is_backend_failure(exc: BaseException) -> bool:
    return isinstance(exc, StageFailure) and isinstance(exc.cause, BackendError)


__all__ = ["RunReport", "StageFailure", "run_pipeline", "detect_all", "extract_all", "pick_detection",
           "sprite_path", "CalibrationParams"]
