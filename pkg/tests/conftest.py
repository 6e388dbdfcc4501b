from __future__ import annotations

import random
from pathlib import Path

import numpy as np
import pytest

from uirecon.raster import Image
from uirecon.schema import parse_scaffold

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"
BENCHMARK = FIXTURES / "benchmark"
GOLDEN = FIXTURES / "golden"

_acceptance: dict[str, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(label): one acceptance criterion, summarized at the end")


def pytest_runtest_logreport(report):
    label = dict(report.user_properties).get("acceptance")
    if label is None:
        return
    entry = _acceptance.setdefault(label, {"passed": None, "detail": ""})
    if report.when == "call" or report.failed:
        entry["passed"] = report.passed if entry["passed"] is None else entry["passed"] and report.passed
    detail = dict(report.user_properties).get("detail")
    if detail:
        entry["detail"] = detail


@pytest.fixture(autouse=True)
def _acceptance_label(request, record_property):
    marker = request.node.get_closest_marker("acceptance")
    if marker is not None:
        record_property("acceptance", marker.args[0])


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_acceptance, key=lambda s: int(s.split()[0][2:])):
        entry = _acceptance[label]
        status = "PASS" if entry["passed"] else "FAIL"
        line = f"{status} {label}"
        if entry["detail"]:
            line += f" -- {entry['detail']}"
        terminalreporter.write_line(line)


def benchmark_paths() -> list[Path]:
    return sorted(BENCHMARK.glob("*.yaml"))


def load_benchmark(name: str):
    return parse_scaffold((BENCHMARK / f"{name}.yaml").read_text(encoding="utf-8"))


@pytest.fixture
def rng():
    return random.Random(1234)


def red_rect_image(w=200, h=200, box=(10, 10, 110, 60), bg=(255, 255, 255), fg=(220, 40, 40)) -> Image:
    """White canvas with one exact-color rectangle (the palette's red)."""
    px = np.empty((h, w, 4), dtype=np.uint8)
    px[:, :, :3] = bg
    px[:, :, 3] = 255
    x0, y0, x1, y1 = box
    px[y0:y1, x0:x1, :3] = fg
    return Image.from_array(px)
