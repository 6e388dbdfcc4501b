"""Benchmark harness: match predictions to ground truth and score them."""

from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.optimize import linear_sum_assignment

from .calibration import iou
from .diagnostics import Diagnostic, ParseError
from .schema import STRICT, BBox, Label, Scaffold, UIElement, serialize_scaffold, to_document, validate
from .synthesis import parse_uxml, roundtrip_label

DESIGN_JSON = "design_json"
UXML_PAIR = "uxml_pair"
PAPER_REDUCTION_CLAIM = (0.20, 0.30)
_EPS = 1e-9


@dataclass(frozen=True)
class GroundTruth:
    scaffold: Scaffold
    kind: str = DESIGN_JSON
    diagnostics: tuple[Diagnostic, ...] = ()

    @property
    def label_key(self) -> Callable[[Label], str]:
        # UXML only preserves the coarse label set
        return roundtrip_label if self.kind == UXML_PAIR else (lambda label: label.key)


@dataclass(frozen=True)
class MatchedPair:
    pred_id: str
    truth_id: str
    iou: float


@dataclass(frozen=True)
class EvalReport:
    matched: tuple[MatchedPair, ...]
    unmatched_pred: tuple[str, ...]
    unmatched_truth: tuple[str, ...]
    mean_matched_iou: float
    detection_recall: float
    detection_precision: float
    parent_consistency: float
    serialization_ratio: float

    def to_dict(self) -> dict:
        out = asdict(self)
        out["matched"] = [asdict(p) for p in self.matched]
        out["unmatched_pred"] = list(self.unmatched_pred)
        out["unmatched_truth"] = list(self.unmatched_truth)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, sort_keys=True, separators=(",", ":"))

    def format_table(self) -> str:
        rows = [
            ("matched", f"{len(self.matched)}"),
            ("unmatched pred", f"{len(self.unmatched_pred)}"),
            ("unmatched truth", f"{len(self.unmatched_truth)}"),
            ("mean matched IoU", f"{self.mean_matched_iou:.4f}"),
            ("detection recall", f"{self.detection_recall:.4f}"),
            ("detection precision", f"{self.detection_precision:.4f}"),
            ("parent consistency", f"{self.parent_consistency:.4f}"),
            ("byte ratio (token proxy)", f"{self.serialization_ratio:.4f}"),
        ]
        width = max(len(k) for k, _ in rows)
        lines = [f"{k.ljust(width)}  {v}" for k, v in rows]
        if self.matched:
            lines.append("")
            lines.append("pred_id -> truth_id  iou")
            lines.extend(f"{p.pred_id} -> {p.truth_id}  {p.iou:.4f}" for p in self.matched)
        return "\n".join(lines)


def _as_scaffold(truth) -> Scaffold:
    return truth.scaffold if isinstance(truth, GroundTruth) else truth


def _label_key_for(truth) -> Callable[[Label], str]:
    return truth.label_key if isinstance(truth, GroundTruth) else (lambda label: label.key)


def _optimum(weights: np.ndarray, rows: list[int], cols: list[int]) -> float:
    if not rows or not cols:
        return 0.0
    sub = weights[np.ix_(rows, cols)]
    r, c = linear_sum_assignment(sub, maximize=True)
    return float(sub[r, c].sum())


def match_elements(pred: Scaffold, truth, min_iou: float = 0.5) -> list[MatchedPair]:
    """Maximum-total-IoU one-to-one matching between same-label elements.

    Pairs below ``min_iou`` are not eligible. Among equally good matchings the
    one whose sorted ``(pred_id, truth_id)`` list is lexicographically
    smallest wins.
    """
    truth_s = _as_scaffold(truth)
    key = _label_key_for(truth)
    preds = sorted(pred.elements, key=lambda e: e.id)
    truths = sorted(truth_s.elements, key=lambda e: e.id)
    weights = np.zeros((len(preds), len(truths)))
    exact: dict[tuple[int, int], float] = {}
    for i, p in enumerate(preds):
        for j, t in enumerate(truths):
            if key(p.label) != key(t.label) or not (p.bbox.is_valid and t.bbox.is_valid):
                continue
            value = iou(p.bbox, t.bbox)
            if value > 0 and value >= min_iou:
                weights[i, j] = float(value)
                exact[i, j] = float(value)

    rows = list(range(len(preds)))
    cols = list(range(len(truths)))
    remaining = _optimum(weights, rows, cols)
    pairs = []
    for pos, i in enumerate(rows):
        rest = rows[pos + 1:]
        for j in sorted(c for c in cols if (i, c) in exact):
            others = [c for c in cols if c != j]
            total = weights[i, j] + _optimum(weights, rest, others)
            if abs(total - remaining) <= _EPS * max(1.0, remaining):
                pairs.append(MatchedPair(preds[i].id, truths[j].id, exact[i, j]))
                remaining -= weights[i, j]
                cols = others
                break
    return pairs


def _parent_map(s: Scaffold) -> dict[str, str | None]:
    ids = {e.id for e in s.elements}
    return {e.id: (e.parent if e.parent in ids else None) for e in s.elements}


def evaluate(pred: Scaffold, truth, min_iou: float = 0.5) -> EvalReport:
    truth_s = _as_scaffold(truth)
    pairs = match_elements(pred, truth, min_iou)
    to_truth = {p.pred_id: p.truth_id for p in pairs}
    pred_parent = _parent_map(pred)
    truth_parent = _parent_map(truth_s)

    consistent = 0
    for p in pairs:
        pp, tp = pred_parent[p.pred_id], truth_parent[p.truth_id]
        if (pp is None and tp is None) or (pp is not None and to_truth.get(pp) == tp and tp is not None):
            consistent += 1

    n_pred, n_truth, n = len(pred.elements), len(truth_s.elements), len(pairs)
    both_empty = n_pred == 0 and n_truth == 0
    matched_pred = {p.pred_id for p in pairs}
    matched_truth = {p.truth_id for p in pairs}
    return EvalReport(
        matched=tuple(pairs),
        unmatched_pred=tuple(e.id for e in pred.elements if e.id not in matched_pred),
        unmatched_truth=tuple(e.id for e in truth_s.elements if e.id not in matched_truth),
        mean_matched_iou=(sum(p.iou for p in pairs) / n) if n else (1.0 if both_empty else 0.0),
        detection_recall=n / n_truth if n_truth else 1.0,
        detection_precision=n / n_pred if n_pred else 1.0,
        parent_consistency=consistent / n if n else (1.0 if both_empty else 0.0),
        serialization_ratio=measure_serialization_efficiency(pred).ratio,
    )


@dataclass(frozen=True)
class SerializationStats:
    yaml_bytes: int
    json_bytes: int
    ratio: float
    # context only: indented JSON (indent=2), the style models usually emit
    indented_json_bytes: int = 0
    ratio_vs_indented: float = 0.0

    @property
    def reduction(self) -> float:
        return 1.0 - self.ratio

    def to_dict(self) -> dict:
        return asdict(self)


def measure_serialization_efficiency(s: Scaffold) -> SerializationStats:
    yaml_bytes = len(serialize_scaffold(s, "yaml").encode("utf-8"))
    json_bytes = len(serialize_scaffold(s, "canonical_json").encode("utf-8"))
    indented = len(json.dumps(to_document(s), ensure_ascii=False, indent=2).encode("utf-8"))
    return SerializationStats(yaml_bytes, json_bytes, yaml_bytes / json_bytes, indented, yaml_bytes / indented)


# --------------------------------------------------------------------------
# ground-truth loaders

_PANEL_TYPES = {"FRAME", "GROUP", "COMPONENT", "COMPONENT_SET", "INSTANCE", "SECTION"}
_TEXT_TYPES = {"TEXT"}
_AUTO_LAYOUT = {"HORIZONTAL", "VERTICAL", "GRID"}


def _design_label(node: dict) -> str:
    if node.get("label"):
        return str(node["label"])
    kind = str(node.get("type", "")).upper()
    if kind in _PANEL_TYPES:
        return "panel"
    if kind in _TEXT_TYPES:
        return "text"
    return "image"


def _design_box(node: dict, origin: tuple[float, float]) -> BBox:
    box = node["absoluteBoundingBox"]
    x0 = round(box["x"] - origin[0])
    y0 = round(box["y"] - origin[1])
    return BBox(x0, y0, x0 + round(box["width"]), y0 + round(box["height"]))


def design_json_to_scaffold(data: dict) -> tuple[Scaffold, list[Diagnostic]]:
    doc = data.get("document")
    if not isinstance(doc, dict) or "absoluteBoundingBox" not in doc:
        raise ParseError("design JSON needs a 'document' node with an absoluteBoundingBox")
    frame = doc["absoluteBoundingBox"]
    origin = (frame["x"], frame["y"])
    notes: list[Diagnostic] = []
    elements: list[UIElement] = []
    used: set[str] = set()

    def visit(node: dict, parent_id: str | None) -> None:
        for child in node.get("children", []):
            if child.get("visible", True) is False:
                continue
            name = str(child.get("name") or child.get("id"))
            el_id = name if name not in used else f"{name}#{child.get('id')}"
            if child.get("layoutMode", "NONE") in _AUTO_LAYOUT:
                notes.append(Diagnostic(
                    "W_UNSUPPORTED_FEATURE",
                    f"auto-layout node ({child['layoutMode']}) skipped; children reattached", el_id))
                visit(child, parent_id)
                continue
            if "absoluteBoundingBox" not in child:
                notes.append(Diagnostic("W_UNSUPPORTED_FEATURE", "node has no absolute bounding box", el_id))
                continue
            used.add(el_id)
            elements.append(UIElement(el_id, Label(_design_label(child)), _design_box(child, origin),
                                      parent_id, name, child.get("assetPath")))
            visit(child, el_id)

    visit(doc, None)
    s = Scaffold(
        canvas_width=round(frame["width"]),
        canvas_height=round(frame["height"]),
        elements=tuple(elements),
        source_image=str(data.get("sourceImage", "")),
        phase="scaffolded",
    )
    return s, notes


def scaffold_to_design_json(s: Scaffold, name: str = "") -> dict:
    """Export a scaffold in the design-JSON ground-truth subset."""
    kids: dict[str | None, list[UIElement]] = {}
    for el in s.elements:
        kids.setdefault(el.parent, []).append(el)

    def node(el: UIElement) -> dict:
        out = {
            "id": el.id,
            "name": el.id,
            "type": "FRAME" if el.label.is_container else ("TEXT" if el.label.kind == "text" else "RECTANGLE"),
            "label": el.label.raw,
            "absoluteBoundingBox": {"x": el.bbox.x_min, "y": el.bbox.y_min,
                                    "width": el.bbox.width, "height": el.bbox.height},
        }
        children = [node(c) for c in kids.get(el.id, [])]
        if children:
            out["children"] = children
        return out

    return {
        "name": name or s.source_image,
        "sourceImage": s.source_image,
        "document": {
            "id": "0:0",
            "name": name or "canvas",
            "type": "FRAME",
            "absoluteBoundingBox": {"x": 0, "y": 0, "width": s.canvas_width, "height": s.canvas_height},
            "children": [node(el) for el in kids.get(None, [])],
        },
    }


def _find_stylesheet(uxml_path: Path, uxml_text: str) -> Path:
    m = re.search(r"<(?:\w+:)?Style\s+[^>]*src\s*=\s*\"([^\"]+)\"", uxml_text)
    if m:
        candidate = uxml_path.parent / m.group(1)
        if candidate.exists():
            return candidate
    candidate = uxml_path.with_suffix(".uss")
    if candidate.exists():
        return candidate
    raise ParseError(f"no stylesheet found for {uxml_path}")


def uxml_pair_to_scaffold(uxml_text: str, uss_text: str) -> tuple[Scaffold, list[Diagnostic]]:
    g = parse_uxml(uxml_text, uss_text)
    elements = tuple(
        UIElement(el.id, el.label, el.bbox, el.parent, el.id, el.asset_path) for el in g.elements()
    )
    s = Scaffold(max(g.canvas_width, 1), max(g.canvas_height, 1), elements, phase="scaffolded")
    return s, list(g.diagnostics)


def load_ground_truth(path: str | Path, kind: str = DESIGN_JSON) -> GroundTruth:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if kind == DESIGN_JSON:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed design JSON {path}: {exc}") from exc
        s, notes = design_json_to_scaffold(data)
    elif kind == UXML_PAIR:
        uss = _find_stylesheet(path, text).read_text(encoding="utf-8")
        s, notes = uxml_pair_to_scaffold(text, uss)
    else:
        raise ValueError(f"unknown ground-truth kind {kind!r}")
    notes.extend(validate(s, STRICT))
    return GroundTruth(s, kind, tuple(notes))
