"""Geometric refinement of a scaffold: clamp, fuse with detections, enforce nesting."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Mapping

from .diagnostics import CalibrationError, Diagnostic
from .graph import ROOT_ID, SceneGraph, assign_z_order, build_graph, from_parent_map
from .naming import assign_names
from .schema import LENIENT, BBox, Scaffold, UIElement


@dataclass(frozen=True)
class CalibrationParams:
    containment_tolerance_frac: float = 0.02
    fusion_iou_threshold: float = 0.5
    reassign_overlap_frac: float = 0.8
    min_box_px: int = 1

    def __post_init__(self) -> None:
        for name in ("containment_tolerance_frac", "fusion_iou_threshold", "reassign_overlap_frac"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        if self.min_box_px < 1:
            raise ValueError("min_box_px must be >= 1")


def iou(a: BBox, b: BBox) -> Fraction:
    """Exact intersection-over-union of two valid boxes."""
    inter = a.intersection_area(b)
    union = a.area + b.area - inter
    return Fraction(inter, union) if union else Fraction(0)


def clamp_box(b: BBox, canvas_w: int, canvas_h: int, min_box_px: int = 1,
              diagnostics: list | None = None, element_id: str | None = None) -> BBox:
    """Clip ``b`` into the canvas. A collapsed dimension is regrown inward to ``min_box_px``."""
    if canvas_w <= 0 or canvas_h <= 0:
        raise CalibrationError("canvas dimensions must be positive")
    if b.x_min > b.x_max or b.y_min > b.y_max:
        raise CalibrationError(f"inverted box {b.to_list()} for {element_id or 'element'}")
    if b.x_min >= canvas_w or b.y_min >= canvas_h or b.x_max <= 0 or b.y_max <= 0:
        raise CalibrationError(f"box {b.to_list()} lies entirely outside the {canvas_w}x{canvas_h} canvas")

    def axis(lo: int, hi: int, size: int) -> tuple[int, int, bool]:
        lo, hi = max(0, min(lo, size)), max(0, min(hi, size))
        if hi - lo >= min_box_px:
            return lo, hi, False
        need = min(min_box_px, size)
        if lo + need <= size:
            return lo, lo + need, True
        return size - need, size, True

    x0, x1, grew_x = axis(b.x_min, b.x_max, canvas_w)
    y0, y1, grew_y = axis(b.y_min, b.y_max, canvas_h)
    out = BBox(x0, y0, x1, y1)
    if (grew_x or grew_y) and diagnostics is not None:
        diagnostics.append(Diagnostic("W_BOX_EXPANDED", f"{b.to_list()} clamped to {out.to_list()}", element_id))
    return out


def fuse_boxes(scaffold_box: BBox, detected: BBox | None, params: CalibrationParams = CalibrationParams(),
               diagnostics: list | None = None, element_id: str | None = None) -> BBox:
    """Detector box wins when it agrees with the scaffold box (IoU >= threshold)."""
    if detected is None:
        return scaffold_box
    if detected.is_valid and scaffold_box.is_valid and iou(scaffold_box, detected) >= params.fusion_iou_threshold:
        return detected
    if diagnostics is not None:
        diagnostics.append(Diagnostic(
            "W_FUSION_REJECTED",
            f"detection {detected.to_list()} disagrees with scaffold box {scaffold_box.to_list()}",
            element_id,
        ))
    return scaffold_box


def _within_tolerance(child: BBox, parent: BBox, frac: float) -> bool:
    tol_x = frac * parent.width
    tol_y = frac * parent.height
    return (
        parent.x_min - child.x_min <= tol_x
        and child.x_max - parent.x_max <= tol_x
        and parent.y_min - child.y_min <= tol_y
        and child.y_max - parent.y_max <= tol_y
    )


def enforce_containment(g: SceneGraph, params: CalibrationParams = CalibrationParams()) -> SceneGraph:
    """Make every child box lie inside its parent's box.

    Small escapes (within ``containment_tolerance_frac`` of the parent's
    extent on every edge) are clipped. Larger ones move the child to the
    smallest container that already holds ``reassign_overlap_frac`` of its
    area. Only panels and the canvas root are candidates, and only those whose
    box is already final, so nodes are settled top-down and the result needs
    no second pass.
    """
    canvas = g.canvas_box
    elements: dict[str, UIElement] = {}
    parent_of: dict[str, str | None] = {}
    order: list[str] = []
    notes = list(g.diagnostics)

    settled: dict[str, BBox] = {ROOT_ID: canvas}
    containers: list[tuple[int, int, str]] = [(canvas.area, 1, ROOT_ID)]

    queue = deque((c, ROOT_ID) for c in g.root.children)
    while queue:
        node, parent_id = queue.popleft()
        el = node.element
        parent_box = settled[parent_id]
        box = el.bbox
        new_parent = parent_id
        if not parent_box.contains(box):
            clipped = box.intersection(parent_box)
            if clipped is None or not _within_tolerance(box, parent_box, params.containment_tolerance_frac):
                need = params.reassign_overlap_frac * box.area
                for _, _, cand in sorted(containers):
                    cand_box = settled[cand]
                    if cand_box.intersection_area(box) >= need and cand_box.intersection(box) is not None:
                        new_parent = cand
                        break
                clipped = box.intersection(settled[new_parent])
                if new_parent != parent_id:
                    notes.append(Diagnostic(
                        "W_REPARENTED",
                        f"moved from {parent_id if parent_id != ROOT_ID else 'root'} to "
                        f"{new_parent if new_parent != ROOT_ID else 'root'}",
                        el.id,
                    ))
            box = clipped
        new_parent_ref = None if new_parent == ROOT_ID else new_parent
        if box != el.bbox or new_parent_ref != el.parent:
            el = replace(el, bbox=box, parent=new_parent_ref)
        elements[el.id] = el
        parent_of[el.id] = new_parent_ref
        order.append(el.id)
        settled[el.id] = box
        if el.label.is_container:
            containers.append((box.area, 0, el.id))
        queue.extend((c, el.id) for c in node.children)

    return from_parent_map(elements, parent_of, g.canvas_width, g.canvas_height, order, tuple(notes))


def calibrate(s: Scaffold, detections: Mapping[str, BBox | None] | None = None,
              params: CalibrationParams = CalibrationParams(), *, asset_dir: str = "assets",
              diagnostics: list | None = None) -> Scaffold:
    """Turn a scaffold into a calibrated one.

    Boxes are clamped to the canvas, fused with ``detections`` (element id to
    detector box), nested inside their parents and z-ordered. Elements keep
    their list order. Non-panel elements without an asset path get
    ``<asset_dir>/<name>.png``, the file the extraction stage writes.
    """
    detections = detections or {}
    notes: list[Diagnostic] = []
    w, h = s.canvas_width, s.canvas_height
    refined = []
    for el in s.elements:
        box = clamp_box(el.bbox, w, h, params.min_box_px, notes, el.id)
        found = detections.get(el.id)
        if found is not None:
            try:
                found = clamp_box(found, w, h, params.min_box_px, notes, el.id)
            except CalibrationError:
                notes.append(Diagnostic("W_FUSION_REJECTED", f"detection {found.to_list()} is off the canvas",
                                        el.id))
                found = None
        box = fuse_boxes(box, found, params, notes, el.id)
        refined.append(replace(el, bbox=box) if box != el.bbox else el)

    staged = s.with_elements(refined)
    g = build_graph(staged, LENIENT)
    notes.extend(g.diagnostics)
    g = enforce_containment(assign_z_order(g), params)
    notes.extend(d for d in g.diagnostics if d.code == "W_REPARENTED")
    g = assign_z_order(g)

    names = assign_names(el.id for el in g.elements())
    settled = g.parent_of()
    by_id = {el.id: el for el in g.elements()}
    out = []
    for el in s.elements:
        new = by_id[el.id]
        if new.parent != settled[el.id]:
            new = replace(new, parent=settled[el.id])
        if not new.label.is_container and not new.asset_path:
            new = replace(new, asset_path=f"{asset_dir}/{names[el.id]}.png")
        out.append(new)
    if diagnostics is not None:
        diagnostics.extend(notes)
    return s.with_elements(out, phase="calibrated")
