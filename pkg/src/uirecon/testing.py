"""Random scaffold generators and the validation fault corpus."""

from __future__ import annotations

import random
from dataclasses import replace
from typing import Callable

from .schema import BBox, Label, Scaffold, UIElement

LEAF_LABELS = ("button", "toggle", "progress_bar", "slider", "text", "icon", "image", "grid")


def _inner_box(rng: random.Random, outer: BBox, min_size: int = 2) -> BBox:
    w = rng.randint(min(min_size, outer.width), outer.width)
    h = rng.randint(min(min_size, outer.height), outer.height)
    x0 = rng.randint(outer.x_min, outer.x_max - w)
    y0 = rng.randint(outer.y_min, outer.y_max - h)
    return BBox(x0, y0, x0 + w, y0 + h)


def clean_scaffold(rng: random.Random, n: int | None = None, canvas: tuple[int, int] = (640, 360),
                   phase: str = "scaffolded") -> Scaffold:
    """A strictly valid scaffold: leaves under panels, every box nested in its parent."""
    n = n if n is not None else rng.randint(3, 20)
    width, height = canvas
    canvas_box = BBox(0, 0, width, height)
    elements: list[UIElement] = []
    panels: list[UIElement] = []
    for i in range(n):
        if i == 0 or (rng.random() < 0.35 and len(panels) < 6):
            label = "panel"
        else:
            label = rng.choice(LEAF_LABELS)
        parent = None if i == 0 or (label == "panel" and rng.random() < 0.2) else rng.choice(panels)
        outer = canvas_box if parent is None else parent.bbox
        el = UIElement(
            id=f"{label}_{i}",
            label=Label(label),
            bbox=_inner_box(rng, outer),
            parent=None if parent is None else parent.id,
            seg_prompt=f"{label} number {i}",
            asset_path=None if label == "panel" or phase == "scaffolded" else f"assets/{label}_{i}.png",
        )
        elements.append(el)
        if label == "panel":
            panels.append(el)
    return Scaffold(width, height, tuple(elements), source_image="random.png", phase=phase)


def noisy_scaffold(rng: random.Random, max_nodes: int = 20, canvas: tuple[int, int] = (320, 240)) -> Scaffold:
    """Random tree with boxes that may leave the canvas or escape their parent.

    Every box still overlaps the canvas, so calibration can always clamp it.
    """
    width, height = canvas
    n = rng.randint(1, max_nodes)
    elements: list[UIElement] = []
    panel_ids: list[str] = []
    for i in range(n):
        label = "panel" if i == 0 or rng.random() < 0.4 else rng.choice(LEAF_LABELS)
        parent = rng.choice(panel_ids) if panel_ids and rng.random() < 0.85 else None
        w = rng.randint(1, width)
        h = rng.randint(1, height)
        x0 = rng.randint(-w + 1, width - 1)
        y0 = rng.randint(-h + 1, height - 1)
        elements.append(UIElement(f"e{i}", Label(label), BBox(x0, y0, x0 + w, y0 + h), parent, f"{label} {i}"))
        if label == "panel":
            panel_ids.append(f"e{i}")
    return Scaffold(width, height, tuple(elements), source_image="noisy.png")


def _clean_base(rng: random.Random) -> Scaffold:
    # root panel with a nested panel and at least two leaves under it
    while True:
        s = clean_scaffold(rng, rng.randint(6, 14))
        leaves = [e for e in s.elements if not e.label.is_container]
        nested = [e for e in s.elements if e.label.is_container and e.parent is not None]
        if len(leaves) >= 2 and nested:
            return s


def _swap(s: Scaffold, el_id: str, **changes) -> Scaffold:
    return s.with_elements(replace(e, **changes) if e.id == el_id else e for e in s.elements)


def fault_cycle(rng):
    s = _clean_base(rng)
    child = next(e for e in s.elements if e.label.is_container and e.parent is not None)
    return _swap(s, child.parent, parent=child.id), s


def fault_dangling(rng):
    s = _clean_base(rng)
    el = rng.choice([e for e in s.elements if e.parent is not None])
    return _swap(s, el.id, parent=f"ghost_{rng.randint(0, 999)}"), s


def fault_dup_id(rng):
    s = _clean_base(rng)
    a, b = rng.sample([e for e in s.elements if not e.label.is_container], 2)
    return s.with_elements(replace(e, id=a.id) if e is b else e for e in s.elements), s


def fault_inverted(rng):
    s = _clean_base(rng)
    el = rng.choice([e for e in s.elements if not e.label.is_container])
    box = el.bbox
    inverted = BBox(box.x_max, box.y_min, box.x_min, box.y_max) if rng.random() < 0.5 else \
        BBox(box.x_min, box.y_max, box.x_max, box.y_min)
    return _swap(s, el.id, bbox=inverted), s


def fault_oob(rng):
    s = _clean_base(rng)
    root = s.elements[0]
    grown = replace(root.bbox, x_max=s.canvas_width + rng.randint(1, 40))
    return _swap(s, root.id, bbox=grown), s


def fault_missing_field(rng):
    s = _clean_base(rng)
    el = rng.choice(s.elements)
    return _swap(s, el.id, seg_prompt=""), s


def fault_child_of_leaf(rng):
    s = _clean_base(rng)
    leaf = rng.choice([e for e in s.elements if not e.label.is_container])
    extra = UIElement("leaf_child", Label("icon"), leaf.bbox, leaf.id, "icon on top of a widget")
    faulty = s.with_elements(s.elements + (extra,))
    fixed = s.with_elements(s.elements + (replace(extra, parent=leaf.parent),))
    return faulty, fixed


FAULTS: dict[str, Callable[[random.Random], tuple[Scaffold, Scaffold]]] = {
    "E_CYCLE": fault_cycle,
    "E_DANGLING_PARENT": fault_dangling,
    "E_DUP_ID": fault_dup_id,
    "E_BBOX_INVERTED": fault_inverted,
    "E_BBOX_OOB": fault_oob,
    "E_MISSING_FIELD": fault_missing_field,
    "E_CHILD_OF_LEAF": fault_child_of_leaf,
}


def fault_corpus(seed: int = 0, per_code: int = 3) -> list[tuple[str, Scaffold, Scaffold]]:
    """``(code, faulty, reverted)`` triples, ``per_code`` per registered fault."""
    rng = random.Random(seed)
    return [(code, *make(rng)) for code, make in FAULTS.items() for _ in range(per_code)]
