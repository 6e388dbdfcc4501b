"""The YAML scaffold: data model, parsing, deterministic serialization, validation.

A scaffold is a flat list of UI elements. Hierarchy is expressed through
``parent`` references, geometry through canvas-absolute ``bbox_2d`` boxes in
``[x_min, y_min, x_max, y_max]`` order with exclusive max edges.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Any, Iterable, Mapping, Sequence

import yaml

from .diagnostics import ContractError, Diagnostic, ParseError, SchemaError, errors

KNOWN_LABELS = (
    "panel",
    "button",
    "toggle",
    "progress_bar",
    "slider",
    "text",
    "icon",
    "image",
    "grid",
)
FALLBACK = "fallback"
PHASES = ("scaffolded", "grounded", "calibrated")
STRICT = "strict"
LENIENT = "lenient"

ELEMENT_KEYS = ("id", "label", "parent", "bbox_2d", "seg_prompt", "asset_path")
TOP_KEYS = ("canvas_width", "canvas_height", "source_image", "phase", "elements")


@dataclass(frozen=True, order=True)
class BBox:
    x_min: int
    y_min: int
    x_max: int
    y_max: int

    @classmethod
    def from_seq(cls, values: Sequence[int]) -> "BBox":
        x0, y0, x1, y1 = values
        return cls(int(x0), int(y0), int(x1), int(y1))

    def to_list(self) -> list[int]:
        return [self.x_min, self.y_min, self.x_max, self.y_max]

    @property
    def width(self) -> int:
        return self.x_max - self.x_min

    @property
    def height(self) -> int:
        return self.y_max - self.y_min

    @property
    def area(self) -> int:
        return self.width * self.height if self.is_valid else 0

    @property
    def is_valid(self) -> bool:
        return self.x_min < self.x_max and self.y_min < self.y_max

    def contains(self, other: "BBox") -> bool:
        return (
            self.x_min <= other.x_min
            and self.y_min <= other.y_min
            and other.x_max <= self.x_max
            and other.y_max <= self.y_max
        )

    def intersection(self, other: "BBox") -> "BBox | None":
        box = BBox(
            max(self.x_min, other.x_min),
            max(self.y_min, other.y_min),
            min(self.x_max, other.x_max),
            min(self.y_max, other.y_max),
        )
        return box if box.is_valid else None

    def intersection_area(self, other: "BBox") -> int:
        inter = self.intersection(other)
        return inter.area if inter else 0

    def within_canvas(self, width: int, height: int) -> bool:
        return self.x_min >= 0 and self.y_min >= 0 and self.x_max <= width and self.y_max <= height


@dataclass(frozen=True)
class Label:
    """Element label. Known tags match case-insensitively; ``raw`` is kept verbatim."""

    raw: str

    @property
    def kind(self) -> str:
        lowered = self.raw.strip().lower()
        return lowered if lowered in KNOWN_LABELS else FALLBACK

    @property
    def is_fallback(self) -> bool:
        return self.kind == FALLBACK

    @property
    def key(self) -> str:
        """Comparison key: the canonical kind for known tags, the raw tag otherwise."""
        return self.raw if self.is_fallback else self.kind

    @property
    def is_container(self) -> bool:
        return self.kind == "panel"

    def __str__(self) -> str:
        return self.raw


@dataclass(frozen=True)
class UIElement:
    id: str
    label: Label
    bbox: BBox
    parent: str | None = None
    seg_prompt: str = ""
    asset_path: str | None = None
    extras: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Scaffold:
    canvas_width: int
    canvas_height: int
    elements: tuple[UIElement, ...] = ()
    source_image: str = ""
    phase: str = "scaffolded"
    extras: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "elements", tuple(self.elements))

    @property
    def canvas_box(self) -> BBox:
        return BBox(0, 0, self.canvas_width, self.canvas_height)

    def by_id(self) -> dict[str, UIElement]:
        table: dict[str, UIElement] = {}
        for el in self.elements:
            table.setdefault(el.id, el)
        return table

    def with_elements(self, elements: Iterable[UIElement], **changes) -> "Scaffold":
        return replace(self, elements=tuple(elements), **changes)


# --------------------------------------------------------------------------
# parsing


class _Loader(yaml.SafeLoader):
    pass


# Timestamps would not survive a JSON round trip; keep them as strings.
_Loader.yaml_implicit_resolvers = {
    ch: [(tag, rx) for tag, rx in resolvers if tag != "tag:yaml.org,2002:timestamp"]
    for ch, resolvers in yaml.SafeLoader.yaml_implicit_resolvers.items()
}


def load_yaml(text: str) -> Any:
    try:
        return yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        raise ParseError(f"malformed YAML: {exc}") from exc


def _schema_error(message: str, element_id: str | None = None, payload: str | None = None) -> SchemaError:
    return SchemaError(Diagnostic("E_MISSING_FIELD", message, element_id), payload)


def _is_int(value: Any) -> bool:
    if isinstance(value, bool):
        return False
    return isinstance(value, int) or (isinstance(value, float) and value.is_integer())


def _parse_bbox(value: Any, where: str) -> BBox:
    if not isinstance(value, (list, tuple)) or len(value) != 4 or not all(_is_int(v) for v in value):
        raise _schema_error(f"bbox_2d must be a list of 4 integers, got {value!r}", where)
    return BBox.from_seq(value)


def _opt_str(raw: Mapping, key: str, where: str | None) -> str | None:
    value = raw.get(key)
    if value is None:
        return None
    if not isinstance(value, str):
        raise _schema_error(f"{key} must be a string, got {type(value).__name__}", where)
    return value


def parse_document(data: Any, *, payload: str | None = None, canvas: tuple[int, int] | None = None,
                   source_image: str | None = None) -> Scaffold:
    """Build a Scaffold from already-loaded YAML/JSON data."""
    if not isinstance(data, Mapping):
        raise _schema_error("scaffold document must be a mapping", payload=payload)
    doc = dict(data)
    if canvas is not None:
        doc.setdefault("canvas_width", canvas[0])
        doc.setdefault("canvas_height", canvas[1])
    if source_image is not None:
        doc.setdefault("source_image", source_image)

    for key in ("canvas_width", "canvas_height", "elements"):
        if key not in doc:
            raise _schema_error(f"missing top-level field {key!r}", payload=payload)
    width, height = doc["canvas_width"], doc["canvas_height"]
    if not (_is_int(width) and _is_int(height)):
        raise _schema_error("canvas_width and canvas_height must be integers", payload=payload)
    if width <= 0 or height <= 0:
        raise _schema_error("canvas dimensions must be positive", payload=payload)
    phase = doc.get("phase", "scaffolded")
    if phase not in PHASES:
        raise _schema_error(f"phase must be one of {PHASES}, got {phase!r}", payload=payload)
    src = doc.get("source_image", "")
    if src is None:
        src = ""
    if not isinstance(src, str):
        raise _schema_error("source_image must be a string", payload=payload)
    raw_elements = doc["elements"]
    if raw_elements is None:
        raw_elements = []
    if not isinstance(raw_elements, list):
        raise _schema_error("elements must be a list", payload=payload)

    elements = _parse_elements(raw_elements, payload)
    extras = {k: v for k, v in doc.items() if k not in TOP_KEYS}
    return Scaffold(
        canvas_width=int(width),
        canvas_height=int(height),
        elements=tuple(elements),
        source_image=src,
        phase=phase,
        extras=extras,
    )


def _parse_elements(raw_elements: list, payload: str | None) -> list[UIElement]:
    # id-less documents: ids become <label>_<index>, and parents that name a
    # label are resolved to the synthesized id when that label is unique.
    synthesized: dict[str, list[str]] = {}
    staged = []
    for index, raw in enumerate(raw_elements):
        if not isinstance(raw, Mapping):
            raise _schema_error(f"element #{index} must be a mapping", payload=payload)
        label_value = raw.get("label")
        for key in ("label", "bbox_2d"):
            if key not in raw or raw[key] is None:
                where = raw.get("id") if isinstance(raw.get("id"), str) else f"#{index}"
                raise _schema_error(f"element is missing required field {key!r}", where, payload)
        if not isinstance(label_value, str) or not label_value:
            raise _schema_error("label must be a nonempty string", f"#{index}", payload)
        if "id" in raw and raw["id"] is not None:
            el_id = raw["id"]
            if not isinstance(el_id, str):
                raise _schema_error(f"id must be a string, got {type(el_id).__name__}", f"#{index}", payload)
            was_synth = False
        else:
            el_id = f"{label_value}_{index}"
            synthesized.setdefault(label_value, []).append(el_id)
            was_synth = True
        staged.append((raw, el_id, was_synth))

    explicit_ids = {el_id for _, el_id, synth in staged if not synth}
    elements = []
    for raw, el_id, _ in staged:
        parent = _opt_str(raw, "parent", el_id)
        if parent is not None and parent not in explicit_ids and len(synthesized.get(parent, ())) == 1:
            parent = synthesized[parent][0]
        seg_prompt = _opt_str(raw, "seg_prompt", el_id) or ""
        elements.append(
            UIElement(
                id=el_id,
                label=Label(raw["label"]),
                bbox=_parse_bbox(raw["bbox_2d"], el_id),
                parent=parent,
                seg_prompt=seg_prompt,
                asset_path=_opt_str(raw, "asset_path", el_id),
                extras={k: v for k, v in raw.items() if k not in ELEMENT_KEYS},
            )
        )
    return elements


def parse_scaffold(text: str, *, canvas: tuple[int, int] | None = None,
                   source_image: str | None = None) -> Scaffold:
    """Parse a YAML (or canonical JSON) scaffold document.

    ``canvas`` and ``source_image`` fill in top-level fields the document
    omits, which is the usual case for raw model output.
    """
    data = None
    if text.lstrip().startswith("{"):
        # JSON is read directly: YAML rejects control characters JSON may carry raw
        try:
            data = json.loads(text)
        except json.JSONDecodeError:
            pass
    if data is None:
        data = load_yaml(text)
    return parse_document(data, payload=text, canvas=canvas, source_image=source_image)


# --------------------------------------------------------------------------
# serialization


def to_document(s: Scaffold) -> dict[str, Any]:
    elements = []
    for el in s.elements:
        item: dict[str, Any] = {
            "id": el.id,
            "label": el.label.raw,
            "parent": el.parent,
            "bbox_2d": el.bbox.to_list(),
            "seg_prompt": el.seg_prompt,
        }
        if el.asset_path is not None:
            item["asset_path"] = el.asset_path
        for key, value in el.extras.items():
            item[key] = value
        elements.append(item)
    doc: dict[str, Any] = {
        "canvas_width": s.canvas_width,
        "canvas_height": s.canvas_height,
        "source_image": s.source_image,
        "phase": s.phase,
    }
    for key, value in s.extras.items():
        doc[key] = value
    doc["elements"] = elements
    return doc


class _FlowList(list):
    pass


class _Dumper(yaml.SafeDumper):
    # indent block sequences under their key: "elements:\n  - id: ..."
    def increase_indent(self, flow=False, indentless=False):
        return super().increase_indent(flow, False)

    def ignore_aliases(self, data):
        return True


_Dumper.add_representer(
    _FlowList, lambda dumper, data: dumper.represent_sequence("tag:yaml.org,2002:seq", data, flow_style=True)
)


def serialize_scaffold(s: Scaffold, format: str = "yaml") -> str:
    """Deterministic text for ``s``: ``yaml`` (2-space block style) or ``canonical_json``."""
    problems = errors(validate(s, LENIENT))
    if problems:
        raise ContractError("cannot serialize invalid scaffold: " + problems[0].format_line())
    doc = to_document(s)
    if format == "canonical_json":
        return json.dumps(doc, ensure_ascii=False, separators=(",", ":"))
    if format != "yaml":
        raise ValueError(f"unknown format {format!r}")
    for item in doc["elements"]:
        item["bbox_2d"] = _FlowList(item["bbox_2d"])
    return yaml.dump(
        doc,
        Dumper=_Dumper,
        sort_keys=False,
        indent=2,
        width=10_000,
        allow_unicode=True,
        default_flow_style=False,
    )


# --------------------------------------------------------------------------
# validation


def _find_cycles(parent_of: Mapping[str, str | None]) -> list[list[str]]:
    """Cycles in the parent relation, each reported once, in first-seen order."""
    state: dict[str, int] = {}
    cycles = []
    for start in parent_of:
        if start in state:
            continue
        path: list[str] = []
        on_path: dict[str, int] = {}
        node: str | None = start
        while node is not None and node in parent_of and node not in state:
            on_path[node] = len(path)
            path.append(node)
            state[node] = 1
            node = parent_of[node]
            if node in on_path:
                cycles.append(path[on_path[node]:])
                break
        for n in path:
            state[n] = 2
    return cycles


def validate(s: Scaffold, mode: str = STRICT) -> list[Diagnostic]:
    """Return every problem found in ``s``; an empty list means valid.

    Geometric problems a calibration pass can repair (boxes outside the
    canvas, children escaping their parent) and structural issues that the
    lenient graph builder tolerates are warnings in lenient mode, except in
    the calibrated phase where they are always errors.
    """
    if mode not in (STRICT, LENIENT):
        raise ValueError(f"unknown validation mode {mode!r}")
    hard = mode == STRICT
    hard_geometry = hard or s.phase == "calibrated"
    out: list[Diagnostic] = []

    if s.canvas_width <= 0 or s.canvas_height <= 0:
        out.append(Diagnostic("E_MISSING_FIELD", "canvas dimensions must be positive"))

    first: dict[str, UIElement] = {}
    for el in s.elements:
        if el.id in first:
            out.append(Diagnostic("E_DUP_ID", f"id {el.id!r} is already used", el.id))
        else:
            first[el.id] = el

    for el in s.elements:
        if not el.id:
            out.append(Diagnostic("E_MISSING_FIELD", "id is empty", el.id))
        if s.phase == "scaffolded" and not el.seg_prompt.strip():
            out.append(Diagnostic("E_MISSING_FIELD", "seg_prompt is empty", el.id))
        if s.phase != "scaffolded" and not el.label.is_container and not el.asset_path:
            out.append(Diagnostic("E_MISSING_FIELD", f"asset_path is required in phase {s.phase}", el.id))
        if not el.bbox.is_valid:
            out.append(Diagnostic("E_BBOX_INVERTED", f"degenerate box {el.bbox.to_list()}", el.id))
        elif not el.bbox.within_canvas(s.canvas_width, s.canvas_height):
            code = "E_BBOX_OOB" if hard_geometry else "W_BBOX_OOB"
            out.append(Diagnostic(
                code, f"box {el.bbox.to_list()} exceeds canvas {s.canvas_width}x{s.canvas_height}", el.id))

    parent_of = {el_id: el.parent for el_id, el in first.items()}
    in_cycle: set[str] = set()
    for cycle in _find_cycles(parent_of):
        in_cycle.update(cycle)
        out.append(Diagnostic("E_CYCLE", "parent cycle: " + " -> ".join(cycle + [cycle[0]]), cycle[0]))

    for el in s.elements:
        if el.parent is None or el.id in in_cycle:
            continue
        parent = first.get(el.parent)
        if parent is None:
            if hard:
                out.append(Diagnostic("E_DANGLING_PARENT", f"parent {el.parent!r} does not exist", el.id))
            else:
                out.append(Diagnostic(
                    "W_ORPHAN_PROMOTED", f"parent {el.parent!r} does not exist; attached to root", el.id))
            continue
        if not parent.label.is_container:
            code = "E_CHILD_OF_LEAF" if hard else "W_CHILD_OF_LEAF"
            out.append(Diagnostic(code, f"parent {parent.id!r} is a {parent.label.raw}, not a panel", el.id))
        if el.bbox.is_valid and parent.bbox.is_valid and not parent.bbox.contains(el.bbox):
            code = "E_BBOX_ESCAPE" if hard_geometry else "W_BBOX_ESCAPE"
            out.append(Diagnostic(
                code, f"box {el.bbox.to_list()} not inside parent box {parent.bbox.to_list()}", el.id))
    return out
