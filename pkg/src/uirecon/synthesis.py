"""Compile a calibrated scaffold into UXML + USS, and read UXML back.

Every element is absolutely positioned relative to its parent. The label to
tag mapping is lossy (icon, image and grid become plain VisualElements), so
round-trip comparisons go through :func:`roundtrip_label`.
"""

from __future__ import annotations

import json
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from pathlib import PurePosixPath
from typing import NamedTuple
from xml.sax.saxutils import quoteattr

from .diagnostics import ContractError, Diagnostic, ParseError
from .graph import Node, SceneGraph, assign_z_order, build_graph, from_parent_map
from .naming import assign_names, sanitize_name
from .schema import STRICT, BBox, Label, Scaffold, UIElement

UI_NS = "UnityEngine.UIElements"
EDITOR_NS = "UnityEditor.UIElements"

TAGS = {
    "panel": "VisualElement",
    "button": "Button",
    "toggle": "Toggle",
    "progress_bar": "ProgressBar",
    "slider": "Slider",
    "text": "Label",
    "icon": "VisualElement",
    "image": "VisualElement",
    "grid": "VisualElement",
    "fallback": "VisualElement",
}
# Inverse table. VisualElement comes back as panel, or as a fallback label
# when it carries an extra (non "el-") class.
LABELS = {
    "VisualElement": "panel",
    "Button": "button",
    "Toggle": "toggle",
    "ProgressBar": "progress_bar",
    "Slider": "slider",
    "Label": "text",
}
NON_ELEMENT_TAGS = {"Style", "Template"}

HOVER = "hover"
ACTIVE = "active"
PSEUDO_STATES = (HOVER, ACTIVE)
INTERACTIVE = ("button", "toggle", "slider")


@dataclass(frozen=True)
class AffordanceRule:
    label: str
    pseudo_state: str
    style: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        if self.pseudo_state not in PSEUDO_STATES:
            raise ValueError(f"unknown pseudo state {self.pseudo_state!r}")


class Rect(NamedTuple):
    left: int
    top: int
    width: int
    height: int


@dataclass(frozen=True)
class CompiledUI:
    uxml_text: str
    uss_text: str
    asset_manifest: tuple[dict, ...] = ()
    names: dict[str, str] = field(default_factory=dict, compare=False)

    def manifest_json(self) -> str:
        return json.dumps(list(self.asset_manifest), ensure_ascii=False, separators=(",", ":"))


def element_tag(label: Label) -> str:
    return TAGS[label.kind]


def fallback_class(label: Label) -> str | None:
    return sanitize_name(label.raw) if label.is_fallback else None


def roundtrip_label(label: Label) -> str:
    """The label key that survives compile -> parse_uxml."""
    if label.is_fallback:
        return sanitize_name(label.raw)
    return LABELS[TAGS[label.kind]]


def to_parent_relative(child: BBox, parent: BBox) -> Rect:
    if not parent.contains(child):
        raise ContractError(f"box {child.to_list()} escapes parent {parent.to_list()}")
    return Rect(child.x_min - parent.x_min, child.y_min - parent.y_min, child.width, child.height)


def infer_affordances(label: Label) -> list[AffordanceRule]:
    if label.kind not in INTERACTIVE:
        return []
    return [
        AffordanceRule(label.kind, HOVER, (("opacity", "0.85"),)),
        AffordanceRule(label.kind, ACTIVE, (("opacity", "0.7"),)),
    ]


def _uss_block(selector: str, props: list[tuple[str, str]]) -> str:
    body = "".join(f"    {k}: {v};\n" for k, v in props)
    return f"{selector} {{\n{body}}}\n"


def _css_string(value: str) -> str:
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


def default_document_name(s: Scaffold) -> str:
    stem = PurePosixPath(s.source_image).stem if s.source_image else ""
    return sanitize_name(stem) if stem else "layout"


def compile(s: Scaffold, name: str | None = None) -> CompiledUI:  # noqa: A001
    """Emit UXML, USS and the asset manifest for a calibrated scaffold.

    ``name`` is the document stem used for the stylesheet reference; it
    defaults to the source image's stem.
    """
    if s.phase != "calibrated":
        raise ContractError(f"compile needs a calibrated scaffold, got phase {s.phase!r}; run calibrate first")
    name = name or default_document_name(s)
    g = assign_z_order(build_graph(s, STRICT))
    names = assign_names(el.id for el in g.elements())

    lines = [
        '<?xml version="1.0" encoding="utf-8"?>',
        f'<ui:UXML xmlns:ui="{UI_NS}" xmlns:uie="{EDITOR_NS}" editor-extension-mode="False">',
        f"    <ui:Style src={quoteattr(name + '.uss')} />",
    ]
    blocks = [_uss_block(":root", [
        ("--canvas-width", f"{s.canvas_width}px"),
        ("--canvas-height", f"{s.canvas_height}px"),
    ])]
    manifest = []

    def emit(node: Node, parent_box: BBox, depth: int) -> None:
        el = node.element
        el_name = names[el.id]
        cls = f"el-{el_name}"
        classes = cls if fallback_class(el.label) is None else f"{cls} {fallback_class(el.label)}"
        tag = "ui:" + element_tag(el.label)
        pad = "    " * depth
        attrs = f"name={quoteattr(el_name)} class={quoteattr(classes)}"
        if node.children:
            lines.append(f"{pad}<{tag} {attrs}>")
        else:
            lines.append(f"{pad}<{tag} {attrs} />")

        rect = to_parent_relative(el.bbox, parent_box)
        props = [
            ("position", "absolute"),
            ("left", f"{rect.left}px"),
            ("top", f"{rect.top}px"),
            ("width", f"{rect.width}px"),
            ("height", f"{rect.height}px"),
        ]
        if el.asset_path:
            props.append(("background-image", f"url({_css_string(el.asset_path)})"))
            manifest.append({"element_id": el.id, "asset_path": el.asset_path, "class_name": cls})
        blocks.append(_uss_block("." + cls, props))
        for rule in infer_affordances(el.label):
            blocks.append(_uss_block(f".{cls}:{rule.pseudo_state}", list(rule.style)))

        for child in node.children:
            emit(child, el.bbox, depth + 1)
        if node.children:
            lines.append(f"{pad}</{tag}>")

    for top in g.root.children:
        emit(top, g.canvas_box, 1)
    lines.append("</ui:UXML>")
    return CompiledUI("\n".join(lines) + "\n", "\n".join(blocks), tuple(manifest), names)


# --------------------------------------------------------------------------
# reading UXML / USS back

_COMMENT = re.compile(r"/\*.*?\*/", re.S)
_BLOCK = re.compile(r"([^{}]+)\{([^{}]*)\}")


def parse_uss(text: str) -> list[tuple[str, dict[str, str]]]:
    """Rules as ``(selector, {property: value})`` in sheet order."""
    text = _COMMENT.sub("", text)
    rules = []
    for selectors, body in _BLOCK.findall(text):
        props = {}
        for decl in body.split(";"):
            if ":" in decl:
                key, value = decl.split(":", 1)
                props[key.strip()] = value.strip()
        for selector in selectors.split(","):
            rules.append((selector.strip(), props))
    return rules


def _parse_inline(style: str) -> dict[str, str]:
    out = {}
    for decl in style.split(";"):
        if ":" in decl:
            key, value = decl.split(":", 1)
            out[key.strip()] = value.strip()
    return out


_SIMPLE_SELECTOR = re.compile(r"^([.#]?)([A-Za-z_][\w-]*)$")


def resolve_styles(rules, tag: str, name: str | None, classes: list[str], inline: str | None) -> dict[str, str]:
    """Cascade simple selectors (``Tag``, ``.class``, ``#name``) in sheet order, then inline style."""
    props: dict[str, str] = {}
    for selector, body in rules:
        m = _SIMPLE_SELECTOR.match(selector)
        if not m:
            continue
        kind, ident = m.groups()
        if (kind == "." and ident in classes) or (kind == "#" and ident == name) or (kind == "" and ident == tag):
            props.update(body)
    if inline:
        props.update(_parse_inline(inline))
    return props


_PX = re.compile(r"^(-?\d+)(px)?$")


def _px(value: str | None) -> int | None:
    if value is None:
        return None
    m = _PX.match(value.strip())
    return int(m.group(1)) if m else None


def absolute_rect(props: dict[str, str]) -> Rect | None:
    """Return the absolute-positioning rect in ``props`` or None when layout is flow-based."""
    if props.get("position", "").strip() != "absolute":
        return None
    values = [_px(props.get(k)) for k in ("left", "top", "width", "height")]
    if any(v is None for v in values):
        return None
    return Rect(*values)


_URL = re.compile(r"""url\(\s*(?:"((?:[^"\\]|\\.)*)"|'([^']*)'|([^)]*?))\s*\)""")


def background_url(props: dict[str, str]) -> str | None:
    m = _URL.search(props.get("background-image", ""))
    if not m:
        return None
    value = m.group(1) if m.group(1) is not None else (m.group(2) if m.group(2) is not None else m.group(3))
    return re.sub(r"\\(.)", r"\1", value)


def _local(tag: str) -> tuple[str | None, str]:
    if tag.startswith("{"):
        ns, local = tag[1:].split("}", 1)
        return ns, local
    return None, tag


def parse_uxml(uxml_text: str, uss_text: str | None = None) -> SceneGraph:
    """Rebuild a scene graph from UXML.

    Labels follow the inverse tag table; unmapped tags become fallback labels
    with a ``W_UNKNOWN_TAG`` diagnostic. With ``uss_text`` the absolute boxes
    are recomposed from the left/top chain; elements that are not absolutely
    positioned are dropped with ``W_UNSUPPORTED_FEATURE``, together with
    their subtree. Without a stylesheet every box is the placeholder [0,0,0,0].
    """
    try:
        root = ET.fromstring(uxml_text)
    except ET.ParseError as exc:
        raise ParseError(f"malformed UXML: {exc}") from exc
    ns, local = _local(root.tag)
    if ns != UI_NS or local != "UXML":
        raise ParseError(f"root element must be ui:UXML in namespace {UI_NS}, got {root.tag}")

    rules = parse_uss(uss_text) if uss_text is not None else None
    canvas_w = canvas_h = 0
    if rules is not None:
        for selector, body in rules:
            if selector == ":root":
                canvas_w = _px(body.get("--canvas-width")) or canvas_w
                canvas_h = _px(body.get("--canvas-height")) or canvas_h

    notes: list[Diagnostic] = []
    elements: dict[str, UIElement] = {}
    parent_of: dict[str, str | None] = {}
    order: list[str] = []
    taken: set[str] = set()
    counter = [0]

    def visit(xml_el: ET.Element, parent_id: str | None, origin: tuple[int, int] | None) -> None:
        for child in xml_el:
            c_ns, tag = _local(child.tag)
            if tag in NON_ELEMENT_TAGS:
                continue
            counter[0] += 1
            el_id = child.get("name") or f"{tag.lower()}_{counter[0]}"
            base, n = el_id, 1
            while el_id in taken:
                n += 1
                el_id = f"{base}-{n}"
            taken.add(el_id)
            classes = (child.get("class") or "").split()
            if c_ns == UI_NS and tag in LABELS:
                extra = [c for c in classes if not c.startswith("el-")]
                label = Label(extra[0]) if tag == "VisualElement" and extra else Label(LABELS[tag])
            else:
                label = Label(tag)
                notes.append(Diagnostic("W_UNKNOWN_TAG", f"tag {child.tag} has no label mapping", el_id))

            box = BBox(0, 0, 0, 0)
            child_origin = None
            if rules is not None:
                props = resolve_styles(rules, tag, child.get("name"), classes, child.get("style"))
                rect = absolute_rect(props) if origin is not None else None
                if rect is None:
                    notes.append(Diagnostic(
                        "W_UNSUPPORTED_FEATURE", "element is not absolutely positioned; subtree skipped", el_id))
                    continue
                x0, y0 = origin[0] + rect.left, origin[1] + rect.top
                box = BBox(x0, y0, x0 + rect.width, y0 + rect.height)
                child_origin = (x0, y0)
                asset = background_url(props)
            else:
                asset = None
            elements[el_id] = UIElement(el_id, label, box, parent_id, "", asset)
            parent_of[el_id] = parent_id
            order.append(el_id)
            visit(child, el_id, child_origin)

    visit(root, None, (0, 0))
    if rules is not None and (canvas_w <= 0 or canvas_h <= 0) and elements:
        canvas_w = canvas_w or max(e.bbox.x_max for e in elements.values())
        canvas_h = canvas_h or max(e.bbox.y_max for e in elements.values())
    return from_parent_map(elements, parent_of, canvas_w, canvas_h, order, tuple(notes))
