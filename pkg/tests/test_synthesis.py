import random
import xml.etree.ElementTree as ET

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uirecon.calibration import calibrate
from uirecon.diagnostics import ContractError, ParseError
from uirecon.graph import isomorphic, z_normalized
from uirecon.schema import BBox, Label, Scaffold, UIElement
from uirecon.synthesis import (
    UI_NS,
    Rect,
    absolute_rect,
    compile,
    element_tag,
    infer_affordances,
    parse_uss,
    parse_uxml,
    resolve_styles,
    roundtrip_label,
    to_parent_relative,
)
from uirecon.testing import clean_scaffold, noisy_scaffold

from conftest import GOLDEN, benchmark_paths, load_benchmark

# Written by hand from the emitter rules: 4-space indentation, parent-relative
# px geometry, two pseudo-state blocks for the button.
PANEL_BUTTON_UXML = """\
<?xml version="1.0" encoding="utf-8"?>
<ui:UXML xmlns:ui="UnityEngine.UIElements" xmlns:uie="UnityEditor.UIElements" editor-extension-mode="False">
    <ui:Style src="panel_button.uss" />
    <ui:VisualElement name="panel" class="el-panel">
        <ui:Button name="ok_button" class="el-ok_button" />
    </ui:VisualElement>
</ui:UXML>
"""

PANEL_BUTTON_USS = """\
:root {
    --canvas-width: 800px;
    --canvas-height: 600px;
}

.el-panel {
    position: absolute;
    left: 100px;
    top: 100px;
    width: 400px;
    height: 300px;
}

.el-ok_button {
    position: absolute;
    left: 50px;
    top: 200px;
    width: 200px;
    height: 60px;
    background-image: url("assets/ok_button.png");
}

.el-ok_button:hover {
    opacity: 0.85;
}

.el-ok_button:active {
    opacity: 0.7;
}
"""


def calibrated(*elements, w=200, h=200):
    return Scaffold(w, h, tuple(elements), source_image="t.png", phase="calibrated")


def leaf(el_id, label, box, parent):
    return UIElement(el_id, Label(label), BBox(*box), parent, el_id, f"assets/{el_id}.png")


def panel(el_id, box, parent=None):
    return UIElement(el_id, Label("panel"), BBox(*box), parent, el_id)


# --------------------------------------------------------------------------
# tables


@pytest.mark.parametrize("label,tag", [
    ("panel", "VisualElement"), ("button", "Button"), ("toggle", "Toggle"), ("progress_bar", "ProgressBar"),
    ("slider", "Slider"), ("text", "Label"), ("icon", "VisualElement"), ("image", "VisualElement"),
    ("grid", "VisualElement"), ("healthglobe", "VisualElement"),
])
def test_element_tag_table(label, tag):
    assert element_tag(Label(label)) == tag


def test_fallback_tag_emits_raw_class():
    s = calibrated(panel("p", (0, 0, 100, 100)), leaf("orb", "healthglobe", (10, 10, 20, 20), "p"))
    ui = compile(s)
    assert '<ui:VisualElement name="orb" class="el-orb healthglobe" />' in ui.uxml_text


def test_to_parent_relative_examples():
    assert to_parent_relative(BBox(10, 20, 30, 40), BBox(5, 10, 50, 60)) == Rect(5, 10, 20, 20)
    assert to_parent_relative(BBox(5, 10, 50, 60), BBox(5, 10, 50, 60)) == Rect(0, 0, 45, 50)
    assert to_parent_relative(BBox(7, 9, 20, 30), BBox(0, 0, 100, 100)) == Rect(7, 9, 13, 21)
    with pytest.raises(ContractError):
        to_parent_relative(BBox(0, 0, 10, 10), BBox(5, 5, 50, 50))


def test_affordance_table():
    for label in ("button", "toggle", "slider"):
        rules = infer_affordances(Label(label))
        assert [(r.pseudo_state, r.style) for r in rules] == [("hover", (("opacity", "0.85"),)),
                                                              ("active", (("opacity", "0.7"),))]
    for label in ("panel", "text", "icon", "progress_bar", "healthglobe"):
        assert infer_affordances(Label(label)) == []


# --------------------------------------------------------------------------
# compile


def test_panel_button_matches_hand_written_golden():
    s = load_benchmark("panel_button")
    ui = compile(s)
    assert ui.uxml_text == PANEL_BUTTON_UXML
    assert ui.uss_text == PANEL_BUTTON_USS
    assert ui.uss_text.count(":hover") == 1 and ui.uss_text.count(":active") == 1
    assert list(ui.asset_manifest) == [
        {"element_id": "ok_button", "asset_path": "assets/ok_button.png", "class_name": "el-ok_button"}]


def test_empty_scaffold():
    ui = compile(Scaffold(64, 32, (), source_image="blank.png", phase="calibrated"))
    assert ui.uxml_text.count("<ui:") == 2  # root and stylesheet reference only
    assert ui.uss_text == ":root {\n    --canvas-width: 64px;\n    --canvas-height: 32px;\n}\n"
    assert ui.asset_manifest == ()


def test_wrong_phase_rejected():
    s = Scaffold(10, 10, (panel("p", (0, 0, 10, 10)),), phase="scaffolded")
    with pytest.raises(ContractError, match="calibrate"):
        compile(s)


def test_compile_deterministic():
    s = load_benchmark("combat_hud")
    assert compile(s) == compile(s)


def test_names_sanitized_with_suffixes():
    ui = compile(load_benchmark("pause_menu"))
    names = [e.get("name") for e in ET.fromstring(ui.uxml_text).iter() if e.get("name")]
    assert names == ["pause-overlay", "pause_card", "resume", "resume-2", "btn-save", "btn-save-2", "pause_hint"]


def test_special_characters_escaped():
    s = calibrated(panel('a"<b>&', (0, 0, 100, 100)),
                   UIElement("x", Label("icon"), BBox(1, 1, 5, 5), 'a"<b>&', "x", 'assets/we"ird (1).png'))
    ui = compile(s)
    ET.fromstring(ui.uxml_text)
    back = parse_uxml(ui.uxml_text, ui.uss_text)
    assert [e.asset_path for e in back.elements()] == [None, 'assets/we"ird (1).png']


@pytest.mark.parametrize("path", benchmark_paths(), ids=lambda p: p.stem)
def test_compile_matches_checked_in_golden(path):
    ui = compile(load_benchmark(path.stem), path.stem)
    d = GOLDEN / path.stem
    assert ui.uxml_text == (d / f"{path.stem}.uxml").read_text(encoding="utf-8")
    assert ui.uss_text == (d / f"{path.stem}.uss").read_text(encoding="utf-8")
    assert ui.manifest_json() + "\n" == (d / "manifest.json").read_text(encoding="utf-8")


def check_invariants(s: Scaffold) -> None:
    ui = compile(s)
    root = ET.fromstring(ui.uxml_text)
    assert root.tag == f"{{{UI_NS}}}UXML"
    names = [e.get("name") for e in root.iter() if e.get("name")]
    assert len(names) == len(set(names)) == len(s.elements)
    for entry in ui.asset_manifest:
        assert entry["class_name"] in ui.uxml_text and "." + entry["class_name"] in ui.uss_text
    for el in s.elements:
        cls = f".el-{ui.names[el.id]}"
        n_rules = ui.uss_text.count(f"{cls}:hover {{") + ui.uss_text.count(f"{cls}:active {{")
        assert n_rules == (2 if el.label.kind in ("button", "toggle", "slider") else 0)

    back = parse_uxml(ui.uxml_text, ui.uss_text)
    assert isomorphic(z_normalized(s), back, label_key=roundtrip_label)
    boxes = {e.id: e.bbox for e in back.elements()}
    for el in s.elements:
        assert boxes[ui.names[el.id]] == el.bbox


@pytest.mark.parametrize("path", benchmark_paths(), ids=lambda p: p.stem)
def test_roundtrip_benchmark(path):
    check_invariants(load_benchmark(path.stem))


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_roundtrip_property_clean(seed):
    check_invariants(clean_scaffold(random.Random(seed), phase="calibrated"))


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_roundtrip_property_after_calibration(seed):
    check_invariants(calibrate(noisy_scaffold(random.Random(seed))))


# --------------------------------------------------------------------------
# parse_uxml


def test_parse_without_stylesheet_keeps_structure():
    ui = compile(load_benchmark("settings"))
    g = parse_uxml(ui.uxml_text)
    assert len(g.elements()) == 13
    assert all(e.bbox == BBox(0, 0, 0, 0) for e in g.elements())


def test_unknown_tag_becomes_fallback():
    text = (f'<ui:UXML xmlns:ui="{UI_NS}" xmlns:my="Game.Widgets">'
            '<ui:VisualElement name="frame"><my:RadialMenu name="radial" /></ui:VisualElement></ui:UXML>')
    g = parse_uxml(text)
    radial = next(e for e in g.elements() if e.id == "radial")
    assert radial.label.is_fallback and radial.label.raw == "RadialMenu" and radial.parent == "frame"
    assert [(d.code, d.element_id) for d in g.diagnostics] == [("W_UNKNOWN_TAG", "radial")]


@pytest.mark.parametrize("text", [
    f'<ui:UXML xmlns:ui="{UI_NS}"></ui:UXML><ui:UXML xmlns:ui="{UI_NS}"></ui:UXML>',
    f'<ui:UXML xmlns:ui="{UI_NS}"><ui:Button></ui:UXML>',
    '<UXML><Button /></UXML>',
])
def test_malformed_or_wrong_root(text):
    with pytest.raises(ParseError):
        parse_uxml(text)


def test_flow_layout_subtree_skipped():
    uxml = (f'<ui:UXML xmlns:ui="{UI_NS}"><ui:VisualElement name="a" class="el-a">'
            '<ui:VisualElement name="row" class="el-row"><ui:Button name="b" class="el-b" /></ui:VisualElement>'
            '</ui:VisualElement></ui:UXML>')
    uss = (".el-a { position: absolute; left: 5px; top: 5px; width: 50px; height: 50px; }\n"
           ".el-row { flex-direction: row; }\n"
           ".el-b { position: absolute; left: 0px; top: 0px; width: 5px; height: 5px; }\n")
    g = parse_uxml(uxml, uss)
    assert [e.id for e in g.elements()] == ["a"]
    assert [d.code for d in g.diagnostics] == ["W_UNSUPPORTED_FEATURE"]


def test_style_cascade():
    rules = parse_uss("/* c */ Button { width: 9px; } .big { width: 20px; height: 4px } #ok { height: 7px; }")
    props = resolve_styles(rules, "Button", "ok", ["big"], "left: 3px")
    assert props == {"width": "20px", "height": "7px", "left": "3px"}
    assert absolute_rect({"position": "absolute", "left": "1px", "top": "2", "width": "3px", "height": "4px"}) \
        == Rect(1, 2, 3, 4)
    assert absolute_rect({"left": "1px"}) is None
