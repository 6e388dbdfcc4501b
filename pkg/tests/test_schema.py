import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uirecon.diagnostics import CODES, ContractError, Diagnostic, ParseError, SchemaError
from uirecon.schema import (
    LENIENT,
    STRICT,
    BBox,
    Label,
    Scaffold,
    UIElement,
    parse_scaffold,
    serialize_scaffold,
    validate,
)
from uirecon.testing import FAULTS, clean_scaffold, fault_corpus

from conftest import benchmark_paths, load_benchmark

MINIMAL = """\
canvas_width: 200
canvas_height: 100
elements:
  - id: hud
    label: panel
    parent: null
    bbox_2d: [0, 0, 200, 100]
    seg_prompt: dark hud frame
  - id: play
    label: button
    parent: hud
    bbox_2d: [10, 10, 60, 40]
    seg_prompt: red play button
"""


def codes(diags, errors_only=False):
    return [d.code for d in diags if d.is_error or not errors_only]


# --------------------------------------------------------------------------
# BBox and Label


def test_bbox_area_and_validity():
    b = BBox(2, 3, 10, 7)
    assert (b.width, b.height, b.area) == (8, 4, 32)
    assert b.is_valid
    assert not BBox(5, 5, 5, 9).is_valid
    assert BBox(5, 5, 3, 9).area == 0


def test_bbox_contains_and_intersection():
    outer, inner = BBox(0, 0, 10, 10), BBox(2, 2, 10, 5)
    assert outer.contains(inner) and not inner.contains(outer)
    assert outer.intersection(BBox(5, 5, 20, 20)) == BBox(5, 5, 10, 10)
    assert outer.intersection(BBox(10, 0, 20, 10)) is None  # max edges are exclusive


def test_label_known_case_insensitive_and_raw_kept():
    assert Label("Button").kind == "button"
    l = Label("HealthGlobe")
    assert l.is_fallback and l.raw == "HealthGlobe" and l.key == "HealthGlobe"
    assert Label("panel").is_container and not Label("grid").is_container


# --------------------------------------------------------------------------
# parse_scaffold


def test_parse_minimal_document():
    s = parse_scaffold(MINIMAL)
    assert len(s.elements) == 2
    assert s.phase == "scaffolded"
    assert s.elements[0].parent is None and s.elements[1].parent == "hud"
    assert s.elements[1].bbox == BBox(10, 10, 60, 40)


def test_missing_bbox_is_schema_error():
    text = MINIMAL.replace("    bbox_2d: [10, 10, 60, 40]\n", "")
    with pytest.raises(SchemaError) as info:
        parse_scaffold(text)
    assert info.value.code == "E_MISSING_FIELD"
    assert info.value.diagnostic.element_id == "play"


@pytest.mark.parametrize("bad", ["[10, 10, 60]", "[10, 10, 60, x]", "'10,10,60,40'", "[1.5, 0, 3, 4]"])
def test_bbox_wrong_type_is_schema_error(bad):
    with pytest.raises(SchemaError) as info:
        parse_scaffold(MINIMAL.replace("[10, 10, 60, 40]", bad))
    assert info.value.code == "E_MISSING_FIELD"


def test_wrong_scalar_type_is_schema_error():
    with pytest.raises(SchemaError):
        parse_scaffold(MINIMAL.replace("canvas_width: 200", "canvas_width: wide"))
    with pytest.raises(SchemaError):
        parse_scaffold(MINIMAL.replace("seg_prompt: red play button", "seg_prompt: [a, b]"))


def test_malformed_yaml_is_parse_error():
    with pytest.raises(ParseError):
        parse_scaffold("elements: [unclosed\n  - id: x")


def test_non_mapping_document_keeps_payload():
    with pytest.raises(SchemaError) as info:
        parse_scaffold("Here is your layout: a panel with a button.")
    assert info.value.payload.startswith("Here is your layout")


def test_unknown_tag_roundtrips_raw():
    s = parse_scaffold(MINIMAL.replace("label: button", "label: healthglobe"))
    el = s.elements[1]
    assert el.label.is_fallback and el.label.raw == "healthglobe"
    again = parse_scaffold(serialize_scaffold(s))
    assert again.elements[1].label.raw == "healthglobe"
    assert "label: healthglobe" in serialize_scaffold(s)


def test_canvas_from_caller_when_document_omits_it():
    text = "\n".join(MINIMAL.splitlines()[2:]) + "\n"
    with pytest.raises(SchemaError):
        parse_scaffold(text)
    s = parse_scaffold(text, canvas=(200, 100), source_image="shot.png")
    assert (s.canvas_width, s.canvas_height, s.source_image) == (200, 100, "shot.png")


def test_id_less_elements_get_label_index_ids():
    text = """\
canvas_width: 100
canvas_height: 100
elements:
  - label: panel
    parent: null
    bbox_2d: [0, 0, 100, 100]
    seg_prompt: frame
  - label: button
    parent: panel
    bbox_2d: [10, 10, 20, 20]
    seg_prompt: button
"""
    s = parse_scaffold(text)
    assert [e.id for e in s.elements] == ["panel_0", "button_1"]
    assert s.elements[1].parent == "panel_0"
    assert validate(s, STRICT) == []


def test_extras_preserved_through_roundtrip():
    text = MINIMAL.replace("canvas_height: 100\n", "canvas_height: 100\ntheme: {accent: gold, dark: true}\n")
    text = text.replace("    seg_prompt: red play button\n",
                        "    seg_prompt: red play button\n    tooltip: Start the game\n    weight: 3\n")
    s = parse_scaffold(text)
    assert s.extras == {"theme": {"accent": "gold", "dark": True}}
    assert dict(s.elements[1].extras) == {"tooltip": "Start the game", "weight": 3}
    for fmt in ("yaml", "canonical_json"):
        again = parse_scaffold(serialize_scaffold(s, fmt))
        assert again.extras == s.extras
        assert dict(again.elements[1].extras) == dict(s.elements[1].extras)


def test_dates_stay_strings():
    s = parse_scaffold(MINIMAL.replace("canvas_height: 100\n", "canvas_height: 100\ncaptured: 2024-05-01\n"))
    assert s.extras["captured"] == "2024-05-01"
    assert json.loads(serialize_scaffold(s, "canonical_json"))["captured"] == "2024-05-01"


# --------------------------------------------------------------------------
# serialize_scaffold


def test_yaml_layout_is_fixed():
    s = parse_scaffold(MINIMAL)
    text = serialize_scaffold(s)
    assert text.startswith("canvas_width: 200\ncanvas_height: 100\nsource_image: ''\nphase: scaffolded\n"
                           "elements:\n  - id: hud\n    label: panel\n    parent: null\n"
                           "    bbox_2d: [0, 0, 200, 100]\n")
    lines = [ln for ln in text.splitlines() if ln.strip().startswith(("id:", "- id:"))]
    assert len(lines) == 2


def test_element_key_order():
    s = load_benchmark("combat_hud")
    body = serialize_scaffold(s).split("elements:\n", 1)[1]
    first = body.split("\n  - ")[0].splitlines()
    keys = [ln.strip().lstrip("- ").split(":")[0] for ln in first]
    assert keys == ["id", "label", "parent", "bbox_2d", "seg_prompt"]  # panels carry no asset_path
    json_keys = list(json.loads(serialize_scaffold(s, "canonical_json"))["elements"][2])
    assert json_keys == ["id", "label", "parent", "bbox_2d", "seg_prompt", "asset_path"]


def test_canonical_json_has_no_insignificant_whitespace():
    text = serialize_scaffold(parse_scaffold(MINIMAL), "canonical_json")
    assert ": " not in text and ", " not in text and "\n" not in text.rstrip("\n")


def test_serialize_is_deterministic():
    s = parse_scaffold(MINIMAL)
    assert serialize_scaffold(s) == serialize_scaffold(s)
    assert serialize_scaffold(s, "canonical_json") == serialize_scaffold(s, "canonical_json")


def test_serialize_rejects_invalid_scaffold():
    s = parse_scaffold(MINIMAL.replace("parent: hud", "parent: play"))
    with pytest.raises(ContractError):
        serialize_scaffold(s)


def test_unicode_text_survives():
    s = parse_scaffold(MINIMAL.replace("red play button", "botón rojo «jugar»"))
    for fmt in ("yaml", "canonical_json"):
        assert parse_scaffold(serialize_scaffold(s, fmt)).elements[1].seg_prompt == "botón rojo «jugar»"


def test_ten_element_yaml_shorter_than_json():
    s = load_benchmark("main_menu")
    assert len(s.elements) >= 10
    yaml_text = serialize_scaffold(s, "yaml")
    json_text = serialize_scaffold(s, "canonical_json")
    assert len(yaml_text.encode()) < len(json_text.encode())


@pytest.mark.parametrize("path", benchmark_paths(), ids=lambda p: p.stem)
def test_benchmark_roundtrip(path):
    s = parse_scaffold(path.read_text(encoding="utf-8"))
    assert serialize_scaffold(s) == path.read_text(encoding="utf-8")
    for fmt in ("yaml", "canonical_json"):
        assert parse_scaffold(serialize_scaffold(s, fmt)) == s


# --------------------------------------------------------------------------
# validate


def test_mutual_parents_is_cycle():
    s = Scaffold(100, 100, (
        UIElement("a", Label("panel"), BBox(0, 0, 50, 50), "b", "a"),
        UIElement("b", Label("panel"), BBox(0, 0, 50, 50), "a", "b"),
    ))
    for mode in (STRICT, LENIENT):
        assert codes(validate(s, mode)) == ["E_CYCLE"]


def test_self_parent_is_cycle():
    s = Scaffold(100, 100, (UIElement("a", Label("panel"), BBox(0, 0, 50, 50), "a", "a"),))
    assert codes(validate(s)) == ["E_CYCLE"]


def test_containment_strict_error_lenient_warning():
    s = Scaffold(100, 100, (
        UIElement("p", Label("panel"), BBox(10, 10, 40, 40), None, "p"),
        UIElement("c", Label("icon"), BBox(0, 0, 50, 50), "p", "c"),
    ))
    strict = validate(s, STRICT)
    assert codes(strict) == ["E_BBOX_ESCAPE"] and strict[0].element_id == "c"
    lenient = validate(s, LENIENT)
    assert codes(lenient) == ["W_BBOX_ESCAPE"] and not lenient[0].is_error


def test_oob_strict_and_lenient():
    s = Scaffold(100, 100, (UIElement("p", Label("panel"), BBox(-5, 0, 50, 50), None, "p"),))
    assert codes(validate(s, STRICT)) == ["E_BBOX_OOB"]
    assert codes(validate(s, LENIENT)) == ["W_BBOX_OOB"]
    calibrated = Scaffold(100, 100, s.elements, phase="calibrated")
    assert codes(validate(calibrated, LENIENT)) == ["E_BBOX_OOB"]


def test_dangling_parent_strict_and_lenient():
    s = Scaffold(100, 100, (UIElement("c", Label("icon"), BBox(0, 0, 5, 5), "ghost", "c"),))
    assert codes(validate(s, STRICT)) == ["E_DANGLING_PARENT"]
    assert codes(validate(s, LENIENT)) == ["W_ORPHAN_PROMOTED"]


def test_child_of_leaf():
    s = Scaffold(100, 100, (
        UIElement("b", Label("button"), BBox(0, 0, 50, 50), None, "b"),
        UIElement("i", Label("icon"), BBox(5, 5, 10, 10), "b", "i"),
    ))
    assert codes(validate(s, STRICT)) == ["E_CHILD_OF_LEAF"]
    assert codes(validate(s, LENIENT)) == ["W_CHILD_OF_LEAF"]


def test_phase_requirements():
    el = UIElement("b", Label("button"), BBox(0, 0, 5, 5), None, "")
    assert codes(validate(Scaffold(10, 10, (el,)))) == ["E_MISSING_FIELD"]  # empty seg_prompt
    assert codes(validate(Scaffold(10, 10, (el,), phase="grounded"))) == ["E_MISSING_FIELD"]  # no asset
    ok = UIElement("b", Label("button"), BBox(0, 0, 5, 5), None, "", "assets/b.png")
    assert validate(Scaffold(10, 10, (ok,), phase="calibrated")) == []


@pytest.mark.parametrize("path", benchmark_paths(), ids=lambda p: p.stem)
def test_benchmark_fixtures_are_clean(path):
    assert validate(parse_scaffold(path.read_text(encoding="utf-8")), STRICT) == []


def test_five_element_fixture_is_clean():
    s = load_benchmark("dialogue_box")
    assert len(s.elements) == 5 and validate(s) == []


def test_diagnostic_line_format():
    d = Diagnostic("E_CYCLE", "parent cycle: a -> b -> a", "a")
    assert d.format_line() == "error E_CYCLE a: parent cycle: a -> b -> a"
    assert Diagnostic("W_ORPHAN_PROMOTED", "x").format_line() == "warning W_ORPHAN_PROMOTED -: x"
    with pytest.raises(ValueError):
        Diagnostic("E_NOT_A_CODE", "x")
    assert all(c[:2] in ("E_", "W_") for c in CODES)


@pytest.mark.parametrize("code", sorted(FAULTS))
def test_fault_generator_yields_exactly_its_code(code):
    rng = random.Random(code)
    for _ in range(5):
        faulty, reverted = FAULTS[code](rng)
        assert sorted(set(codes(validate(faulty, STRICT), errors_only=True))) == [code]
        assert codes(validate(reverted, STRICT), errors_only=True) == []


def test_fault_corpus_cardinality():
    corpus = fault_corpus(seed=3, per_code=2)
    assert len(corpus) == 14
    assert {c for c, _, _ in corpus} == set(FAULTS)


# --------------------------------------------------------------------------
# properties


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 25), st.sampled_from(["scaffolded", "calibrated"]))
def test_roundtrip_property(seed, n, phase):
    s = clean_scaffold(random.Random(seed), n, phase=phase)
    assert validate(s, STRICT) == []
    for fmt in ("yaml", "canonical_json"):
        text = serialize_scaffold(s, fmt)
        assert parse_scaffold(text) == s
        assert serialize_scaffold(parse_scaffold(text), fmt) == text


_text = st.text(st.characters(blacklist_categories=("Cs",), blacklist_characters="\x00"), max_size=30)


@settings(max_examples=150, deadline=None)
@given(_text.filter(lambda t: t.strip()), _text, st.dictionaries(
    st.text("abcdefghij_", min_size=1, max_size=8).filter(lambda k: k not in ("id", "label", "parent", "bbox_2d",
                                                                             "seg_prompt", "asset_path")),
    st.one_of(st.integers(-10**6, 10**6), st.booleans(), st.none(), _text,
              st.lists(st.integers(0, 9), max_size=3)),
    max_size=3))
def test_arbitrary_strings_and_extras_roundtrip(prompt, label, extras):
    label = label.strip() or "healthglobe"
    s = Scaffold(50, 50, (
        UIElement("frame", Label("panel"), BBox(0, 0, 50, 50), None, "frame"),
        UIElement("it", Label(label), BBox(1, 1, 9, 9), "frame",
                  prompt, extras=extras),
    ))
    for fmt in ("yaml", "canonical_json"):
        again = parse_scaffold(serialize_scaffold(s, fmt))
        assert again.elements[1].seg_prompt == prompt
        assert again.elements[1].label.raw == label
        assert dict(again.elements[1].extras) == extras
