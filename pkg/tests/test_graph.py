import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uirecon.diagnostics import GraphError
from uirecon.graph import ROOT_ID, SceneGraph, assign_z_order, build_graph, isomorphic, z_normalized
from uirecon.naming import assign_names, identity_key, sanitize_name, strip_suffix
from uirecon.schema import LENIENT, STRICT, BBox, Label, Scaffold, UIElement
from uirecon.testing import clean_scaffold


def el(el_id, label="panel", box=(0, 0, 10, 10), parent=None):
    return UIElement(el_id, Label(label), BBox(*box), parent, el_id)


def shape(g: SceneGraph):
    """Nested (id, [children]) with sibling order kept."""

    def rec(node):
        return (node.id, [rec(c) for c in node.children])

    return rec(g.root)


def dfs_has_cycle(parent_of: dict) -> bool:
    """Independent oracle: colour-marking DFS over parent edges."""
    colour = {}

    def visit(n):
        colour[n] = "grey"
        p = parent_of.get(n)
        if p in parent_of:
            if colour.get(p) == "grey":
                return True
            if p not in colour and visit(p):
                return True
        colour[n] = "black"
        return False

    return any(visit(n) for n in parent_of if n not in colour)


def brute_isomorphic(a: SceneGraph, b: SceneGraph) -> bool:
    """Search every node bijection for one preserving labels, ids and parent edges."""
    def flat(g):
        nodes = [(n, p) for n, p, _ in g.walk()]
        keys = [("", ROOT_ID) if n.is_root else (n.element.label.key, identity_key(n.element.id))
                for n, _ in nodes]
        index = {id(n): i for i, (n, _) in enumerate(nodes)}
        parents = [None if p is None else index[id(p)] for _, p in nodes]
        return keys, parents

    ka, pa = flat(a)
    kb, pb = flat(b)
    if len(ka) != len(kb):
        return False
    for perm in itertools.permutations(range(len(kb))):
        if all(ka[i] == kb[perm[i]] for i in range(len(ka))) and all(
            (pa[i] is None and pb[perm[i]] is None)
            or (pa[i] is not None and pb[perm[i]] == perm[pa[i]])
            for i in range(len(ka))
        ):
            return True
    return False


# --------------------------------------------------------------------------
# naming


def test_sanitize_examples():
    assert sanitize_name("Main HUD") == "main-hud"
    assert sanitize_name("health_bar") == "health_bar"
    assert sanitize_name("Btn.Play#1") == "btn-play-1"


def test_collision_suffixes():
    assert assign_names(["btn", "BTN", "b t n", "btn-2"]) == {"btn": "btn", "BTN": "btn-2", "b t n": "b-t-n",
                                                              "btn-2": "btn-2-2"}
    assert strip_suffix("btn-2") == "btn" and strip_suffix("btn") == "btn"


# --------------------------------------------------------------------------
# build_graph


def test_panel_with_two_children():
    s = Scaffold(100, 100, (el("p", box=(0, 0, 50, 50)), el("a", "button", (0, 0, 5, 5), "p"),
                            el("b", "icon", (5, 5, 9, 9), "p")))
    g = build_graph(s)
    assert shape(g) == (ROOT_ID, [("p", [("a", []), ("b", [])])])
    assert len(g) == 4


def test_orphan_promoted_in_lenient_only():
    s = Scaffold(100, 100, (el("p"), el("x", "icon", parent="ghost")))
    with pytest.raises(GraphError) as info:
        build_graph(s, STRICT)
    assert info.value.code == "E_DANGLING_PARENT"
    g = build_graph(s, LENIENT)
    assert shape(g) == (ROOT_ID, [("p", []), ("x", [])])
    assert [d.code for d in g.diagnostics] == ["W_ORPHAN_PROMOTED"]
    assert g.parent_of()["x"] is None


def test_three_cycle_raises_in_both_modes():
    s = Scaffold(100, 100, (el("a", parent="c"), el("b", parent="a"), el("c", parent="b")))
    assert dfs_has_cycle({e.id: e.parent for e in s.elements})
    for mode in (STRICT, LENIENT):
        with pytest.raises(GraphError) as info:
            build_graph(s, mode)
        assert info.value.code == "E_CYCLE"


def test_duplicate_id_raises():
    with pytest.raises(GraphError) as info:
        build_graph(Scaffold(10, 10, (el("a"), el("a"))))
    assert info.value.code == "E_DUP_ID"


@settings(max_examples=300, deadline=None)
@given(st.lists(st.integers(-1, 7), min_size=1, max_size=8))
def test_cycle_detection_agrees_with_dfs_oracle(parents):
    ids = [f"n{i}" for i in range(len(parents))]
    # -1 and indexes past the end become root attachments / ghosts
    parent_of = {ids[i]: (ids[p] if 0 <= p < len(ids) else None) for i, p in enumerate(parents)}
    s = Scaffold(100, 100, tuple(el(i, parent=parent_of[i]) for i in ids))
    expected = dfs_has_cycle(parent_of)
    try:
        build_graph(s, LENIENT)
        raised = False
    except GraphError as exc:
        assert exc.code == "E_CYCLE"
        raised = True
    assert raised == expected


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_cardinality_and_depth(seed):
    s = clean_scaffold(random.Random(seed))
    g = build_graph(s)
    assert len(g) == len(s.elements) + 1
    depth = {}
    for node, parent, d in g.walk():
        depth[node.id] = d
        if parent is not None:
            assert d == depth[parent.id] + 1
    assert sorted(e.id for e in g.elements()) == sorted(e.id for e in s.elements)


# --------------------------------------------------------------------------
# z-order


def test_area_descending():
    s = Scaffold(100, 100, (el("small", box=(0, 0, 10, 10)), el("big", box=(0, 0, 20, 20))))
    assert [n.id for n in assign_z_order(build_graph(s)).root.children] == ["big", "small"]


def test_equal_area_y_then_x_then_id():
    s = Scaffold(100, 100, (el("low", box=(0, 30, 10, 40)), el("high", box=(0, 10, 10, 20)),
                            el("right", box=(50, 10, 60, 20)), el("b", box=(70, 70, 80, 80)),
                            el("a", box=(70, 70, 80, 80))))
    order = [n.id for n in assign_z_order(build_graph(s)).root.children]
    assert order == ["high", "right", "low", "a", "b"]


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_z_order_idempotent_and_total(seed):
    s = clean_scaffold(random.Random(seed))
    once = assign_z_order(build_graph(s))
    assert shape(assign_z_order(once)) == shape(once)
    for node, _, _ in once.walk():
        keys = [(-c.element.bbox.area, c.element.bbox.y_min, c.element.bbox.x_min, c.id) for c in node.children]
        assert keys == sorted(keys) and len(set(keys)) == len(keys)


def test_z_order_stable_under_input_permutation():
    s = clean_scaffold(random.Random(9), 12)
    shuffled = list(s.elements)
    random.Random(1).shuffle(shuffled)
    assert shape(z_normalized(s)) == shape(z_normalized(s.with_elements(shuffled)))


# --------------------------------------------------------------------------
# isomorphism


def test_isomorphic_basics():
    s = Scaffold(100, 100, (el("p", box=(0, 0, 50, 50)), el("a", "button", (0, 0, 5, 5), "p"),
                            el("b", "icon", (5, 5, 9, 9), "p")))
    g = build_graph(s)
    assert isomorphic(g, g)
    extra = build_graph(s.with_elements(s.elements + (el("c", "icon", (1, 1, 2, 2), "p"),)))
    assert not isomorphic(g, extra)
    reversed_ = build_graph(s.with_elements((s.elements[0], s.elements[2], s.elements[1])))
    assert isomorphic(assign_z_order(g), assign_z_order(reversed_))
    assert brute_isomorphic(g, reversed_)


def test_isomorphic_checks_labels_and_ids():
    a = build_graph(Scaffold(10, 10, (el("p"), el("x", "button", parent="p"))))
    b = build_graph(Scaffold(10, 10, (el("p"), el("x", "toggle", parent="p"))))
    c = build_graph(Scaffold(10, 10, (el("p"), el("y", "button", parent="p"))))
    assert not isomorphic(a, b) and not isomorphic(a, c)


def test_ids_compare_after_sanitize_and_suffix():
    a = build_graph(Scaffold(10, 10, (el("Main HUD"),)))
    b = build_graph(Scaffold(10, 10, (el("main-hud-2"),)))
    assert isomorphic(a, b)


def _random_small(rng: random.Random, n: int, labels=("panel", "button")) -> Scaffold:
    elements = []
    for i in range(n):
        panels = [e.id for e in elements if e.label.is_container]
        parent = rng.choice(panels + [None])
        elements.append(el(f"{rng.choice('ab')}{i % 2}", rng.choice(labels), parent=parent))
    # ids may repeat; keep the first of each
    seen, unique = set(), []
    for e in elements:
        if e.id not in seen and (e.parent is None or e.parent in seen):
            seen.add(e.id)
            unique.append(e)
    return Scaffold(10, 10, tuple(unique))


@settings(max_examples=300, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 2**32 - 1))
def test_isomorphic_agrees_with_brute_force(seed_a, seed_b):
    rng = random.Random(seed_a)
    a = _random_small(rng, rng.randint(1, 6))
    if seed_b % 3 == 0:
        # guaranteed positive case: same tree, shuffled element order
        shuffled = list(a.elements)
        random.Random(seed_b).shuffle(shuffled)
        b = a.with_elements(shuffled)
    else:
        rb = random.Random(seed_b)
        b = _random_small(rb, rb.randint(1, 6))
    ga, gb = build_graph(a, LENIENT), build_graph(b, LENIENT)
    assert len(ga) <= 7 and len(gb) <= 7
    assert isomorphic(ga, gb) == brute_isomorphic(ga, gb)
