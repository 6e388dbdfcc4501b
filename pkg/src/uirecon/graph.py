"""Scene graph: the scaffold's parent links turned into a rooted tree.

The canvas is a synthetic root node, so several top-level panels still form
a single tree. Sibling order is paint order (earlier = behind).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Iterator, Mapping

from .diagnostics import Diagnostic, GraphError
from .naming import identity_key
from .schema import LENIENT, STRICT, BBox, Scaffold, UIElement, _find_cycles

ROOT_ID = "__canvas__"


@dataclass(frozen=True)
class Node:
    element: UIElement | None
    children: tuple["Node", ...] = ()

    @property
    def is_root(self) -> bool:
        return self.element is None

    @property
    def id(self) -> str:
        return ROOT_ID if self.element is None else self.element.id


@dataclass(frozen=True)
class SceneGraph:
    root: Node
    canvas_width: int
    canvas_height: int
    diagnostics: tuple[Diagnostic, ...] = field(default=(), compare=False)

    @property
    def canvas_box(self) -> BBox:
        return BBox(0, 0, self.canvas_width, self.canvas_height)

    def bbox_of(self, node: Node) -> BBox:
        return self.canvas_box if node.element is None else node.element.bbox

    def walk(self) -> Iterator[tuple[Node, Node | None, int]]:
        """Depth-first pre-order over ``(node, parent, depth)``; the root has depth 0."""
        stack: list[tuple[Node, Node | None, int]] = [(self.root, None, 0)]
        while stack:
            node, parent, depth = stack.pop()
            yield node, parent, depth
            for child in reversed(node.children):
                stack.append((child, node, depth + 1))

    def elements(self) -> list[UIElement]:
        """Elements in depth-first document order (root excluded)."""
        return [n.element for n, _, _ in self.walk() if n.element is not None]

    def parent_of(self) -> dict[str, str | None]:
        return {n.id: (None if p is None or p.is_root else p.id) for n, p, _ in self.walk() if not n.is_root}

    def __len__(self) -> int:
        return sum(1 for _ in self.walk())


def from_parent_map(elements: Mapping[str, UIElement], parent_of: Mapping[str, str | None],
                    canvas_width: int, canvas_height: int, order: list[str],
                    diagnostics: tuple[Diagnostic, ...] = ()) -> SceneGraph:
    """Assemble a graph; ``order`` fixes sibling order, ``parent_of`` must be acyclic."""
    kids: dict[str | None, list[str]] = {}
    for el_id in order:
        kids.setdefault(parent_of[el_id], []).append(el_id)

    def build(el_id: str) -> Node:
        return Node(elements[el_id], tuple(build(c) for c in kids.get(el_id, ())))

    root = Node(None, tuple(build(c) for c in kids.get(None, ())))
    return SceneGraph(root, canvas_width, canvas_height, diagnostics)


def build_graph(s: Scaffold, mode: str = STRICT) -> SceneGraph:
    """Build the scene graph for ``s``.

    Raises GraphError on duplicate ids or cycles, and on dangling parents in
    strict mode. Lenient mode attaches orphans to the root and records
    ``W_ORPHAN_PROMOTED`` on the graph.
    """
    if mode not in (STRICT, LENIENT):
        raise ValueError(f"unknown mode {mode!r}")
    table: dict[str, UIElement] = {}
    for el in s.elements:
        if el.id in table:
            raise GraphError(Diagnostic("E_DUP_ID", f"id {el.id!r} is already used", el.id))
        table[el.id] = el

    notes: list[Diagnostic] = []
    parent_of: dict[str, str | None] = {}
    for el in s.elements:
        parent = el.parent
        if parent is not None and parent not in table:
            if mode == STRICT:
                raise GraphError(Diagnostic("E_DANGLING_PARENT", f"parent {parent!r} does not exist", el.id))
            notes.append(Diagnostic("W_ORPHAN_PROMOTED", f"parent {parent!r} does not exist; attached to root",
                                    el.id))
            parent = None
        parent_of[el.id] = parent

    cycles = _find_cycles(parent_of)
    if cycles:
        cycle = cycles[0]
        raise GraphError(Diagnostic("E_CYCLE", "parent cycle: " + " -> ".join(cycle + [cycle[0]]), cycle[0]))

    if any(el.parent not in (None, parent_of[el.id]) for el in s.elements):
        table = {k: (replace(v, parent=parent_of[k]) if v.parent != parent_of[k] else v) for k, v in table.items()}
    return from_parent_map(table, parent_of, s.canvas_width, s.canvas_height,
                           [el.id for el in s.elements], tuple(notes))


def z_key(element: UIElement) -> tuple:
    box = element.bbox
    return (-box.area, box.y_min, box.x_min, element.id)


def assign_z_order(g: SceneGraph) -> SceneGraph:
    """Sort every sibling list by (area desc, y_min, x_min, id): big things paint first."""

    def sort(node: Node) -> Node:
        children = sorted((sort(c) for c in node.children), key=lambda n: z_key(n.element))
        return Node(node.element, tuple(children))

    return replace(g, root=sort(g.root))


def _canonical(node: Node, key: Callable[[Node], tuple]) -> tuple:
    return (key(node), tuple(sorted(_canonical(c, key) for c in node.children)))


def node_key(node: Node, label_key: Callable | None = None) -> tuple:
    if node.element is None:
        return ("", ROOT_ID)
    label = label_key(node.element.label) if label_key else node.element.label.key
    return (label, identity_key(node.element.id))


def isomorphic(a: SceneGraph, b: SceneGraph, label_key: Callable | None = None) -> bool:
    """True iff some bijection of nodes preserves edges, labels and ids.

    Boxes and sibling order are ignored. ``label_key`` maps a Label to the
    value compared; by default fallback tags compare raw and known tags by kind.
    Ids compare after sanitizing and stripping collision suffixes.
    """
    key = lambda n: node_key(n, label_key)  # noqa: E731
    return _canonical(a.root, key) == _canonical(b.root, key)


def z_normalized(s: Scaffold, mode: str = LENIENT) -> SceneGraph:
    return assign_z_order(build_graph(s, mode))
