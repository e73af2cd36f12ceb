"""Bidirectional search between source code and the evaluated CSG tree.

Reverse direction: a picked scene element yields the menu of its CSG
branch (menu_for) and a selection in that menu yields highlight state
(select_node) with target/impacted code spans, target/impacted node
sets, and ghost specifications for hidden boolean operands.

Forward direction: a source selection yields the scene elements it
created (forward_search) or, for a variable, everything its value
flowed into (variable_search).

All queries are pure reads over one immutable (ast, tree) snapshot and
are only valid for the revision they were computed from.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .csg import DIFFERENCE, GROUP, INTERSECTION, ROOT_ID, CsgNode, CsgTree
from .lang.ast import (
    ASSIGNMENT,
    FOR,
    IF,
    INSTANTIATION,
    IDENT,
    MODULE_DEF,
    Ast,
    AstNode,
    SelectionError,
    node_at,
)
from .lang.source import SourceSpan

TARGET = "target"
IMPACTED = "impacted"


class ProvenanceError(ValueError):
    """A search query that cannot be answered for this revision."""


# ---------------------------------------------------------------------------
# Result types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MenuEntry:
    """One CSG branch node as shown in the pick menu."""

    node_id: str
    label: str
    line: int

    def to_json(self) -> dict:
        return {"node_id": self.node_id, "label": self.label, "line": self.line}


@dataclass
class MenuModel:
    """The branch from a picked element up to the root, leaf first."""

    entries: list[MenuEntry]

    def to_json(self) -> dict:
        return {"entries": [e.to_json() for e in self.entries]}


@dataclass
class GhostSpec:
    """A hidden boolean operand to draw semi-transparent.

    source_subtree is a child of the selected Difference/Intersection
    node; world_matrix is the accumulated matrix at that boolean, so a
    client renders the subtree's own geometry under it. classification
    says whether the operand's statement created only this instance
    ("target") or several ("impacted").
    """

    source_subtree: str
    classification: str
    world_matrix: np.ndarray

    def to_json(self) -> dict:
        return {
            "source_subtree": self.source_subtree,
            "classification": self.classification,
            "world_matrix": np.asarray(self.world_matrix, dtype=float).tolist(),
        }


@dataclass
class HighlightState:
    """Everything a client needs to color code and scene after a search.

    target_spans carry the 1-based call order along the selected node's
    call stack (1 = outermost statement); impacted_spans are spans to
    color without an order badge. notice carries a human-readable
    explanation when a search legitimately selects nothing.
    """

    target_spans: list[tuple[SourceSpan, int]] = field(default_factory=list)
    impacted_spans: list[SourceSpan] = field(default_factory=list)
    target_node_ids: list[str] = field(default_factory=list)
    impacted_node_ids: list[str] = field(default_factory=list)
    ghosts: list[GhostSpec] = field(default_factory=list)
    notice: str | None = None

    def to_json(self) -> dict:
        return {
            "target_spans": [
                {"span": span.to_json(), "call_order": order}
                for span, order in self.target_spans
            ],
            "impacted_spans": [s.to_json() for s in self.impacted_spans],
            "target_node_ids": list(self.target_node_ids),
            "impacted_node_ids": list(self.impacted_node_ids),
            "ghosts": [g.to_json() for g in self.ghosts],
            "notice": self.notice,
        }


# ---------------------------------------------------------------------------
# Reverse search: scene -> code
# ---------------------------------------------------------------------------


def _node(tree: CsgTree, node_id: str) -> CsgNode:
    try:
        return tree.node(node_id)
    except KeyError:
        raise ProvenanceError("stale node id; recompile required") from None


def _label(tree: CsgTree, node: CsgNode) -> str:
    """Menu text for one branch node, named after its source statement."""
    if node.id == ROOT_ID:
        return "root"
    ast_node = tree.ast.node(node.ast_id)
    if ast_node.kind == INSTANTIATION:
        # Builtins keep their own name; a user module call reads
        # "module m" because the node itself is an anonymous group.
        if node.kind == GROUP:
            return f"module {ast_node.name}"
        return ast_node.name or node.kind.lower()
    if ast_node.kind == FOR:
        return f"for {ast_node.name}"
    if ast_node.kind == IF:
        return "if"
    return "block"


def menu_for(tree: CsgTree, leaf_id: str) -> MenuModel:
    """The CSG branch from a picked element up to the root, leaf first.

    Each entry names the node and gives the 1-based source line of the
    statement that created it; clients select entries (typically on
    hover) via select_node.
    """
    _node(tree, leaf_id)
    entries = [
        MenuEntry(n.id, _label(tree, n), tree.ast.node(n.ast_id).span.start_line)
        for n in tree.path_to_root(leaf_id)
    ]
    return MenuModel(entries)


def ghost_children(node: CsgNode) -> list[CsgNode]:
    """The operands a boolean hides from view.

    A difference hides everything it subtracts (children after the
    first); an intersection hides every operand's removed remainder, so
    all children qualify. Other kinds hide nothing.
    """
    if node.kind == DIFFERENCE:
        return list(node.children[1:])
    if node.kind == INTERSECTION:
        return list(node.children)
    return []


def _ghosts_for(tree: CsgTree, node: CsgNode) -> list[GhostSpec]:
    eligible = ghost_children(node)
    if not eligible:
        return []
    world = tree.accumulated_matrix(node.id)
    ghosts = []
    for child in eligible:
        # A subtree whose statement created only this instance is part
        # of the selection's own composition; one with siblings from the
        # same statement (loop iterations, repeated calls) is shown in
        # the impacted style, matching how those nodes are classified.
        unique = len(tree.by_ast.get(child.ast_id, [])) == 1
        ghosts.append(GhostSpec(child.id, TARGET if unique else IMPACTED, world))
    return ghosts


def select_node(tree: CsgTree, node_id: str) -> HighlightState:
    """Highlight state for selecting one CSG node.

    The target is the branch root -> node; target_spans walk the node's
    call stack with call-order badges. Impacted nodes are every other
    instance the same statement created, and impacted_spans are their
    call-stack spans not already covered by the target. Selecting a
    difference or intersection additionally yields ghost specs for its
    hidden operands.
    """
    node = _node(tree, node_id)
    branch = tree.path_to_root(node_id)
    target_node_ids = [n.id for n in reversed(branch)]
    target_id_set = set(target_node_ids)

    target_spans = [
        (tree.ast.node(stmt_id).span, order)
        for order, stmt_id in enumerate(node.call_stack, start=1)
    ]
    target_span_set = {span for span, _ in target_spans}

    # Branch ancestors can share the statement under recursion; they
    # stay target, so impacted is the same-statement set minus the branch.
    impacted_ids = [
        nid for nid in tree.by_ast.get(node.ast_id, []) if nid not in target_id_set
    ]
    impacted_spans: set[SourceSpan] = set()
    for nid in impacted_ids:
        for stmt_id in tree.node(nid).call_stack:
            span = tree.ast.node(stmt_id).span
            if span not in target_span_set:
                impacted_spans.add(span)

    return HighlightState(
        target_spans=target_spans,
        impacted_spans=_sorted_spans(impacted_spans),
        target_node_ids=target_node_ids,
        impacted_node_ids=impacted_ids,
        ghosts=_ghosts_for(tree, node),
    )


def _sorted_spans(spans: set[SourceSpan]) -> list[SourceSpan]:
    return sorted(spans, key=lambda s: (s.start, s.end))


# ---------------------------------------------------------------------------
# Forward search: code -> scene
# ---------------------------------------------------------------------------


def forward_search(tree: CsgTree, ast: Ast, sel: SourceSpan) -> HighlightState:
    """Scene elements created by the statement under a source selection.

    One instance becomes a full target selection (as in select_node);
    several instances are all marked impacted; zero instances (uncalled
    module body, untaken branch) yield an empty state with a notice.
    Selecting a variable name or an assignment falls through to
    variable_search.
    """
    node = node_at(ast, sel)
    if node.kind in (IDENT, ASSIGNMENT):
        return variable_search(tree, ast, sel)
    stmt = next(
        (n for n in ast.ancestors(node.id) if n.kind == INSTANTIATION), None
    )
    if stmt is None:
        raise ProvenanceError("not an instantiating statement")

    instances = tree.by_ast.get(stmt.id, [])
    if len(instances) == 1:
        return select_node(tree, instances[0])
    if not instances:
        return HighlightState(
            notice="no elements created by this statement"
        )
    spans: set[SourceSpan] = set()
    for nid in instances:
        for stmt_id in tree.node(nid).call_stack:
            spans.add(ast.node(stmt_id).span)
    return HighlightState(
        impacted_spans=_sorted_spans(spans),
        impacted_node_ids=list(instances),
    )


def variable_search(tree: CsgTree, ast: Ast, sel: SourceSpan) -> HighlightState:
    """Everything a variable's value flowed into.

    Impacted nodes are the CSG nodes whose recorded parameter taint
    includes the variable's binding statement; impacted_spans cover
    every expression whose evaluation read the variable plus the
    statements that instantiated the affected nodes. Variable search
    never produces a target.
    """
    node = _resolve_variable_selection(ast, sel)
    binders = _binders_for(tree, ast, node)

    affected = [n for n in tree.walk() if n.taint & binders]
    spans = {
        ast.node(expr_id).span
        for expr_id, reads in tree.expr_taints.items()
        if reads & binders
    }
    for n in affected:
        spans.add(ast.node(n.ast_id).span)

    return HighlightState(
        impacted_spans=_sorted_spans(spans),
        impacted_node_ids=[n.id for n in affected],
    )


def _resolve_variable_selection(ast: Ast, sel: SourceSpan) -> AstNode:
    """Smallest node containing the selection, allowing 1-char names.

    node_at rejects selections under two characters to avoid accidental
    clicks, but variable names are routinely single letters, so variable
    search descends without that minimum.
    """
    node = ast.node(ast.root)
    while True:
        inner = next(
            (c for c in ast.children(node) if c.span.contains(sel)), None
        )
        if inner is None:
            break
        node = inner
    if node.id == ast.root:
        raise SelectionError("no node at selection")
    return node


def _binders_for(tree: CsgTree, ast: Ast, node: AstNode) -> frozenset[int]:
    """Binding-statement ids for the variable a selection names."""
    if node.kind in (MODULE_DEF, INSTANTIATION):
        raise ProvenanceError("module, not variable")
    if node.kind in (ASSIGNMENT, FOR):
        return frozenset({node.id})
    if node.kind == IDENT:
        parent_id = ast.parent.get(node.id)
        if parent_id is not None and ast.node(parent_id).kind == MODULE_DEF:
            # A bare parameter name in a module signature binds itself.
            return frozenset({node.id})
        recorded = tree.ident_binders.get(node.id)
        if recorded:
            return recorded
        return _binders_by_name(ast, node.name)
    raise ProvenanceError("not a variable")


def _binders_by_name(ast: Ast, name: str | None) -> frozenset[int]:
    """Best-effort binder lookup for a read that never executed.

    Dead code (uncalled modules, untaken branches) records no binder
    during evaluation, so fall back to every binding of that name in the
    file: assignments, loop variables, and module parameters.
    """
    if not name:
        return frozenset()
    binders: set[int] = set()
    for n in ast.walk():
        if n.name != name:
            continue
        if n.kind in (ASSIGNMENT, FOR):
            binders.add(n.id)
        elif n.kind == IDENT:
            parent_id = ast.parent.get(n.id)
            if parent_id is not None and ast.node(parent_id).kind == MODULE_DEF:
                binders.add(n.id)
    return frozenset(binders)
