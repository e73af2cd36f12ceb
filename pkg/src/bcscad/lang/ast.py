"""AST node and tree containers, plus selection-to-node resolution.

Nodes form a tree over byte-exact source spans: every child span is
contained in its parent span, and ids are assigned in document order by a
single pre-order pass after parsing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

from .source import LineIndex, SourceSpan

# Statement kinds
ASSIGNMENT = "Assignment"
MODULE_DEF = "ModuleDef"
INSTANTIATION = "Instantiation"
FOR = "For"
IF = "If"
BLOCK = "Block"
# Expression kinds
NUMBER_LIT = "NumberLit"
BOOL_LIT = "BoolLit"
VECTOR_LIT = "VectorLit"
RANGE_LIT = "RangeLit"
IDENT = "Ident"
BINARY_OP = "BinaryOp"
UNARY_OP = "UnaryOp"
INDEX = "Index"
CALL = "Call"

STATEMENT_KINDS = {ASSIGNMENT, MODULE_DEF, INSTANTIATION, FOR, IF, BLOCK}
EXPRESSION_KINDS = {
    NUMBER_LIT, BOOL_LIT, VECTOR_LIT, RANGE_LIT, IDENT,
    BINARY_OP, UNARY_OP, INDEX, CALL,
}


@dataclass(frozen=True)
class ParseDiagnostic:
    message: str
    span: SourceSpan
    severity: str = "error"

    def to_json(self) -> dict:
        return {
            "message": self.message,
            "span": self.span.to_json(),
            "severity": self.severity,
        }


@dataclass
class AstNode:
    """One syntax node.

    name holds the identifier text where the kind has one (module name,
    instantiated name, assigned variable, loop variable, operator text,
    number/bool literal text). children are node ids in document order.
    arg_names parallels the argument children of Instantiation/ModuleDef
    nodes: the parameter-name text for named arguments, None for
    positional ones.
    """

    id: int
    kind: str
    span: SourceSpan
    name: str | None = None
    children: list[int] = field(default_factory=list)
    arg_names: list[str | None] | None = None
    # backref to the owning tree, set by Ast.__init__
    ast: "Ast | None" = field(default=None, repr=False, compare=False)


class Ast:
    """Parsed program: node table, parent links, and the source it came from."""

    def __init__(self, source: str, index: LineIndex, root: int,
                 nodes: dict[int, AstNode]):
        self.source = source
        self.index = index
        self.root = root
        self.nodes = nodes
        self.parent: dict[int, int] = {}
        for node in nodes.values():
            node.ast = self
            for child in node.children:
                self.parent[child] = node.id

    def node(self, node_id: int) -> AstNode:
        return self.nodes[node_id]

    def children(self, node: AstNode) -> list[AstNode]:
        return [self.nodes[c] for c in node.children]

    def text(self, node_or_span: AstNode | SourceSpan) -> str:
        span = node_or_span.span if isinstance(node_or_span, AstNode) else node_or_span
        return self.index.text(span)

    def span(self, start: int, end: int) -> SourceSpan:
        return self.index.span(start, end)

    def walk(self, start: int | None = None) -> Iterator[AstNode]:
        stack = [self.root if start is None else start]
        while stack:
            node = self.nodes[stack.pop()]
            yield node
            stack.extend(reversed(node.children))

    def ancestors(self, node_id: int) -> Iterator[AstNode]:
        """Yields the node itself, then each parent up to the root."""
        current: int | None = node_id
        while current is not None:
            node = self.nodes[current]
            yield node
            current = self.parent.get(current)


class SelectionError(ValueError):
    """Raised when a source selection does not resolve to a node."""


def node_at(ast: Ast, sel: SourceSpan) -> AstNode:
    """Resolve a selection to the smallest AST node whose span contains it.

    Selections shorter than 2 characters are rejected. A selection that
    only covers whitespace or comments between statements raises
    "no node at selection"; one that straddles two sibling statements
    raises "selection crosses statement boundary".
    """
    text = ast.index.data[sel.start:sel.end].decode("utf-8", "replace")
    if len(text) < 2:
        raise SelectionError("selection too short; select at least 2 characters")
    if sel.start < 0 or sel.end > len(ast.index.data):
        raise SelectionError("selection out of range")
    return _descend(ast, ast.node(ast.root), sel)


def _descend(ast: Ast, node: AstNode, sel: SourceSpan) -> AstNode:
    for child in ast.children(node):
        if child.span.contains(sel):
            return _descend(ast, child, sel)
    if node.kind != BLOCK:
        return node
    hit = [c for c in ast.children(node) if c.span.overlaps(sel)]
    if len(hit) == 0:
        raise SelectionError("no node at selection")
    if len(hit) > 1:
        raise SelectionError("selection crosses statement boundary")
    # Selection leaks into trivia around exactly one child: clamp into it.
    child = hit[0]
    clamped = ast.span(max(sel.start, child.span.start), min(sel.end, child.span.end))
    return _descend(ast, child, clamped)
