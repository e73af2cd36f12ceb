"""Shared test helpers: structural invariants and tiny reference checks."""

from __future__ import annotations

from bcscad import evaluate_program
from bcscad.csg import CsgTree, EvalLimits
from bcscad.lang import Ast, parse
from bcscad.lang.lexer import EOF, tokenize


def compile_tree(source: str, limits: EvalLimits | None = None,
                 default_fn: int = 32) -> CsgTree:
    """Parse and evaluate, failing the test on parse diagnostics."""
    ast, diags = parse(source)
    assert not diags, f"parse failed: {[d.message for d in diags]}"
    return evaluate_program(ast, limits, default_fn)


def span_of(ast: Ast, needle: str, occurrence: int = 1):
    """Span of the n-th occurrence (1-based) of a source substring."""
    data = ast.index.data
    encoded = needle.encode("utf-8")
    start = -1
    for _ in range(occurrence):
        start = data.find(encoded, start + 1)
        assert start >= 0, f"{needle!r} occurrence {occurrence} not in source"
    return ast.span(start, start + len(encoded))


def trivia_only(text: str) -> bool:
    """True if text is only whitespace, comments, or empty statements (';')."""
    try:
        tokens = tokenize(text)
    except Exception:
        return False
    return all(t.kind == EOF or t.text == ";" for t in tokens)


def assert_span_tree_valid(ast: Ast) -> None:
    """Core span-fidelity invariants for one parse result."""
    seen = set()
    for node in ast.walk():
        assert node.id not in seen, "duplicate node id"
        seen.add(node.id)
        assert 0 <= node.span.start <= node.span.end <= len(ast.index.data)
        children = ast.children(node)
        for child in children:
            assert node.span.contains(child.span), (
                f"child {child.kind} span escapes parent {node.kind}")
        for a, b in zip(children, children[1:]):
            assert a.span.end <= b.span.start, "sibling spans overlap"

    # ids assigned in document order: pre-order walk is strictly increasing
    ids = [n.id for n in ast.walk()]
    assert ids == sorted(ids)

    # top-level statement spans plus the trivia between them rebuild the file
    root = ast.node(ast.root)
    cursor = 0
    for child in ast.children(root):
        gap = ast.index.data[cursor:child.span.start].decode("utf-8", "replace")
        assert trivia_only(gap), f"non-trivia between statements: {gap!r}"
        cursor = child.span.end
    tail = ast.index.data[cursor:].decode("utf-8", "replace")
    assert trivia_only(tail), f"non-trivia after last statement: {tail!r}"


def structure(ast: Ast, node_id: int | None = None):
    """Span-free structural fingerprint used for determinism comparisons."""
    node = ast.node(ast.root if node_id is None else node_id)
    return (node.kind, node.name, tuple(node.arg_names or []),
            tuple(structure(ast, c) for c in node.children))
