"""Abstract CSG tree: evaluated scene structure with full provenance.

Node ids are root paths of child indices ("0.2.1"); the root Group has the
empty path "". Every node records the AST statement that instantiated it
(ast_id), the chain of instantiating statements that led to it
(call_stack, outermost first), and the taint of its parameter values.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lang import Ast
from .lang.source import SourceSpan

PRIM_CUBE = "PrimCube"
PRIM_SPHERE = "PrimSphere"
PRIM_CYLINDER = "PrimCylinder"
TRANSLATE = "Translate"
ROTATE = "Rotate"
SCALE = "Scale"
UNION = "Union"
DIFFERENCE = "Difference"
INTERSECTION = "Intersection"
GROUP = "Group"

PRIM_KINDS = {PRIM_CUBE, PRIM_SPHERE, PRIM_CYLINDER}
TRANSFORM_KINDS = {TRANSLATE, ROTATE, SCALE}
BOOLEAN_KINDS = {UNION, DIFFERENCE, INTERSECTION}

ROOT_ID = ""


@dataclass(frozen=True)
class EvalDiagnostic:
    message: str
    span: SourceSpan
    severity: str = "error"

    def to_json(self) -> dict:
        return {
            "message": self.message,
            "span": self.span.to_json(),
            "severity": self.severity,
        }


class EvalError(Exception):
    """Evaluation aborted; carries the diagnostic to surface."""

    def __init__(self, diagnostic: EvalDiagnostic):
        super().__init__(diagnostic.message)
        self.diagnostic = diagnostic


@dataclass
class EvalLimits:
    max_csg_nodes: int = 100000
    max_loop_iterations: int = 10000
    max_recursion_depth: int = 64

    def __post_init__(self):
        if min(self.max_csg_nodes, self.max_loop_iterations,
               self.max_recursion_depth) <= 0:
            raise ValueError("all limits must be positive")


@dataclass
class CsgNode:
    id: str
    kind: str
    params: dict
    matrix: np.ndarray
    ast_id: int
    call_stack: tuple[int, ...]
    taint: frozenset[int]
    children: list["CsgNode"] = field(default_factory=list)

    @property
    def is_prim(self) -> bool:
        return self.kind in PRIM_KINDS


class CsgTree:
    """Evaluated tree plus the indexes provenance queries need.

    expr_taints: expression ast id -> union of result taints over every
    evaluation of that expression (loops and repeated calls union).
    ident_binders: Ident ast id -> binding-statement ast ids it resolved to.
    """

    def __init__(self, root: CsgNode, ast: Ast,
                 expr_taints: dict[int, frozenset[int]],
                 ident_binders: dict[int, frozenset[int]],
                 warnings: list[EvalDiagnostic]):
        self.root = root
        self.ast = ast
        self.expr_taints = expr_taints
        self.ident_binders = ident_binders
        self.warnings = warnings
        self.nodes: dict[str, CsgNode] = {}
        self.by_ast: dict[int, list[str]] = {}
        self.parent: dict[str, str] = {}
        self._index(root)

    def _index(self, node: CsgNode) -> None:
        self.nodes[node.id] = node
        self.by_ast.setdefault(node.ast_id, []).append(node.id)
        for child in node.children:
            self.parent[child.id] = node.id
            self._index(child)

    def node(self, node_id: str) -> CsgNode:
        return self.nodes[node_id]

    def path_to_root(self, node_id: str) -> list[CsgNode]:
        """Branch [node, parent, ..., root]."""
        out = [self.nodes[node_id]]
        while out[-1].id != ROOT_ID:
            out.append(self.nodes[self.parent[out[-1].id]])
        return out

    def walk(self, start: str = ROOT_ID):
        stack = [self.nodes[start]]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def leaf_set(self, node_id: str) -> frozenset[str]:
        """Ids of the primitive leaves under (and including) a node."""
        return frozenset(n.id for n in self.walk(node_id) if n.is_prim)

    def accumulated_matrix(self, node_id: str) -> np.ndarray:
        """Product of all ancestor matrices, root first, node included."""
        m = np.eye(4)
        for node in reversed(self.path_to_root(node_id)):
            m = m @ node.matrix
        return m
