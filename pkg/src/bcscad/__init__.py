"""bcscad: a CSG scripting workbench with source-to-geometry provenance.

Compiles BCS (an OpenSCAD subset) to triangle meshes while tracking, for
every CSG node and every output triangle, the source statements that
created it. On top of that provenance it offers reverse search (3D pick
to code), forward search (code selection to 3D highlight), and direct
manipulation edits synthesized as minimal source splices.
"""

from .csg import CsgNode, CsgTree, EvalDiagnostic, EvalError, EvalLimits
from .evaluator import eval_expr, evaluate_program
from .lang import Ast, AstNode, ParseDiagnostic, SourceSpan, node_at, parse
from .provenance import (
    GhostSpec,
    HighlightState,
    MenuEntry,
    MenuModel,
    ProvenanceError,
    forward_search,
    menu_for,
    select_node,
    variable_search,
)
from .rewriter import (
    EditResult,
    Frame,
    RewriteError,
    TextEdit,
    apply_rotation,
    apply_scale,
    apply_translation,
    fmt_number,
    fmt_vector,
    gizmo_frame,
)
from .session import Session, default_facets, handle_request, recompile
from .values import Value

__version__ = "0.1.0"

__all__ = [
    "Ast", "AstNode", "ParseDiagnostic", "SourceSpan", "node_at", "parse",
    "CsgNode", "CsgTree", "EvalDiagnostic", "EvalError", "EvalLimits",
    "Value", "eval_expr", "evaluate_program",
    "GhostSpec", "HighlightState", "MenuEntry", "MenuModel",
    "ProvenanceError", "forward_search", "menu_for", "select_node",
    "variable_search",
    "EditResult", "Frame", "RewriteError", "TextEdit",
    "apply_rotation", "apply_scale", "apply_translation",
    "fmt_number", "fmt_vector", "gizmo_frame",
    "Session", "default_facets", "handle_request", "recompile",
    "__version__",
]
