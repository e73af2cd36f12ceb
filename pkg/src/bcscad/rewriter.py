"""Minimal source splices realizing gizmo drags on the evaluated tree.

Each operation turns a transform request on one CSG node into a single
TextEdit: either updating an existing transform's literal arguments or
inserting a new wrapper statement. The contract is geometric, not
textual: recompiling the new source must move the selected subtree
exactly as the gizmo asked (translation along gizmo axes, rotation
about the gizmo origin), while every byte outside the edit span stays
untouched.

An existing transform is only modified when it affects precisely the
selected element: its subtree covers the same primitive leaves, its
statement created exactly one CSG node, and its arguments are literal
numbers the user is not computing elsewhere. Otherwise a wrapper is
inserted at the innermost enclosing statement unique to the selected
instance (the call site when the selection lives inside a shared module
body), with the vector re-expressed for the insertion frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import mats
from .csg import ROOT_ID, ROTATE, SCALE, TRANSLATE, CsgNode, CsgTree
from .lang import ast as A
from .lang.ast import Ast, AstNode
from .lang.source import SourceSpan

MODIFIED_EXISTING = "modified_existing"
INSERTED_NEW = "inserted_new"
UPDATED_PRIMITIVE = "updated_primitive"

_AXES = {
    "x": np.array([1.0, 0.0, 0.0]),
    "y": np.array([0.0, 1.0, 0.0]),
    "z": np.array([0.0, 0.0, 1.0]),
}


class RewriteError(ValueError):
    """An edit request that cannot be realized as a source splice."""


# ---------------------------------------------------------------------------
# Result types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Frame:
    """Gizmo placement: accumulated rotation and translation, scale-free."""

    rotation: np.ndarray
    origin: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float)
        if r.shape != (3, 3) or not np.allclose(r.T @ r, np.eye(3), atol=1e-9):
            raise ValueError("frame rotation must be orthonormal")

    def to_json(self) -> dict:
        return {
            "rotation": np.asarray(self.rotation, dtype=float).tolist(),
            "origin": np.asarray(self.origin, dtype=float).tolist(),
        }


@dataclass(frozen=True)
class TextEdit:
    """Replace one byte range of the source; everything else is untouched."""

    span: SourceSpan
    replacement: str

    def apply(self, source: str) -> str:
        data = source.encode("utf-8")
        patched = (data[: self.span.start]
                   + self.replacement.encode("utf-8")
                   + data[self.span.end:])
        return patched.decode("utf-8")

    def to_json(self) -> dict:
        return {"span": self.span.to_json(), "replacement": self.replacement}


@dataclass
class EditResult:
    """One applied splice plus where the selection lands afterwards."""

    new_source: str
    edit: TextEdit
    action: str
    selected_node_after: str

    def to_json(self) -> dict:
        return {
            "new_source": self.new_source,
            "edit": self.edit.to_json(),
            "action": self.action,
            "selected_node_after": self.selected_node_after,
        }


# ---------------------------------------------------------------------------
# Number and vector formatting
# ---------------------------------------------------------------------------


def fmt_number(x: float) -> str:
    """Literal text for a spliced number.

    Four decimal places cover wheel-sized increments; more digits are
    added only when rounding would visibly move the geometry (parse-back
    error above 1e-9 relative). Trailing zeros and negative zero are
    normalized away.
    """
    x = float(x)
    if x == 0.0:
        x = 0.0  # collapse -0.0
    text = f"{x:.4f}"
    for digits in range(4, 15):
        text = f"{x:.{digits}f}"
        if abs(float(text) - x) <= 1e-9 * max(1.0, abs(x)):
            break
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    if text in ("-0", ""):
        text = "0"
    return text


def fmt_vector(values) -> str:
    return "[" + ", ".join(fmt_number(v) for v in values) + "]"


# ---------------------------------------------------------------------------
# Frames
# ---------------------------------------------------------------------------


def _node(tree: CsgTree, node_id: str) -> CsgNode:
    try:
        return tree.node(node_id)
    except KeyError:
        raise RewriteError("stale node id; recompile required") from None


def gizmo_frame(tree: CsgTree, node_id: str) -> Frame:
    """Where the manipulation gizmo sits for a node.

    Composes only the Translate and Rotate matrices from the root down
    to the node (inclusive); Scale ancestors are skipped so the gizmo
    never shears or changes size.
    """
    _node(tree, node_id)
    m = np.eye(4)
    for n in reversed(tree.path_to_root(node_id)):
        if n.kind in (TRANSLATE, ROTATE):
            m = m @ n.matrix
    return Frame(m[:3, :3].copy(), m[:3, 3].copy())


def _linear_above(tree: CsgTree, node: CsgNode) -> np.ndarray:
    """Full linear part (scale included) accumulated above a node."""
    parent_id = tree.parent.get(node.id, ROOT_ID)
    return tree.accumulated_matrix(parent_id)[:3, :3]


def _solve(linear: np.ndarray, vec: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.solve(linear, vec)
    except np.linalg.LinAlgError:
        raise RewriteError(
            "ancestor scale is singular; cannot re-express the edit") from None


# ---------------------------------------------------------------------------
# AST argument inspection
# ---------------------------------------------------------------------------


def _arguments(ast: Ast, stmt: AstNode) -> list[tuple[str | None, AstNode]]:
    names = list(stmt.arg_names or [])
    exprs = ast.children(stmt)[: len(names)]
    return list(zip(names, exprs))


def _bound_argument(ast: Ast, stmt: AstNode, param_names: list[str],
                    target: str) -> AstNode | None:
    """The expression bound to one parameter, mirroring call binding."""
    bound: dict[str, AstNode] = {}
    position = 0
    for name, expr in _arguments(ast, stmt):
        if name is None:
            if position < len(param_names):
                bound[param_names[position]] = expr
                position += 1
        else:
            bound[name] = expr
    return bound.get(target)


def _literal_number(ast: Ast, expr: AstNode) -> float | None:
    """The value of a numeric literal, allowing a leading sign."""
    if expr.kind == A.NUMBER_LIT:
        return float(expr.name)
    if expr.kind == A.UNARY_OP and expr.name in ("-", "+"):
        inner = _literal_number(ast, ast.node(expr.children[0]))
        if inner is None:
            return None
        return -inner if expr.name == "-" else inner
    return None


def _literal_vector(ast: Ast, expr: AstNode) -> list[float] | None:
    """Component values of a literal vector of at most three numbers."""
    if expr.kind != A.VECTOR_LIT or len(expr.children) > 3:
        return None
    values = []
    for child_id in expr.children:
        value = _literal_number(ast, ast.node(child_id))
        if value is None:
            return None
        values.append(value)
    return values


def _padded(values: list[float], fill: float) -> np.ndarray:
    return np.array(values + [fill] * (3 - len(values)), dtype=float)


# ---------------------------------------------------------------------------
# Edit sites
# ---------------------------------------------------------------------------


def _insertion_node(tree: CsgTree, node: CsgNode) -> CsgNode:
    """Innermost enclosing node whose statement created only this instance.

    Wrapping that statement is the only way to move the selection
    without also moving impacted instances of a shared statement (loop
    bodies, module bodies called more than once).
    """
    for candidate in tree.path_to_root(node.id):
        if candidate.id == ROOT_ID:
            break
        if len(tree.by_ast.get(candidate.ast_id, ())) == 1:
            return candidate
    raise RewriteError(
        "every enclosing statement creates multiple instances; "
        "cannot edit one instance alone")


def _wrapped_id(selected_id: str, wrapped_id: str, depth: int) -> str:
    """New id of the selection after `depth` wrappers enclose a node."""
    suffix = selected_id[len(wrapped_id):]
    return wrapped_id + ".0" * depth + suffix


def _splice(ast: Ast, edit: TextEdit, action: str,
            selected_after: str) -> EditResult:
    return EditResult(edit.apply(ast.source), edit, action, selected_after)


def _insert_prefix(ast: Ast, tree: CsgTree, site: CsgNode, prefix: str,
                   selected_id: str, depth: int) -> EditResult:
    stmt = ast.node(site.ast_id)
    edit = TextEdit(ast.span(stmt.span.start, stmt.span.start), prefix)
    return _splice(ast, edit, INSERTED_NEW,
                   _wrapped_id(selected_id, site.id, depth))


def _merge_pieces(ast: Ast, pieces: list[tuple[SourceSpan, str]]) -> TextEdit:
    """Combine several literal replacements into one covering TextEdit.

    The bytes between the replaced literals (names, commas, comments)
    are copied from the original source, so the merged edit is still
    minimal in effect even though its span covers the whole run.
    """
    pieces = sorted(pieces, key=lambda p: p[0].start)
    data = ast.index.data
    out: list[str] = []
    cursor = pieces[0][0].start
    for span, text in pieces:
        out.append(data[cursor:span.start].decode("utf-8"))
        out.append(text)
        cursor = span.end
    return TextEdit(ast.span(pieces[0][0].start, pieces[-1][0].end),
                    "".join(out))


# ---------------------------------------------------------------------------
# Translation
# ---------------------------------------------------------------------------


def _eligible_translate(tree: CsgTree, node: CsgNode):
    """Nearest self-or-ancestor Translate that only affects the selection.

    Conditions: the candidate's subtree covers exactly the selection's
    primitive leaves, its statement created exactly one CSG node, and
    its vector argument is all numeric literals. The scan stops once an
    ancestor's subtree grows past the selection.
    """
    ast = tree.ast
    leaves = tree.leaf_set(node.id)
    for candidate in tree.path_to_root(node.id):
        if candidate.id == ROOT_ID or tree.leaf_set(candidate.id) != leaves:
            break
        if candidate.kind != TRANSLATE:
            continue
        if len(tree.by_ast.get(candidate.ast_id, ())) != 1:
            continue
        stmt = ast.node(candidate.ast_id)
        expr = _bound_argument(ast, stmt, ["v"], "v")
        if expr is None:
            continue
        components = _literal_vector(ast, expr)
        if components is None:
            continue
        return candidate, expr, components
    return None


def apply_translation(session, node_id: str, local_delta) -> EditResult:
    """Move a node by a delta given along its gizmo axes.

    Prefers adding the delta into an existing translate's literal vector
    (re-expressed for that translate's frame); otherwise inserts a
    `translate([...])` wrapper before the innermost statement unique to
    the selected instance. Recompiling moves the subtree's world-space
    vertices by exactly rotation(gizmo) @ local_delta.
    """
    tree: CsgTree = session.tree
    ast = tree.ast
    node = _node(tree, node_id)
    if node.id == ROOT_ID:
        raise RewriteError("cannot transform the root node")
    delta = np.asarray(local_delta, dtype=float).reshape(3)
    if not np.all(np.isfinite(delta)):
        raise RewriteError("translation delta must be finite")

    world = gizmo_frame(tree, node_id).rotation @ delta

    existing = _eligible_translate(tree, node)
    if existing is not None:
        candidate, expr, components = existing
        shift = _solve(tree.accumulated_matrix(candidate.id)[:3, :3], world)
        new_vector = _padded(components, 0.0) + shift
        edit = TextEdit(expr.span, fmt_vector(new_vector))
        return _splice(ast, edit, MODIFIED_EXISTING, node_id)

    site = _insertion_node(tree, node)
    vector = _solve(_linear_above(tree, site), world)
    return _insert_prefix(ast, tree, site, f"translate({fmt_vector(vector)}) ",
                          node_id, depth=1)


# ---------------------------------------------------------------------------
# Rotation
# ---------------------------------------------------------------------------


def _eligible_rotate(tree: CsgTree, node: CsgNode):
    """The node itself or its immediate parent, when that is a Rotate
    whose subtree equals the selection's leaves, whose statement has a
    single instance, and whose angle argument is literal."""
    candidates = [node]
    parent_id = tree.parent.get(node.id)
    if parent_id is not None:
        candidates.append(tree.node(parent_id))
    leaves = tree.leaf_set(node.id)
    for candidate in candidates:
        if candidate.kind != ROTATE:
            continue
        if tree.leaf_set(candidate.id) != leaves:
            continue
        if len(tree.by_ast.get(candidate.ast_id, ())) != 1:
            continue
        stmt = tree.ast.node(candidate.ast_id)
        expr = _bound_argument(tree.ast, stmt, ["a"], "a")
        if expr is None:
            continue
        if (_literal_vector(tree.ast, expr) is None
                and _literal_number(tree.ast, expr) is None):
            continue
        return candidate, expr
    return None


def _euler_text(rotation: np.ndarray) -> str:
    """Euler XYZ literals for a rotation, verified by recomposition."""
    rx, ry, rz = mats.euler_xyz_from_rotation(rotation)
    rebuilt = mats.rotation_xyz(rx, ry, rz)[:3, :3]
    if not np.allclose(rebuilt, rotation, atol=1e-9):
        raise RewriteError("rotation cannot be decomposed into Euler angles")
    return fmt_vector([rx, ry, rz])


def _orthonormalized(m: np.ndarray) -> np.ndarray:
    """Nearest rotation matrix; errors if the input actually shears."""
    if not np.allclose(m.T @ m, np.eye(3) * (m[0] @ m[0]), atol=1e-6):
        raise RewriteError(
            "cannot realize a pure rotation beneath a non-uniform scale")
    u, _, vt = np.linalg.svd(m)
    r = u @ vt
    if np.linalg.det(r) < 0:
        u[:, -1] = -u[:, -1]
        r = u @ vt
    return r


def apply_rotation(session, node_id: str, axis: str,
                   angle_deg: float) -> EditResult:
    """Rotate a node about one of its gizmo axes through the gizmo origin.

    Composes into an existing rotate (the node or its immediate parent)
    when that rotate only affects the selection and the gizmo origin
    sits on its pivot; otherwise inserts `rotate([...])`, preceded by a
    compensating `translate([...])` whenever the insertion point's
    origin differs from the gizmo origin.
    """
    tree: CsgTree = session.tree
    ast = tree.ast
    node = _node(tree, node_id)
    if node.id == ROOT_ID:
        raise RewriteError("cannot transform the root node")
    if axis not in _AXES:
        raise RewriteError("axis must be x, y, or z")
    angle = float(angle_deg)
    if not math.isfinite(angle):
        raise RewriteError("rotation angle must be finite")

    frame = gizmo_frame(tree, node_id)
    axis_world = frame.rotation @ _AXES[axis]
    rot_world = mats.axis_angle(axis_world, angle)[:3, :3]

    existing = _eligible_rotate(tree, node)
    if existing is not None:
        candidate, expr = existing
        pivot = tree.accumulated_matrix(
            tree.parent.get(candidate.id, ROOT_ID))[:3, 3]
        off_pivot = (np.eye(3) - rot_world) @ (frame.origin - pivot)
        scale = max(1.0, float(np.linalg.norm(frame.origin)),
                    float(np.linalg.norm(pivot)))
        if np.linalg.norm(off_pivot) <= 1e-9 * scale:
            old = candidate.matrix[:3, :3]
            new = old @ mats.axis_angle(_AXES[axis], angle)[:3, :3]
            edit = TextEdit(expr.span, _euler_text(_orthonormalized(new)))
            return _splice(ast, edit, MODIFIED_EXISTING, node_id)

    site = _insertion_node(tree, node)
    above = tree.accumulated_matrix(tree.parent.get(site.id, ROOT_ID))
    linear, origin = above[:3, :3], above[:3, 3]
    local_rot = _orthonormalized(_solve(linear, rot_world @ linear))
    offset = _solve(linear, (np.eye(3) - rot_world) @ (frame.origin - origin))

    prefix = ""
    depth = 1
    if np.linalg.norm(offset) > 1e-9 * max(1.0, np.linalg.norm(frame.origin)):
        prefix = f"translate({fmt_vector(offset)}) "
        depth = 2
    prefix += f"rotate({_euler_text(local_rot)}) "
    return _insert_prefix(ast, tree, site, prefix, node_id, depth)


# ---------------------------------------------------------------------------
# Scale
# ---------------------------------------------------------------------------


def _eligible_scale(tree: CsgTree, node: CsgNode):
    """The node itself, or a parent Scale whose only child is the node."""
    candidates = [node]
    parent_id = tree.parent.get(node.id)
    if parent_id is not None:
        parent = tree.node(parent_id)
        if len(parent.children) == 1:
            candidates.append(parent)
    for candidate in candidates:
        if candidate.kind != SCALE:
            continue
        if len(tree.by_ast.get(candidate.ast_id, ())) != 1:
            continue
        stmt = tree.ast.node(candidate.ast_id)
        expr = _bound_argument(tree.ast, stmt, ["v"], "v")
        if expr is None:
            continue
        vector = _literal_vector(tree.ast, expr)
        scalar = _literal_number(tree.ast, expr)
        if vector is None and scalar is None:
            continue
        values = (_padded(vector, 1.0) if vector is not None
                  else np.full(3, scalar))
        return expr, values
    return None


def apply_scale(session, node_id: str, factors, mode: str) -> EditResult:
    """Scale a node, either through a scale element or the primitive itself.

    scale_node multiplies an existing eligible scale's vector
    componentwise or inserts a `scale([...])` wrapper; scale_primitive
    rewrites the primitive's own literal arguments (cube size, sphere
    radius, cylinder radii and height) when the factors are compatible
    with the primitive's symmetry.
    """
    tree: CsgTree = session.tree
    ast = tree.ast
    node = _node(tree, node_id)
    if node.id == ROOT_ID:
        raise RewriteError("cannot transform the root node")
    f = np.asarray(factors, dtype=float).reshape(3)
    if not np.all(np.isfinite(f)) or np.any(f <= 0):
        raise RewriteError("scale factors must be positive")

    if mode == "scale_primitive":
        return _scale_primitive(ast, tree, node, f)
    if mode != "scale_node":
        raise RewriteError("scale mode must be scale_node or scale_primitive")

    existing = _eligible_scale(tree, node)
    if existing is not None:
        expr, values = existing
        edit = TextEdit(expr.span, fmt_vector(values * f))
        return _splice(ast, edit, MODIFIED_EXISTING, node_id)

    site = _insertion_node(tree, node)
    return _insert_prefix(ast, tree, site, f"scale({fmt_vector(f)}) ",
                          node_id, depth=1)


def _needs(factor: float) -> bool:
    return abs(factor - 1.0) > 1e-12


def _scaled_literal(ast: Ast, expr: AstNode | None, factor: float,
                    what: str) -> tuple[SourceSpan, str] | None:
    """One literal replacement, or None when the factor leaves it alone."""
    if not _needs(factor):
        return None
    if expr is None:
        raise RewriteError(f"{what} parameter is absent; use scale_node")
    value = _literal_number(ast, expr)
    if value is None:
        raise RewriteError(f"{what} parameter is an expression; use scale_node")
    return expr.span, fmt_number(value * factor)


def _scale_primitive(ast: Ast, tree: CsgTree, node: CsgNode,
                     f: np.ndarray) -> EditResult:
    if not node.is_prim:
        raise RewriteError("scale_primitive requires a primitive node")
    stmt = ast.node(node.ast_id)
    uniform_xy = abs(f[0] - f[1]) <= 1e-9 * max(1.0, abs(f[0]), abs(f[1]))
    uniform = uniform_xy and abs(f[0] - f[2]) <= 1e-9 * max(
        1.0, abs(f[0]), abs(f[2]))
    pieces: list[tuple[SourceSpan, str]] = []

    if node.kind == "PrimCube":
        expr = _bound_argument(ast, stmt, ["size", "center"], "size")
        if np.any([_needs(c) for c in f]):
            if expr is None:
                raise RewriteError("size parameter is absent; use scale_node")
            scalar = _literal_number(ast, expr)
            vector = _literal_vector(ast, expr)
            if scalar is not None:
                if uniform:
                    pieces.append((expr.span, fmt_number(scalar * f[0])))
                else:
                    pieces.append((expr.span, fmt_vector(scalar * f)))
            elif vector is not None:
                pieces.append((expr.span, fmt_vector(_padded(vector, 0.0) * f)))
            else:
                raise RewriteError(
                    "size parameter is an expression; use scale_node")

    elif node.kind == "PrimSphere":
        if not uniform:
            raise RewriteError("primitive cannot absorb anisotropic scale")
        expr = _bound_argument(ast, stmt, ["r"], "r")
        piece = _scaled_literal(ast, expr, f[0], "r")
        if piece is not None:
            pieces.append(piece)

    else:  # PrimCylinder
        if not uniform_xy:
            raise RewriteError("primitive cannot absorb anisotropic scale")
        height = _bound_argument(ast, stmt, ["h", "r", "center"], "h")
        piece = _scaled_literal(ast, height, f[2], "h")
        if piece is not None:
            pieces.append(piece)
        radius = _bound_argument(ast, stmt, ["h", "r", "center"], "r")
        r1 = _bound_argument(ast, stmt, [], "r1")
        r2 = _bound_argument(ast, stmt, [], "r2")
        if _needs(f[0]):
            if radius is None and (r1 is None or r2 is None):
                raise RewriteError(
                    "radius parameter is absent; use scale_node")
        for name, expr in (("r", radius), ("r1", r1), ("r2", r2)):
            if expr is None:
                continue
            piece = _scaled_literal(ast, expr, f[0], name)
            if piece is not None:
                pieces.append(piece)

    if not pieces:
        # nothing to change: all effective factors are 1
        edit = TextEdit(ast.span(stmt.span.start, stmt.span.start), "")
        return _splice(ast, edit, UPDATED_PRIMITIVE, node.id)
    edit = _merge_pieces(ast, pieces)
    return _splice(ast, edit, UPDATED_PRIMITIVE, node.id)
