"""Scene assembly and ray picking.

A Scene is the renderable form of an evaluated tree: one world-space mesh
per top-level statement (a "part"), plus optional ghost parts while a
boolean selection is active. Picking walks every triangle of every part
and answers with the provenance tag of the nearest one.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..csg import (
    BOOLEAN_KINDS, GROUP, TRANSFORM_KINDS, UNION,
    CsgNode, CsgTree, EvalDiagnostic, EvalError,
)
from .bsp import csg_combine
from .mesh import Mesh, empty_mesh, transform_mesh
from .tessellate import TessellationError, tessellate


@dataclass
class ScenePart:
    node_id: str
    mesh: Mesh

    def to_json(self) -> dict:
        return {"node_id": self.node_id, **self.mesh.to_json()}


@dataclass
class GhostPart:
    """A cloned subtree rendered semi-transparent at its boolean's frame."""

    node_id: str
    mesh: Mesh
    classification: str  # "target" | "impacted"

    def to_json(self) -> dict:
        return {"node_id": self.node_id, "classification": self.classification,
                **self.mesh.to_json()}


@dataclass
class Scene:
    parts: list[ScenePart]
    ghost_parts: list[GhostPart] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"parts": [p.to_json() for p in self.parts],
                "ghosts": [g.to_json() for g in self.ghost_parts]}


@dataclass
class Hit:
    leaf_id: str
    t: float
    point: np.ndarray
    is_ghost: bool

    def to_json(self) -> dict:
        return {"leaf_id": self.leaf_id, "t": self.t,
                "point": [float(x) for x in self.point],
                "is_ghost": self.is_ghost}


# ---------------------------------------------------------------------------
# scene construction
# ---------------------------------------------------------------------------

def node_mesh(tree: CsgTree, node: CsgNode) -> Mesh:
    """Combined mesh of one subtree, in the node's parent frame."""
    if node.is_prim:
        try:
            return tessellate(node)
        except TessellationError as exc:
            span = tree.ast.node(node.ast_id).span
            raise EvalError(EvalDiagnostic(str(exc), span)) from exc
    children = [node_mesh(tree, c) for c in node.children]
    if node.kind in BOOLEAN_KINDS:
        return csg_combine(node.kind, children)
    # groups union their children; transforms union, then apply the matrix
    combined = csg_combine(UNION, children)
    if node.kind in TRANSFORM_KINDS:
        return transform_mesh(combined, node.matrix)
    if node.kind == GROUP:
        return combined
    raise EvalError(EvalDiagnostic(f"cannot mesh node kind {node.kind}",
                                   tree.ast.node(node.ast_id).span))


def compute_scene(tree: CsgTree) -> Scene:
    """One part per top-level child of the CSG root, in world coordinates."""
    parts = [ScenePart(child.id, node_mesh(tree, child))
             for child in tree.root.children]
    return Scene(parts)


def ghost_part(tree: CsgTree, node_id: str, world_matrix: np.ndarray,
               classification: str) -> GhostPart:
    """Clone a boolean operand's subtree and place it at the operation's
    world frame."""
    mesh = node_mesh(tree, tree.node(node_id))
    return GhostPart(node_id, transform_mesh(mesh, world_matrix),
                     classification)


# ---------------------------------------------------------------------------
# ray picking
# ---------------------------------------------------------------------------

_BARY_EPS = 1e-9
_T_MIN = 1e-9


def _nearest_triangle(mesh: Mesh, origin: np.ndarray,
                      direction: np.ndarray) -> tuple[float, int] | None:
    """Moller-Trumbore over all triangles; returns (t, triangle index)."""
    if mesh.is_empty:
        return None
    c = mesh.corners()
    e1 = c[:, 1] - c[:, 0]
    e2 = c[:, 2] - c[:, 0]
    pvec = np.cross(direction, e2)
    det = np.einsum("ij,ij->i", e1, pvec)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / det
        s = origin - c[:, 0]
        u = np.einsum("ij,ij->i", s, pvec) * inv
        qvec = np.cross(s, e1)
        v = (qvec @ direction) * inv
        t = np.einsum("ij,ij->i", e2, qvec) * inv
        hit = ((np.abs(det) > 1e-12) & (u >= -_BARY_EPS) & (v >= -_BARY_EPS)
               & (u + v <= 1 + _BARY_EPS) & (t > _T_MIN))
    if not hit.any():
        return None
    idx = np.flatnonzero(hit)
    best = idx[np.argmin(t[idx])]
    return float(t[best]), int(best)


def pick(scene: Scene, ray_origin, ray_dir) -> Hit | None:
    """Nearest hit across parts and ghosts; on an exact tie a solid part
    beats a ghost (ghost surfaces often coincide with the cavity walls
    they were subtracted from)."""
    origin = np.asarray(ray_origin, dtype=np.float64)
    direction = np.asarray(ray_dir, dtype=np.float64)
    best: Hit | None = None
    sources = [(p.mesh, False) for p in scene.parts] + \
              [(g.mesh, True) for g in scene.ghost_parts]
    for mesh, is_ghost in sources:
        found = _nearest_triangle(mesh, origin, direction)
        if found is None:
            continue
        t, tri = found
        if best is None or t < best.t - 1e-12 or (t < best.t + 1e-12
                                                  and best.is_ghost
                                                  and not is_ghost):
            best = Hit(str(mesh.face_source[tri]), t,
                       origin + t * direction, is_ghost)
    return best
