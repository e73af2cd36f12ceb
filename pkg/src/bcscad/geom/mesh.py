"""Triangle meshes with per-face provenance.

A Mesh is a plain container: float64 vertices in millimeters, int32
triangle indices, and for every triangle the id of the primitive CSG leaf
whose surface it came from. Booleans clip triangles but never invent
surface, so the leaf tag survives every combination.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class Mesh:
    vertices: np.ndarray      # (V, 3) float64
    triangles: np.ndarray     # (T, 3) int32
    face_source: np.ndarray   # (T,) object: leaf CsgNode id per triangle

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int32).reshape(-1, 3)
        self.face_source = np.asarray(self.face_source, dtype=object).reshape(-1)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def is_empty(self) -> bool:
        return len(self.triangles) == 0

    def corners(self) -> np.ndarray:
        """(T, 3, 3) corner positions per triangle."""
        return self.vertices[self.triangles]

    def to_json(self) -> dict:
        return {
            "vertices": self.vertices.tolist(),
            "triangles": self.triangles.tolist(),
            "face_source": list(self.face_source),
        }


def empty_mesh() -> Mesh:
    return Mesh(np.zeros((0, 3)), np.zeros((0, 3), dtype=np.int32),
                np.zeros(0, dtype=object))


def make_mesh(vertices, triangles, leaf_id: str) -> Mesh:
    """Mesh with every face tagged by one leaf id."""
    triangles = np.asarray(triangles, dtype=np.int32).reshape(-1, 3)
    source = np.full(len(triangles), leaf_id, dtype=object)
    return Mesh(vertices, triangles, source)


def transform_mesh(mesh: Mesh, matrix: np.ndarray) -> Mesh:
    """Apply a 4x4 affine transform; mirrored meshes get rewound so
    triangle orientation keeps pointing outward."""
    if mesh.is_empty:
        return mesh
    linear = matrix[:3, :3]
    verts = mesh.vertices @ linear.T + matrix[:3, 3]
    tris = mesh.triangles
    if np.linalg.det(linear) < 0:
        tris = tris[:, [0, 2, 1]]
    return Mesh(verts, tris, mesh.face_source.copy())


def concat_meshes(meshes: list[Mesh]) -> Mesh:
    meshes = [m for m in meshes if not m.is_empty]
    if not meshes:
        return empty_mesh()
    if len(meshes) == 1:
        return meshes[0]
    verts = np.concatenate([m.vertices for m in meshes])
    offsets = np.cumsum([0] + [len(m.vertices) for m in meshes[:-1]])
    tris = np.concatenate([m.triangles + off
                           for m, off in zip(meshes, offsets)])
    source = np.concatenate([m.face_source for m in meshes])
    return Mesh(verts, tris, source)


def mesh_volume(mesh: Mesh) -> float:
    """Signed volume: sum of v0 . (v1 x v2) / 6 over all triangles."""
    if mesh.is_empty:
        return 0.0
    c = mesh.corners()
    return float(np.einsum("ij,ij->i", c[:, 0],
                           np.cross(c[:, 1], c[:, 2])).sum() / 6.0)


def mesh_bounds(mesh: Mesh) -> tuple[np.ndarray, np.ndarray] | None:
    """Axis-aligned (min, max) of referenced vertices; None when empty."""
    if mesh.is_empty:
        return None
    used = mesh.vertices[np.unique(mesh.triangles)]
    return used.min(axis=0), used.max(axis=0)


def is_watertight(mesh: Mesh) -> bool:
    """Every directed edge appears exactly once, paired with its reverse.

    This is the manifold check used for primitive tessellations; boolean
    results duplicate vertices at clip seams and are checked by volume
    identities instead.
    """
    if mesh.is_empty:
        return True
    t = mesh.triangles.astype(np.int64)
    edges = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    keys = edges[:, 0] << 32 | edges[:, 1]
    if len(np.unique(keys)) != len(keys):
        return False  # repeated directed edge
    reverse = edges[:, 1] << 32 | edges[:, 0]
    return bool(np.isin(keys, reverse).all())
