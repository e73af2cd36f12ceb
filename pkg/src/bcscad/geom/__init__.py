"""Geometry: tessellation, mesh booleans, scenes, picking, STL."""

from .bsp import EPSILON, csg_combine
from .mesh import (
    Mesh, concat_meshes, empty_mesh, is_watertight, make_mesh, mesh_bounds,
    mesh_volume, transform_mesh,
)
from .scene import (
    GhostPart, Hit, Scene, ScenePart, compute_scene, ghost_part, node_mesh,
    pick,
)
from .stl import export_stl
from .tessellate import TessellationError, tessellate

__all__ = [
    "EPSILON", "csg_combine",
    "Mesh", "concat_meshes", "empty_mesh", "is_watertight", "make_mesh",
    "mesh_bounds", "mesh_volume", "transform_mesh",
    "GhostPart", "Hit", "Scene", "ScenePart", "compute_scene", "ghost_part",
    "node_mesh", "pick",
    "export_stl",
    "TessellationError", "tessellate",
]
