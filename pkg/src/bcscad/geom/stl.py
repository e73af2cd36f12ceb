"""STL export, binary and ASCII.

Binary layout per the de facto standard: 80-byte header, little-endian
uint32 triangle count, then 50-byte records of float32 normal, three
float32 vertices, and a zero uint16 attribute.
"""

from __future__ import annotations

import struct

import numpy as np

from .mesh import concat_meshes
from .scene import Scene

_HEADER = b"bcscad".ljust(80, b"\0")

_RECORD = np.dtype([("normal", "<f4", (3,)),
                    ("vertices", "<f4", (3, 3)),
                    ("attr", "<u2")])


def _triangle_normals(corners: np.ndarray) -> np.ndarray:
    n = np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
    length = np.linalg.norm(n, axis=1)
    safe = np.where(length > 1e-12, length, 1.0)
    return n / safe[:, None]


def export_stl(scene: Scene, format: str = "binary") -> bytes:
    """Solid parts only; ghosts are viewport furniture, never exported."""
    mesh = concat_meshes([p.mesh for p in scene.parts])
    corners = mesh.corners()
    normals = _triangle_normals(corners) if len(corners) else \
        np.zeros((0, 3))
    if format == "binary":
        records = np.zeros(len(corners), dtype=_RECORD)
        records["normal"] = normals
        records["vertices"] = corners
        return _HEADER + struct.pack("<I", len(corners)) + records.tobytes()
    if format == "ascii":
        out = ["solid bcscad"]
        for n, tri in zip(normals, corners):
            out.append(f"  facet normal {n[0]:e} {n[1]:e} {n[2]:e}")
            out.append("    outer loop")
            for v in tri:
                out.append(f"      vertex {v[0]:e} {v[1]:e} {v[2]:e}")
            out.append("    endloop")
            out.append("  endfacet")
        out.append("endsolid bcscad")
        return ("\n".join(out) + "\n").encode("ascii")
    raise ValueError(f"unknown STL format: {format}")
