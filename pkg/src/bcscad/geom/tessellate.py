"""Primitive tessellation following OpenSCAD placement conventions.

cube sits on the origin corner (or is centered), sphere is centered at
the origin, cylinder grows from z=0 (or is centered). All meshes are
watertight with outward-facing triangles; face counts are deterministic
functions of the facet number so tests can assert them exactly.
"""

from __future__ import annotations

import numpy as np

from ..csg import PRIM_CUBE, PRIM_CYLINDER, PRIM_SPHERE, CsgNode
from .mesh import Mesh, make_mesh


class TessellationError(ValueError):
    """A primitive parameter does not describe a solid."""


def _require_positive(value: float, param: str) -> None:
    if not value > 0:
        raise TessellationError(
            f"non-positive dimension: {param} must be positive, "
            f"got {value:g}")


def tessellate(prim: CsgNode, fn: int | None = None) -> Mesh:
    """Mesh for one primitive leaf, tagged with its node id.

    fn overrides the facet count stored in the node's params (spheres and
    cylinders only; cubes have no curvature to approximate).
    """
    if prim.kind == PRIM_CUBE:
        return _cube(prim)
    if prim.kind == PRIM_SPHERE:
        return _sphere(prim, fn or prim.params["fn"])
    if prim.kind == PRIM_CYLINDER:
        return _cylinder(prim, fn or prim.params["fn"])
    raise TessellationError(f"not a primitive: {prim.kind}")


def _cube(prim: CsgNode) -> Mesh:
    sx, sy, sz = prim.params["size"]
    _require_positive(sx, "cube size.x")
    _require_positive(sy, "cube size.y")
    _require_positive(sz, "cube size.z")
    lo = np.array([-sx / 2, -sy / 2, -sz / 2]) if prim.params["center"] \
        else np.zeros(3)
    hi = lo + (sx, sy, sz)
    # vertex i has bit pattern x + 2y + 4z
    verts = np.array([[hi[0] if i & 1 else lo[0],
                       hi[1] if i & 2 else lo[1],
                       hi[2] if i & 4 else lo[2]] for i in range(8)])
    quads = [(0, 2, 3, 1),   # -z
             (4, 5, 7, 6),   # +z
             (0, 1, 5, 4),   # -y
             (2, 6, 7, 3),   # +y
             (0, 4, 6, 2),   # -x
             (1, 3, 7, 5)]   # +x
    tris = [t for a, b, c, d in quads for t in ((a, b, c), (a, c, d))]
    return make_mesh(verts, tris, prim.id)


def _sphere(prim: CsgNode, fn: int) -> Mesh:
    r = prim.params["r"]
    _require_positive(r, "sphere r")
    bands = max(2, fn // 2)
    theta = np.pi * np.arange(1, bands) / bands
    phi = 2 * np.pi * np.arange(fn) / fn
    # rings of fn vertices between the welded poles
    ring = np.empty((bands - 1, fn, 3))
    ring[:, :, 0] = r * np.outer(np.sin(theta), np.cos(phi))
    ring[:, :, 1] = r * np.outer(np.sin(theta), np.sin(phi))
    ring[:, :, 2] = r * np.cos(theta)[:, None]
    verts = np.concatenate([[[0, 0, r]], ring.reshape(-1, 3), [[0, 0, -r]]])

    def rv(j: int, i: int) -> int:  # ring vertex index
        return 1 + j * fn + i % fn

    north, south = 0, len(verts) - 1
    tris: list[tuple[int, int, int]] = []
    for i in range(fn):
        tris.append((north, rv(0, i), rv(0, i + 1)))
    for j in range(bands - 2):
        for i in range(fn):
            u0, u1 = rv(j, i), rv(j, i + 1)
            l0, l1 = rv(j + 1, i), rv(j + 1, i + 1)
            tris.append((u0, l0, l1))
            tris.append((u0, l1, u1))
    for i in range(fn):
        tris.append((south, rv(bands - 2, i + 1), rv(bands - 2, i)))
    return make_mesh(verts, tris, prim.id)


def _cylinder(prim: CsgNode, fn: int) -> Mesh:
    h = prim.params["h"]
    r1, r2 = prim.params["r1"], prim.params["r2"]
    _require_positive(h, "cylinder h")
    if r1 < 0 or r2 < 0 or (r1 == 0 and r2 == 0):
        raise TessellationError(
            f"non-positive dimension: cylinder radius must be positive, "
            f"got r1={r1:g} r2={r2:g}")
    z0 = -h / 2 if prim.params["center"] else 0.0
    z1 = z0 + h
    phi = 2 * np.pi * np.arange(fn) / fn
    unit = np.stack([np.cos(phi), np.sin(phi), np.zeros(fn)], axis=1)

    verts: list[np.ndarray] = []
    tris: list[tuple[int, int, int]] = []

    def add_ring(r: float, z: float) -> int:
        base = len(verts)
        verts.extend(unit * r + (0, 0, z))
        return base

    if r1 > 0 and r2 > 0:
        b = add_ring(r1, z0)
        t = add_ring(r2, z1)
        for i in range(fn):
            j = (i + 1) % fn
            tris.append((b + i, b + j, t + j))
            tris.append((b + i, t + j, t + i))
    elif r2 == 0:  # cone: apex welded at the top
        b = add_ring(r1, z0)
        apex = len(verts)
        verts.append(np.array([0.0, 0.0, z1]))
        for i in range(fn):
            tris.append((b + i, b + (i + 1) % fn, apex))
    else:  # inverted cone: apex at the bottom
        apex = len(verts)
        verts.append(np.array([0.0, 0.0, z0]))
        t = add_ring(r2, z1)
        for i in range(fn):
            tris.append((apex, t + (i + 1) % fn, t + i))

    if r1 > 0:  # bottom cap, fan anchored at rim vertex 0
        for i in range(1, fn - 1):
            tris.append((0, i + 1, i))
    if r2 > 0:  # top cap
        t = len(verts) - fn
        for i in range(1, fn - 1):
            tris.append((t, t + i, t + i + 1))
    return make_mesh(np.asarray(verts), tris, prim.id)
