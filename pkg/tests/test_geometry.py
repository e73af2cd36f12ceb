"""Geometry tests built on independent volume oracles.

The tessellated primitives are stacks of polygonal frustums, so their
exact volumes have closed forms derived here from first principles
(regular n-gon area, prismatoid integration). mesh_volume of the
generated meshes must match those oracles to float precision, and the
boolean results must satisfy exact set-algebra identities on top.
"""

from __future__ import annotations

import math
import struct

import numpy as np
import pytest

from bcscad import EvalError
from bcscad.csg import (
    DIFFERENCE, INTERSECTION, PRIM_CUBE, PRIM_CYLINDER, PRIM_SPHERE, UNION,
    CsgNode,
)
from bcscad.geom import (
    compute_scene, csg_combine, empty_mesh, export_stl, ghost_part,
    is_watertight, mesh_bounds, mesh_volume, pick, tessellate,
    transform_mesh, TessellationError, Scene,
)
from bcscad.geom.scene import node_mesh

from util import compile_tree


# ---------------------------------------------------------------------------
# closed-form volume oracles for the tessellated solids
# ---------------------------------------------------------------------------

def ngon_area(n: int, r: float) -> float:
    """Area of a regular n-gon inscribed in a circle of radius r."""
    return 0.5 * n * r * r * math.sin(2 * math.pi / n)


def frustum_volume(n: int, r_bottom: float, r_top: float, h: float) -> float:
    """Polygonal frustum between two parallel, aligned n-gons.

    Cross-section radius varies linearly, area quadratically; integrating
    gives h/3 * (A1 + A2 + sqrt(A1*A2)) which for aligned n-gons is
    h * c/3 * (r1^2 + r1*r2 + r2^2) with c the n-gon area coefficient.
    """
    c = 0.5 * n * math.sin(2 * math.pi / n)
    return h * c / 3.0 * (r_bottom ** 2 + r_bottom * r_top + r_top ** 2)


def uv_sphere_volume(r: float, fn: int) -> float:
    """Exact volume of the UV-sphere tessellation: a stack of polygonal
    frustums between latitude rings, with pyramidal caps at the poles."""
    bands = max(2, fn // 2)
    total = 0.0
    for j in range(bands):
        t0, t1 = math.pi * j / bands, math.pi * (j + 1) / bands
        r0, r1 = r * math.sin(t0), r * math.sin(t1)
        h = r * (math.cos(t0) - math.cos(t1))
        total += frustum_volume(fn, r0, r1, h)
    return total


def prim(kind: str, node_id: str = "0", **params) -> CsgNode:
    return CsgNode(node_id, kind, params, np.eye(4), 0, (0,), frozenset(), [])


def cube_node(size, center=False, **kw) -> CsgNode:
    size = (size, size, size) if isinstance(size, (int, float)) else size
    return prim(PRIM_CUBE, size=tuple(size), center=center, **kw)


def sphere_node(r, fn, **kw) -> CsgNode:
    return prim(PRIM_SPHERE, r=r, fn=fn, **kw)


def cylinder_node(h, r1, r2, fn, center=False, **kw) -> CsgNode:
    return prim(PRIM_CYLINDER, h=h, r1=r1, r2=r2, fn=fn, center=center, **kw)


# ---------------------------------------------------------------------------
# tessellation
# ---------------------------------------------------------------------------

class TestTessellate:
    def test_cube_counts_and_bounds(self):
        mesh = tessellate(cube_node(2))
        assert len(mesh.vertices) == 8 and len(mesh.triangles) == 12
        lo, hi = mesh_bounds(mesh)
        np.testing.assert_array_equal(lo, [0, 0, 0])
        np.testing.assert_array_equal(hi, [2, 2, 2])
        assert mesh_volume(mesh) == pytest.approx(8, abs=1e-9)

    def test_centered_cube(self):
        lo, hi = mesh_bounds(tessellate(cube_node((2, 4, 6), center=True)))
        np.testing.assert_array_equal(lo, [-1, -2, -3])
        np.testing.assert_array_equal(hi, [1, 2, 3])

    def test_sphere_counts(self):
        mesh = tessellate(sphere_node(1, fn=8))
        assert len(mesh.vertices) == 8 * 3 + 2  # three rings plus two poles
        assert len(mesh.triangles) == 2 * 8 * 3

    def test_sphere_volume_matches_oracle(self):
        for fn in (3, 5, 8, 16, 64):
            for r in (0.5, 1.0, 4.0):
                mesh = tessellate(sphere_node(r, fn=fn))
                assert mesh_volume(mesh) == pytest.approx(
                    uv_sphere_volume(r, fn), rel=1e-12), (r, fn)

    def test_sphere_volume_brackets_analytic(self):
        v = mesh_volume(tessellate(sphere_node(1, fn=64)))
        assert 4.10 < v < 4 / 3 * math.pi

    def test_cone_counts(self):
        mesh = tessellate(cylinder_node(10, 2, 0, fn=3))
        assert len(mesh.triangles) == 4  # 3 sides, 1 base fan triangle
        assert len(mesh.vertices) == 4

    def test_cylinder_volumes_match_oracle(self):
        cases = [(10, 2, 2, 8), (10, 2, 0, 3), (5, 0, 3, 7), (2, 1.5, 0.5, 16)]
        for h, r1, r2, fn in cases:
            mesh = tessellate(cylinder_node(h, r1, r2, fn=fn))
            assert mesh_volume(mesh) == pytest.approx(
                frustum_volume(fn, r1, r2, h), rel=1e-12), (h, r1, r2, fn)

    def test_cylinder_placement(self):
        lo, hi = mesh_bounds(tessellate(cylinder_node(10, 2, 2, fn=4)))
        assert lo[2] == 0 and hi[2] == 10
        lo, hi = mesh_bounds(tessellate(cylinder_node(10, 2, 2, fn=4,
                                                      center=True)))
        assert lo[2] == -5 and hi[2] == 5

    def test_everything_is_watertight(self):
        nodes = [cube_node(1), cube_node((1, 2, 3), center=True),
                 sphere_node(1, fn=3), sphere_node(2, fn=7),
                 sphere_node(1, fn=16),
                 cylinder_node(1, 1, 1, fn=3), cylinder_node(4, 2, 0, fn=9),
                 cylinder_node(4, 0, 2, fn=5), cylinder_node(2, 1, 3, fn=12)]
        for node in nodes:
            mesh = tessellate(node)
            assert is_watertight(mesh), node.params
            assert mesh_volume(mesh) > 0, node.params
            assert set(mesh.face_source) == {"0"}

    def test_bad_dimensions_name_the_parameter(self):
        with pytest.raises(TessellationError, match="sphere r"):
            tessellate(sphere_node(0, fn=8))
        with pytest.raises(TessellationError, match="size.y"):
            tessellate(cube_node((1, -1, 1)))
        with pytest.raises(TessellationError, match="cylinder h"):
            tessellate(cylinder_node(0, 1, 1, fn=8))
        with pytest.raises(TessellationError, match="radius"):
            tessellate(cylinder_node(1, 0, 0, fn=8))

    def test_mirroring_keeps_outward_orientation(self):
        mesh = tessellate(cube_node(2, center=True))
        mirrored = transform_mesh(mesh, np.diag([-1.0, 1, 1, 1]))
        assert mesh_volume(mirrored) == pytest.approx(8, abs=1e-9)
        assert is_watertight(mirrored)


# ---------------------------------------------------------------------------
# booleans
# ---------------------------------------------------------------------------

class TestBooleans:
    def test_union_of_disjoint_is_concatenation(self):
        a = tessellate(cube_node(2))
        b = transform_mesh(tessellate(cube_node(2, node_id="1")),
                           np.array([[1, 0, 0, 10], [0, 1, 0, 0],
                                     [0, 0, 1, 0], [0, 0, 0, 1.0]]))
        result = csg_combine(UNION, [a, b])
        assert result.n_triangles == a.n_triangles + b.n_triangles
        assert mesh_volume(result) == pytest.approx(16, abs=1e-9)

    def test_self_intersection_is_idempotent(self):
        a = tessellate(cube_node(2, center=True))
        result = csg_combine(INTERSECTION, [a, a])
        assert mesh_volume(result) == pytest.approx(8, rel=1e-6)

    def test_self_union_is_idempotent(self):
        a = tessellate(cube_node(2, center=True))
        result = csg_combine(UNION, [a, a])
        assert mesh_volume(result) == pytest.approx(8, rel=1e-6)

    def test_difference_cube_minus_inner_sphere(self):
        cube = tessellate(cube_node(10, center=True))
        sphere = tessellate(sphere_node(4, fn=64, node_id="1"))
        result = csg_combine(DIFFERENCE, [cube, sphere])
        expected_exact = 1000 - uv_sphere_volume(4, 64)
        assert mesh_volume(result) == pytest.approx(expected_exact, rel=1e-9)
        analytic = 1000 - 4 / 3 * math.pi * 64
        assert abs(mesh_volume(result) - analytic) / analytic < 0.02

    def test_overlapping_union_volume(self):
        a = tessellate(cube_node(2))
        b = transform_mesh(tessellate(cube_node(2, node_id="1")),
                           np.array([[1, 0, 0, 1], [0, 1, 0, 1],
                                     [0, 0, 1, 1], [0, 0, 0, 1.0]]))
        # two unit-overlapping 2-cubes: 8 + 8 - 1
        assert mesh_volume(csg_combine(UNION, [a, b])) == \
            pytest.approx(15, rel=1e-9)
        assert mesh_volume(csg_combine(INTERSECTION, [a, b])) == \
            pytest.approx(1, rel=1e-9)
        assert mesh_volume(csg_combine(DIFFERENCE, [a, b])) == \
            pytest.approx(7, rel=1e-9)

    def test_empty_results_are_valid(self):
        a = tessellate(cube_node(1))
        far = transform_mesh(tessellate(cube_node(1, node_id="1")),
                             np.array([[1, 0, 0, 50], [0, 1, 0, 0],
                                       [0, 0, 1, 0], [0, 0, 0, 1.0]]))
        result = csg_combine(INTERSECTION, [a, far])
        assert result.is_empty and mesh_volume(result) == 0.0

    def test_provenance_tags_survive_clipping(self):
        a = tessellate(cube_node(4, center=True))
        b = tessellate(sphere_node(3, fn=12, node_id="1"))
        for op in (UNION, DIFFERENCE, INTERSECTION):
            result = csg_combine(op, [a, b])
            assert set(result.face_source) <= {"0", "1"}
            assert not result.is_empty

    def test_difference_is_first_minus_rest(self):
        a = tessellate(cube_node(4))
        b = transform_mesh(tessellate(cube_node((1, 4, 4), node_id="1")),
                           np.eye(4))
        c = transform_mesh(tessellate(cube_node((1, 4, 4), node_id="2")),
                           np.array([[1, 0, 0, 3], [0, 1, 0, 0],
                                     [0, 0, 1, 0], [0, 0, 0, 1.0]]))
        result = csg_combine(DIFFERENCE, [a, b, c])
        assert mesh_volume(result) == pytest.approx(32, rel=1e-9)


@pytest.mark.parametrize("seed", range(25))
def test_volume_partition_identity(seed):
    """vol(A) = vol(A at B) + vol(A minus B) and inclusion-exclusion,
    for randomized overlapping cube/sphere pairs.

    Continuous draws keep the pair in generic position; exact coplanar
    contact is a documented degeneracy outside the property's scope.
    """
    rng = np.random.default_rng(seed)
    side = rng.uniform(2.0, 6.0)
    r = rng.uniform(1.0, 4.0)
    offset = rng.uniform(-2.0, 2.0, size=3)
    fn = int(rng.choice([6, 9, 12]))
    cube = tessellate(cube_node(side, center=True))
    t = np.eye(4)
    t[:3, 3] = offset
    sphere = transform_mesh(tessellate(sphere_node(r, fn=fn, node_id="1")), t)

    va = mesh_volume(cube)
    vb = mesh_volume(sphere)
    v_int = mesh_volume(csg_combine(INTERSECTION, [cube, sphere]))
    v_diff = mesh_volume(csg_combine(DIFFERENCE, [cube, sphere]))
    v_uni = mesh_volume(csg_combine(UNION, [cube, sphere]))
    scale = max(va, vb)
    assert abs(va - (v_int + v_diff)) < 1e-6 * scale
    assert abs(v_uni - (va + vb - v_int)) < 1e-6 * scale


# ---------------------------------------------------------------------------
# scenes and picking
# ---------------------------------------------------------------------------

class TestScene:
    def test_single_part_face_source(self):
        scene = compute_scene(compile_tree("sphere(1);"))
        assert len(scene.parts) == 1
        part = scene.parts[0]
        assert part.node_id == "0"
        assert set(part.mesh.face_source) == {"0"}

    def test_one_part_per_top_level_statement(self):
        scene = compute_scene(compile_tree(
            "module m(){ sphere(1); } m(); m(); m();"))
        assert [p.node_id for p in scene.parts] == ["0", "1", "2"]

    def test_difference_tags_cavity_with_sphere(self):
        scene = compute_scene(compile_tree("difference(){cube(10);sphere(4);}"))
        mesh = scene.parts[0].mesh
        corners = mesh.corners()
        centroids = corners.mean(axis=1)
        normals = np.cross(corners[:, 1] - corners[:, 0],
                           corners[:, 2] - corners[:, 0])
        cube_id = str(compile_tree("difference(){cube(10);sphere(4);}")
                      .node("0.0").id)
        sphere_id = "0.1"
        assert set(mesh.face_source) == {cube_id, sphere_id}
        for i in range(mesh.n_triangles):
            if mesh.face_source[i] == sphere_id:
                # cavity faces sit on the sphere and point back at its center
                assert np.linalg.norm(centroids[i]) < 4.0 + 1e-6
                assert np.dot(normals[i], centroids[i]) < 0
            else:
                on_cube_surface = np.isclose(centroids[i], 0).any() \
                    or np.isclose(centroids[i], 10).any()
                assert on_cube_surface

    def test_transform_equivariance_is_exact(self):
        base = compute_scene(compile_tree("sphere(2); cube(3);"))
        moved = compute_scene(compile_tree(
            "translate([5,-2,1]) sphere(2); translate([5,-2,1]) cube(3);"))
        for b, m in zip(base.parts, moved.parts):
            np.testing.assert_array_equal(b.mesh.vertices + [5, -2, 1],
                                          m.mesh.vertices)
            np.testing.assert_array_equal(b.mesh.triangles, m.mesh.triangles)

    def test_group_unions_children(self):
        scene = compute_scene(compile_tree(
            "module pair(){ cube(2); translate([1,1,1]) cube(2); } pair();"))
        assert len(scene.parts) == 1
        assert mesh_volume(scene.parts[0].mesh) == pytest.approx(15, rel=1e-9)

    def test_tessellation_error_carries_source_span(self):
        src = "r = 0; sphere(r);"
        tree = compile_tree(src)
        with pytest.raises(EvalError) as err:
            compute_scene(tree)
        span = err.value.diagnostic.span
        assert src[span.start:span.end] == "sphere(r);"

    def test_pick_top_of_cube(self):
        scene = compute_scene(compile_tree("cube(2);"))
        hit = pick(scene, (1, 1, 10), (0, 0, -1))
        assert hit is not None and not hit.is_ghost
        assert hit.leaf_id == "0"
        assert hit.t == pytest.approx(8.0, abs=1e-9)
        np.testing.assert_allclose(hit.point, [1, 1, 2], atol=1e-9)

    def test_pick_miss(self):
        scene = compute_scene(compile_tree("cube(2);"))
        assert pick(scene, (10, 10, 10), (0, 0, 1)) is None

    def test_pick_nearest_across_parts(self):
        scene = compute_scene(compile_tree(
            "cube(2); translate([0,0,5]) cube(2);"))
        hit = pick(scene, (1, 1, 20), (0, 0, -1))
        assert hit.leaf_id == "1.0"  # the raised cube is closer to the ray

    def test_pick_consistency_every_face(self):
        scene = compute_scene(compile_tree(
            "difference(){cube(10);sphere(4, $fn=12);}"))
        mesh = scene.parts[0].mesh
        corners = mesh.corners()
        centroids = corners.mean(axis=1)
        normals = np.cross(corners[:, 1] - corners[:, 0],
                           corners[:, 2] - corners[:, 0])
        normals /= np.linalg.norm(normals, axis=1)[:, None]
        rng = np.random.default_rng(7)
        idx = rng.choice(mesh.n_triangles, size=60, replace=False)
        for i in idx:
            origin = centroids[i] + normals[i] * 1e-3
            hit = pick(scene, origin, -normals[i])
            assert hit is not None
            assert hit.leaf_id == mesh.face_source[i]

    def test_ghost_pick_outside_solid(self):
        # seven eighths of the sphere pokes out of the corner-anchored cube
        tree = compile_tree("difference(){cube(10);sphere(4);}")
        scene = compute_scene(tree)
        scene.ghost_parts.append(
            ghost_part(tree, "0.1", np.eye(4), "target"))
        hit = pick(scene, (-10, 0.3, 0.2), (1, 0, 0))
        assert hit is not None and hit.is_ghost
        assert hit.leaf_id == "0.1"
        assert hit.t == pytest.approx(10 - math.sqrt(
            16 - 0.3 ** 2 - 0.2 ** 2), rel=1e-2)

    def test_solid_beats_ghost_on_coincident_surfaces(self):
        tree = compile_tree("difference(){cube(10,center=true);sphere(4);}")
        scene = compute_scene(tree)
        scene.ghost_parts.append(ghost_part(tree, "0.1", np.eye(4), "target"))
        hit = pick(scene, (20, 0, 0), (-1, 0, 0))
        assert not hit.is_ghost  # cube wall comes first


# ---------------------------------------------------------------------------
# STL export
# ---------------------------------------------------------------------------

def parse_binary_stl(blob: bytes):
    count = struct.unpack_from("<I", blob, 80)[0]
    records = np.frombuffer(
        blob[84:],
        dtype=np.dtype([("n", "<f4", (3,)), ("v", "<f4", (3, 3)),
                        ("a", "<u2")]))
    assert len(records) == count
    return records


class TestStl:
    def test_binary_cube(self):
        scene = compute_scene(compile_tree("cube(2);"))
        blob = export_stl(scene, "binary")
        records = parse_binary_stl(blob)
        assert len(records) == 12
        assert len(blob) == 84 + 12 * 50
        v = records["v"].astype(np.float64)
        vol = np.einsum("ij,ij->i", v[:, 0], np.cross(v[:, 1], v[:, 2]))
        assert vol.sum() / 6 == pytest.approx(8, rel=1e-6)

    def test_disjoint_union_count(self):
        scene = compute_scene(compile_tree(
            "cube(2); translate([10,0,0]) cube(2);"))
        assert parse_binary_stl(export_stl(scene, "binary")).shape == (24,)

    def test_empty_scene_is_valid(self):
        scene = compute_scene(compile_tree(
            "intersection(){ cube(1); translate([5,0,0]) cube(1); }"))
        blob = export_stl(scene, "binary")
        assert parse_binary_stl(blob).shape == (0,)

    def test_ascii_round_trip(self):
        scene = compute_scene(compile_tree("cube(1);"))
        text = export_stl(scene, "ascii").decode("ascii")
        assert text.startswith("solid") and text.rstrip().endswith("endsolid bcscad")
        assert text.count("facet normal") == 12
        assert text.count("vertex") == 36

    def test_ghosts_never_export(self):
        tree = compile_tree("difference(){cube(10);sphere(4);}")
        scene = compute_scene(tree)
        with_ghost = Scene(scene.parts,
                           [ghost_part(tree, "0.1", np.eye(4), "target")])
        assert export_stl(with_ghost, "binary") == export_stl(scene, "binary")
