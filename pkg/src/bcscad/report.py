"""Compilation reports: a per-part CSV and a rendered scene figure.

Given a compiled scene, writes `parts.csv` (one row per top-level part
with mesh statistics) and `scene.png` (a shaded 3D rendering) into an
output directory. Used by the `report` CLI subcommand for headless
inspection of fixture corpora.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402
from mpl_toolkits.mplot3d.art3d import Poly3DCollection  # noqa: E402

from .csg import CsgTree  # noqa: E402
from .geom import Scene, is_watertight, mesh_bounds, mesh_volume  # noqa: E402

CSV_COLUMNS = [
    "node_id", "label", "triangles", "volume", "watertight",
    "min_x", "min_y", "min_z", "max_x", "max_y", "max_z",
]

_PART_COLORS = ["#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3",
                "#937860", "#da8bc3", "#8c8c8c", "#ccb974", "#64b5cd"]


def _part_label(tree: CsgTree, node_id: str) -> str:
    node = tree.node(node_id)
    ast_node = tree.ast.node(node.ast_id)
    return ast_node.name or node.kind.lower()


def write_parts_csv(tree: CsgTree, scene: Scene, path: Path) -> int:
    """One row per part; returns the number of rows written."""
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_COLUMNS)
        for part in scene.parts:
            bounds = mesh_bounds(part.mesh)
            lo, hi = bounds if bounds is not None else (np.full(3, np.nan),
                                                        np.full(3, np.nan))
            writer.writerow([
                part.node_id,
                _part_label(tree, part.node_id),
                part.mesh.n_triangles,
                f"{mesh_volume(part.mesh):.9g}",
                is_watertight(part.mesh),
                *(f"{v:.9g}" for v in lo), *(f"{v:.9g}" for v in hi),
            ])
    return len(scene.parts)


def render_scene_figure(scene: Scene, path: Path, title: str = "") -> None:
    """Shade every part in its own color; ghosts drawn translucent."""
    fig = plt.figure(figsize=(8, 6))
    ax = fig.add_subplot(projection="3d")

    drawn = []
    for index, part in enumerate(scene.parts):
        if part.mesh.is_empty:
            continue
        color = _PART_COLORS[index % len(_PART_COLORS)]
        ax.add_collection3d(Poly3DCollection(
            part.mesh.corners(), facecolor=color, edgecolor="black",
            linewidths=0.15, alpha=0.95))
        drawn.append(part.mesh)
    for ghost in scene.ghost_parts:
        if ghost.mesh.is_empty:
            continue
        color = "#55a868" if ghost.classification == "target" else "#da8bc3"
        ax.add_collection3d(Poly3DCollection(
            ghost.mesh.corners(), facecolor=color, alpha=0.35,
            edgecolor="none"))
        drawn.append(ghost.mesh)

    if drawn:
        los, his = zip(*(mesh_bounds(m) for m in drawn))
        lo = np.min(np.array(los), axis=0)
        hi = np.max(np.array(his), axis=0)
        center = (lo + hi) / 2
        half = float(np.max(hi - lo)) / 2 or 1.0
        ax.set_xlim(center[0] - half, center[0] + half)
        ax.set_ylim(center[1] - half, center[1] + half)
        ax.set_zlim(center[2] - half, center[2] + half)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_zlabel("z")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def write_report(tree: CsgTree, scene: Scene, out_dir: Path,
                 title: str = "") -> dict:
    """Write parts.csv and scene.png into out_dir; returns their paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "parts.csv"
    figure_path = out_dir / "scene.png"
    rows = write_parts_csv(tree, scene, csv_path)
    triangles = sum(p.mesh.n_triangles for p in scene.parts)
    render_scene_figure(scene, figure_path,
                        title or f"{rows} parts, {triangles} triangles")
    return {"csv": str(csv_path), "figure": str(figure_path),
            "parts": rows, "triangles": triangles}
