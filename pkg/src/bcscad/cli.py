"""Command line front end: compile, inspect, rewrite, serve.

Every subcommand is a one-shot headless run over a `.bcs` file except
`serve`, which speaks the session protocol over stdio or a WebSocket.
Diagnostics go to stderr as `file:line:col: severity: message` lines;
machine-readable results go to stdout as JSON.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .csg import EvalError
from .evaluator import evaluate_program
from .geom import compute_scene, export_stl
from .geom import pick as ray_pick
from .lang import parse
from .provenance import forward_search, menu_for, select_node, variable_search
from .rewriter import apply_rotation, apply_scale, apply_translation
from .session import Session, default_facets, dumps


class CliError(Exception):
    """Fatal condition already formatted for stderr."""


def _format_diag(path: str, diag) -> str:
    span = diag.span
    return (f"{path}:{span.start_line}:{span.start_col}: "
            f"{diag.severity}: {diag.message}")


def _read_source(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _load(path: str):
    """Compile one file; returns (source, ast, tree, scene)."""
    source = _read_source(path)
    ast, diags = parse(source)
    if diags:
        raise CliError("\n".join(_format_diag(path, d) for d in diags))
    try:
        tree = evaluate_program(ast, default_fn=default_facets())
        scene = compute_scene(tree)
    except EvalError as exc:
        raise CliError(_format_diag(path, exc.diagnostic)) from exc
    for warning in tree.warnings:
        print(_format_diag(path, warning), file=sys.stderr)
    return source, ast, tree, scene


def _floats(text: str, expect: int | None = None, what: str = "value"):
    try:
        values = [float(part) for part in text.split(",")]
    except ValueError:
        raise CliError(f"{what} must be comma-separated numbers, "
                       f"got {text!r}") from None
    if expect is not None and len(values) != expect:
        raise CliError(f"{what} must have {expect} components, "
                       f"got {len(values)}")
    return values


def _print_json(payload) -> None:
    print(dumps(payload))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_compile(args) -> int:
    _, _, tree, scene = _load(args.file)
    _print_json({
        "parts": len(scene.parts),
        "triangles": sum(p.mesh.n_triangles for p in scene.parts),
        "csg_nodes": len(tree.nodes),
        "warnings": len(tree.warnings),
    })
    return 0


def _cmd_export(args) -> int:
    _, _, _, scene = _load(args.file)
    out = Path(args.output) if args.output else \
        Path(args.file).with_suffix(".stl")
    out.write_bytes(export_stl(scene, args.format))
    print(f"wrote {out}", file=sys.stderr)
    return 0


def _cmd_pick(args) -> int:
    _, _, tree, scene = _load(args.file)
    ray = _floats(args.ray, 6, "--ray")
    hit = ray_pick(scene, ray[:3], ray[3:])
    if hit is None:
        _print_json({"leaf_id": None, "t": None, "entries": []})
        return 0
    menu = menu_for(tree, hit.leaf_id)
    _print_json({**hit.to_json(), **menu.to_json()})
    return 0


def _cmd_select(args) -> int:
    _, _, tree, _ = _load(args.file)
    _print_json(select_node(tree, args.node).to_json())
    return 0


def _cmd_search(args) -> int:
    _, ast, tree, _ = _load(args.file)
    try:
        start_text, end_text = args.span.split("..", 1)
        start, end = int(start_text), int(end_text)
    except ValueError:
        raise CliError(f"--span must look like START..END, "
                       f"got {args.span!r}") from None
    limit = len(ast.index.data)
    if not 0 <= start <= end <= limit:
        raise CliError(f"--span must satisfy 0 <= START <= END <= {limit}")
    search = variable_search if args.variable else forward_search
    _print_json(search(tree, ast, ast.span(start, end)).to_json())
    return 0


def _cmd_transform(args) -> int:
    _, _, tree, _ = _load(args.file)
    holder = Session(tree=tree)
    if args.translate is not None:
        result = apply_translation(holder, args.node,
                                   _floats(args.translate, 3, "--translate"))
    elif args.rotate is not None:
        axis_text, _, angle_text = args.rotate.partition(",")
        axis = axis_text.strip()
        angle = _floats(angle_text or "x", 1, "--rotate angle")[0]
        result = apply_rotation(holder, args.node, axis, angle)
    else:
        factors = _floats(args.scale, None, "--scale")
        if len(factors) == 1:
            factors = factors * 3
        if len(factors) != 3:
            raise CliError("--scale takes 1 or 3 comma-separated factors")
        mode = "scale_primitive" if args.primitive else "scale_node"
        result = apply_scale(holder, args.node, factors, mode)
    sys.stdout.write(result.new_source)
    if not result.new_source.endswith("\n"):
        sys.stdout.write("\n")
    return 0


def _cmd_serve(args) -> int:
    from . import server

    if args.stdio:
        return server.serve_stdio()
    print(f"serving WebSocket protocol on ws://{args.host}:{args.port}"
          f"/session", file=sys.stderr)
    return server.serve_websocket(args.host, args.port)


def _cmd_report(args) -> int:
    from . import report

    _, _, tree, scene = _load(args.file)
    source_path = Path(args.file)
    out_dir = Path(args.output) if args.output else \
        source_path.parent / (source_path.stem + "_report")
    _print_json(report.write_report(tree, scene, out_dir))
    return 0


# ---------------------------------------------------------------------------
# argument wiring
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bcscad",
        description="CSG scripting workbench: compile BCS source to "
                    "meshes, trace geometry back to code, splice edits.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="parse, evaluate, and mesh a file")
    p.add_argument("file")
    p.set_defaults(func=_cmd_compile)

    p = sub.add_parser("export", help="write the scene as STL")
    p.add_argument("file")
    p.add_argument("-o", "--output", help="output path (default: <file>.stl)")
    p.add_argument("--format", choices=["binary", "ascii"], default="binary")
    p.set_defaults(func=_cmd_export)

    p = sub.add_parser("pick", help="cast a ray, print the hit and its menu")
    p.add_argument("file")
    p.add_argument("--ray", required=True, metavar="OX,OY,OZ,DX,DY,DZ")
    p.set_defaults(func=_cmd_pick)

    p = sub.add_parser("select", help="print highlight state for a node id")
    p.add_argument("file")
    p.add_argument("--node", required=True, metavar="ID")
    p.set_defaults(func=_cmd_select)

    p = sub.add_parser("search",
                       help="map a source span to geometry highlights")
    p.add_argument("file")
    p.add_argument("--span", required=True, metavar="START..END",
                   help="byte offsets into the file")
    p.add_argument("--variable", action="store_true",
                   help="trace the selection as a variable data flow")
    p.set_defaults(func=_cmd_search)

    p = sub.add_parser("transform",
                       help="apply a transform edit, print rewritten source")
    p.add_argument("file")
    p.add_argument("--node", required=True, metavar="ID")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--translate", metavar="X,Y,Z")
    group.add_argument("--rotate", metavar="AXIS,DEG")
    group.add_argument("--scale", metavar="S | SX,SY,SZ")
    p.add_argument("--primitive", action="store_true",
                   help="with --scale: bake factors into the primitive")
    p.set_defaults(func=_cmd_transform)

    p = sub.add_parser("serve", help="run the session protocol")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--stdio", action="store_true",
                   help="newline-delimited JSON on stdin/stdout instead")
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("report",
                       help="write parts.csv and a scene figure")
    p.add_argument("file")
    p.add_argument("-o", "--output",
                   help="output directory (default: <file>_report/)")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except (ValueError,) as exc:
        # rewriter/provenance rejections carry user-actionable messages
        print(str(exc), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
