"""Session service: the edit-compile-inspect loop behind one JSON protocol.

A Session owns one source text and the artifacts compiled from it (AST,
CSG tree, scene) at a monotonically increasing revision. handle_request
dispatches protocol messages against a session and never raises: every
failure, from malformed JSON to an unrealizable edit, comes back as a
structured error response. The same handler serves the stdio and
WebSocket transports and the CLI.

Node ids and source spans are revision-scoped. Requests may carry the
revision they were issued for; a mismatch is answered with a
`stale_revision` error so clients re-pick instead of editing blind.
"""

from __future__ import annotations

import base64
import json
import math
import os
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .csg import CsgTree, EvalDiagnostic, EvalError, EvalLimits
from .evaluator import DEFAULT_FN, MIN_FN, evaluate_program
from .geom import Scene, compute_scene, export_stl, ghost_part, pick
from .lang import Ast, ParseDiagnostic, SelectionError, parse
from .provenance import (
    HighlightState,
    ProvenanceError,
    forward_search,
    menu_for,
    select_node,
    variable_search,
)
from .rewriter import (
    RewriteError,
    apply_rotation,
    apply_scale,
    apply_translation,
    gizmo_frame,
)

FN_ENV_VAR = "BCSCAD_FN"

# protocol error codes
BAD_REQUEST = "bad_request"
STALE_REVISION = "stale_revision"
EDIT_REJECTED = "edit_rejected"
INTERNAL_ERROR = "internal_error"

TRANSFORM_KINDS = ("translate", "rotate", "scale")
SCALE_MODES = ("scale_node", "scale_primitive")


def default_facets() -> int:
    """Facet count for curved primitives when the source does not set $fn.

    Overridable through the environment so batch exports can trade
    smoothness for speed without touching source files.
    """
    raw = os.environ.get(FN_ENV_VAR)
    if raw is None:
        return DEFAULT_FN
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(
            f"{FN_ENV_VAR} must be an integer, got {raw!r}") from None
    return max(MIN_FN, value)


class _ProtocolError(Exception):
    """Typed failure raised by handlers; converted to an error response."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


def _bad(message: str) -> _ProtocolError:
    return _ProtocolError(BAD_REQUEST, message)


# ---------------------------------------------------------------------------
# session state
# ---------------------------------------------------------------------------

@dataclass
class _DragState:
    """Snapshot captured at beginDrag; every tick rewrites against it."""

    node_id: str
    kind: str
    mode: str
    tree: CsgTree


@dataclass
class Session:
    source: str = ""
    revision: int = 0
    ast: Ast | None = None
    tree: CsgTree | None = None
    scene: Scene | None = None
    active_selection: str | None = None
    drag_snapshot: tuple[str, int] | None = None
    limits: EvalLimits = field(default_factory=EvalLimits)
    default_fn: int | None = None
    _drag: _DragState | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.default_fn is None:
            self.default_fn = default_facets()


def recompile(session: Session) -> list:
    """Full parse -> evaluate -> scene pipeline over session.source.

    On success the artifacts are swapped in, the revision increments,
    and any selection is dropped (node ids are revision-scoped). On any
    failure the previous artifacts and revision are kept untouched. The
    returned diagnostics are errors on failure, warnings on success.
    """
    ast, parse_diags = parse(session.source)
    if parse_diags:
        return list(parse_diags)
    try:
        tree = evaluate_program(ast, session.limits, session.default_fn)
        scene = compute_scene(tree)
    except EvalError as exc:
        return [exc.diagnostic]
    session.ast = ast
    session.tree = tree
    session.scene = scene
    session.revision += 1
    session.active_selection = None
    return list(tree.warnings)


def _has_errors(diagnostics: list) -> bool:
    return any(d.severity == "error" for d in diagnostics)


# ---------------------------------------------------------------------------
# request plumbing
# ---------------------------------------------------------------------------

def dumps(payload: Any) -> str:
    """JSON-encode a response, accepting numpy scalars and arrays."""
    return json.dumps(payload, default=_coerce_json)


def _coerce_json(value: Any):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"not JSON serializable: {type(value).__name__}")


def _error(session: Session, code: str, message: str,
           req_id: Any = None) -> dict:
    response: dict = {"error": {"code": code, "message": message},
                      "revision": session.revision}
    if req_id is not None:
        response["id"] = req_id
    return response


def _str_arg(request: dict, name: str) -> str:
    value = request.get(name)
    if not isinstance(value, str):
        raise _bad(f"field {name!r} must be a string")
    return value


def _number_arg(container: dict, name: str) -> float:
    value = container.get(name)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _bad(f"field {name!r} must be a number")
    if not math.isfinite(value):
        raise _bad(f"field {name!r} must be finite")
    return float(value)


def _vec3_arg(container: dict, name: str) -> tuple[float, float, float]:
    value = container.get(name)
    if (not isinstance(value, (list, tuple)) or len(value) != 3
            or any(isinstance(c, bool) or not isinstance(c, (int, float))
                   or not math.isfinite(c) for c in value)):
        raise _bad(f"field {name!r} must be a list of 3 finite numbers")
    return tuple(float(c) for c in value)


def _span_arg(request: dict, name: str = "span") -> tuple[int, int]:
    value = request.get(name)
    if (not isinstance(value, (list, tuple)) or len(value) != 2
            or any(isinstance(c, bool) or not isinstance(c, int)
                   for c in value)):
        raise _bad(f"field {name!r} must be a list of 2 byte offsets")
    start, end = value
    if start < 0 or end < start:
        raise _bad(f"field {name!r} must satisfy 0 <= start <= end")
    return int(start), int(end)


def _require_compiled(session: Session) -> CsgTree:
    if session.tree is None or session.scene is None or session.ast is None:
        raise _bad("session has no compiled model; send open or setSource")
    return session.tree


def _diag_json(diagnostics: list) -> list[dict]:
    return [d.to_json() for d in diagnostics]


def _scene_json(session: Session) -> dict | None:
    return session.scene.to_json() if session.scene is not None else None


def _apply_highlight(session: Session, state: HighlightState) -> None:
    """Sync scene ghosts and active selection with a highlight result."""
    tree = session.tree
    assert tree is not None and session.scene is not None
    session.scene.ghost_parts = [
        ghost_part(tree, g.source_subtree, g.world_matrix, g.classification)
        for g in state.ghosts
    ]
    session.active_selection = (state.target_node_ids[-1]
                                if state.target_node_ids else None)


# ---------------------------------------------------------------------------
# handlers, one per protocol method
# ---------------------------------------------------------------------------

def _set_source(session: Session, text: str) -> dict:
    previous_source = session.source
    session.source = text
    session.drag_snapshot = None
    session._drag = None
    diagnostics = recompile(session)
    if _has_errors(diagnostics):
        # transactional: artifacts stayed at the last good revision, so
        # the source must too or ids would dangle against stale text
        session.source = previous_source
    return {"revision": session.revision,
            "diagnostics": _diag_json(diagnostics),
            "scene": _scene_json(session)}


def _handle_open(session: Session, request: dict) -> dict:
    return _set_source(session, _str_arg(request, "source"))


def _handle_set_source(session: Session, request: dict) -> dict:
    return _set_source(session, _str_arg(request, "text"))


def _handle_get_scene(session: Session, request: dict) -> dict:
    return {"revision": session.revision, "scene": _scene_json(session)}


def _handle_get_source(session: Session, request: dict) -> dict:
    return {"revision": session.revision, "source": session.source}


def _handle_pick(session: Session, request: dict) -> dict:
    _require_compiled(session)
    origin = _vec3_arg(request, "origin")
    direction = _vec3_arg(request, "dir")
    if not any(direction):
        raise _bad("field 'dir' must be a nonzero vector")
    hit = pick(session.scene, origin, direction)
    if hit is None:
        return {"revision": session.revision, "leaf_id": None, "t": None}
    return {"revision": session.revision, **hit.to_json()}


def _handle_menu(session: Session, request: dict) -> dict:
    tree = _require_compiled(session)
    menu = menu_for(tree, _str_arg(request, "leaf_id"))
    return {"revision": session.revision, **menu.to_json()}


def _handle_select(session: Session, request: dict) -> dict:
    tree = _require_compiled(session)
    state = select_node(tree, _str_arg(request, "node_id"))
    _apply_highlight(session, state)
    return {"revision": session.revision, **state.to_json()}


def _selection_span(session: Session, request: dict):
    start, end = _span_arg(request)
    limit = len(session.ast.index.data)
    return session.ast.span(min(start, limit), min(end, limit))


def _handle_forward_search(session: Session, request: dict) -> dict:
    tree = _require_compiled(session)
    state = forward_search(tree, session.ast, _selection_span(session,
                                                             request))
    _apply_highlight(session, state)
    return {"revision": session.revision, **state.to_json()}


def _handle_variable_search(session: Session, request: dict) -> dict:
    tree = _require_compiled(session)
    state = variable_search(tree, session.ast, _selection_span(session,
                                                               request))
    _apply_highlight(session, state)
    return {"revision": session.revision, **state.to_json()}


def _scale_mode(container: dict) -> str:
    mode = container.get("mode", "scale_node")
    if mode not in SCALE_MODES:
        raise _bad(f"field 'mode' must be one of {list(SCALE_MODES)}")
    return mode


def _handle_begin_drag(session: Session, request: dict) -> dict:
    tree = _require_compiled(session)
    node_id = _str_arg(request, "node_id")
    kind = _str_arg(request, "kind")
    if kind not in TRANSFORM_KINDS:
        raise _bad(f"field 'kind' must be one of {list(TRANSFORM_KINDS)}")
    frame = gizmo_frame(tree, node_id)
    session.drag_snapshot = (session.source, session.revision)
    session._drag = _DragState(node_id, kind, _scale_mode(request), tree)
    return {"revision": session.revision, "node_id": node_id,
            "frame": frame.to_json()}


def _run_rewrite(holder, node_id: str, kind: str, mode: str, params: dict):
    """Dispatch one transform edit against `holder` (session or snapshot)."""
    if kind == "translate":
        return apply_translation(holder, node_id, _vec3_arg(params, "delta"))
    if kind == "rotate":
        axis = _str_arg(params, "axis")
        return apply_rotation(holder, node_id, axis,
                              _number_arg(params, "angle"))
    return apply_scale(holder, node_id, _vec3_arg(params, "factors"), mode)


def _commit_edit(session: Session, result) -> dict:
    """Swap in an edit's source, recompile, and shape the response."""
    previous_source = session.source
    session.source = result.new_source
    diagnostics = recompile(session)
    if _has_errors(diagnostics):
        session.source = previous_source
        raise _ProtocolError(
            EDIT_REJECTED,
            "edit produced source that no longer compiles: "
            + "; ".join(d.message for d in diagnostics))
    return {"revision": session.revision,
            "edit": result.edit.to_json(),
            "action": result.action,
            "selected_node_after": result.selected_node_after,
            "diagnostics": _diag_json(diagnostics),
            "scene": _scene_json(session)}


def _handle_update_drag(session: Session, request: dict) -> dict:
    drag = session._drag
    if drag is None:
        raise _bad("no active drag; send beginDrag first")
    # recompute from the drag-start snapshot so ticks don't stack edits
    result = _run_rewrite(drag, drag.node_id, drag.kind, drag.mode, request)
    return _commit_edit(session, result)


def _handle_end_drag(session: Session, request: dict) -> dict:
    if session._drag is None:
        raise _bad("no active drag; send beginDrag first")
    session._drag = None
    session.drag_snapshot = None
    return {"revision": session.revision, "source": session.source}


def _handle_apply_transform(session: Session, request: dict) -> dict:
    _require_compiled(session)
    node_id = _str_arg(request, "node_id")
    kind = _str_arg(request, "kind")
    if kind not in TRANSFORM_KINDS:
        raise _bad(f"field 'kind' must be one of {list(TRANSFORM_KINDS)}")
    params = request.get("params", {})
    if not isinstance(params, dict):
        raise _bad("field 'params' must be an object")
    result = _run_rewrite(session, node_id, kind, _scale_mode(params),
                          params)
    return _commit_edit(session, result)


def _handle_export(session: Session, request: dict) -> dict:
    _require_compiled(session)
    format = request.get("format", "binary")
    if format not in ("binary", "ascii"):
        raise _bad("field 'format' must be 'binary' or 'ascii'")
    data = export_stl(session.scene, format)
    triangles = sum(p.mesh.n_triangles for p in session.scene.parts)
    return {"revision": session.revision, "format": format,
            "triangles": triangles,
            "data": base64.b64encode(data).decode("ascii")}


_HANDLERS: dict[str, Callable[[Session, dict], dict]] = {
    "open": _handle_open,
    "setSource": _handle_set_source,
    "getScene": _handle_get_scene,
    "getSource": _handle_get_source,
    "pick": _handle_pick,
    "menu": _handle_menu,
    "select": _handle_select,
    "forwardSearch": _handle_forward_search,
    "variableSearch": _handle_variable_search,
    "beginDrag": _handle_begin_drag,
    "updateDrag": _handle_update_drag,
    "endDrag": _handle_end_drag,
    "applyTransform": _handle_apply_transform,
    "export": _handle_export,
}


def handle_request(session: Session, request: Any) -> dict:
    """Dispatch one protocol request. Never raises.

    `request` may be a decoded object, a JSON string, or raw bytes;
    whatever cannot be understood comes back as a bad_request error.
    Responses always carry the revision they reflect and echo the
    request's `id` field when one was given.
    """
    req_id = None
    try:
        if isinstance(request, (bytes, bytearray)):
            request = bytes(request).decode("utf-8")
        if isinstance(request, str):
            request = json.loads(request)
        if not isinstance(request, dict):
            return _error(session, BAD_REQUEST,
                          "request must be a JSON object")
        raw_id = request.get("id")
        if isinstance(raw_id, (str, int, float)) and not isinstance(raw_id,
                                                                    bool):
            req_id = raw_id
        method = request.get("method")
        if not isinstance(method, str):
            return _error(session, BAD_REQUEST,
                          "field 'method' must be a string", req_id)
        handler = _HANDLERS.get(method)
        if handler is None:
            return _error(session, BAD_REQUEST,
                          f"unknown method {method!r}", req_id)
        claimed = request.get("revision")
        if claimed is not None:
            if isinstance(claimed, bool) or not isinstance(claimed, int):
                return _error(session, BAD_REQUEST,
                              "field 'revision' must be an integer", req_id)
            if claimed != session.revision:
                return _error(
                    session, STALE_REVISION,
                    f"request targets revision {claimed} but the session "
                    f"is at {session.revision}; re-pick and retry", req_id)
        response = handler(session, request)
        if req_id is not None:
            response["id"] = req_id
        return response
    except _ProtocolError as exc:
        return _error(session, exc.code, str(exc), req_id)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        return _error(session, BAD_REQUEST, f"invalid JSON: {exc}", req_id)
    except (ProvenanceError, SelectionError) as exc:
        code = STALE_REVISION if "stale node id" in str(exc) else BAD_REQUEST
        return _error(session, code, str(exc), req_id)
    except RewriteError as exc:
        code = STALE_REVISION if "stale node id" in str(exc) else EDIT_REJECTED
        return _error(session, code, str(exc), req_id)
    except Exception as exc:  # the crash-free guarantee of the protocol
        return _error(session, INTERNAL_ERROR,
                      f"{type(exc).__name__}: {exc}", req_id)
