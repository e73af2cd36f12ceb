"""Protocol transports: newline-delimited JSON on stdio, WebSocket for UIs.

Both speak the exact message schema of session.handle_request; the
stdio loop exists so scripts and tests can drive a session without a
network stack, the WebSocket endpoint serves interactive clients. Each
WebSocket connection gets its own independent session.
"""

from __future__ import annotations

import os
import sys
from pathlib import Path
from typing import IO

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .session import Session, dumps, handle_request


def serve_stdio(stdin: IO[str] | None = None,
                stdout: IO[str] | None = None) -> int:
    """One request per input line, one response per output line."""
    stdin = sys.stdin if stdin is None else stdin
    stdout = sys.stdout if stdout is None else stdout
    session = Session()
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        stdout.write(dumps(handle_request(session, line)))
        stdout.write("\n")
        stdout.flush()
    return 0


def _ui_dist() -> Path | None:
    """Locate a built web client to serve next to the protocol.

    BCSCAD_UI points at the directory explicitly; otherwise we accept
    frontend/dist under the working directory, which is where the
    client's build lands in a checkout.
    """
    override = os.environ.get("BCSCAD_UI")
    candidates = ([Path(override)] if override
                  else [Path.cwd() / "frontend" / "dist"])
    for root in candidates:
        if (root / "index.html").is_file():
            return root
    return None


def build_app(static_dir: str | Path | None = None) -> FastAPI:
    """FastAPI app exposing the session protocol at /session.

    When a built web client is available (see _ui_dist) it is mounted
    at the root, so `bcscad serve` is the whole workbench.
    """
    app = FastAPI(title="bcscad workbench")

    @app.websocket("/session")
    async def session_socket(socket: WebSocket) -> None:
        await socket.accept()
        session = Session()
        try:
            while True:
                message = await socket.receive_text()
                await socket.send_text(dumps(handle_request(session,
                                                            message)))
        except WebSocketDisconnect:
            pass

    root = Path(static_dir) if static_dir is not None else _ui_dist()
    if root is not None and root.is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=root, html=True), name="ui")

    return app


def serve_websocket(host: str = "127.0.0.1", port: int = 8765) -> int:
    import uvicorn

    uvicorn.run(build_app(), host=host, port=port, log_level="warning")
    return 0
