/**
 * Workbench application: wires the editor, viewport, menu, toolbar,
 * and gizmos to one protocol session over a WebSocket.
 *
 * Interaction summary: right-click an element for its code menu
 * (hover previews, click pins and jumps the cursor); left-click picks
 * and pins directly; select text and press F1 to find it in 3D; pick a
 * toolbar mode to get a gizmo on the pinned element, drag its handles
 * to edit the source live, mouse wheel during a drag for 0.1-unit
 * steps.
 */

import { ByteIndex } from "./bytes";
import { SessionClient, type Transport } from "./client";
import { deriveDecorations } from "./decorations";
import { WorkbenchEditor } from "./editor";
import { DragSession, type HandleAxis, applyFrame, buildGizmo } from "./gizmo";
import { PopupMenu } from "./menu";
import type { Frame, ScaleMode, TransformParams } from "./protocol";
import { isErrorResponse } from "./protocol";
import { Toolbar, type ToolMode } from "./toolbar";
import { Viewport } from "./viewport";

const DEMO_SOURCE = `// mounting plate with bolt holes
plate_w = 50;
plate_d = 30;

difference() {
  cube([plate_w, plate_d, 4]);
  for (i = [0 : 3]) {
    translate([7 + i * 12, plate_d / 2, -1]) cylinder(h = 6, r = 2.4, $fn = 24);
  }
}
translate([0, 0, 4]) cube([plate_w, 5, 10]);
translate([plate_w / 2, 20, 4]) sphere(r = 5, $fn = 32);
`;

// ---------------------------------------------------------------------------
// transport
// ---------------------------------------------------------------------------

class WsTransport implements Transport {
  private handler: ((text: string) => void) | null = null;
  private readonly socket: WebSocket;

  constructor(url: string, private readonly status: (text: string) => void) {
    this.socket = new WebSocket(url);
    this.socket.onmessage = (event) => this.handler?.(String(event.data));
    this.socket.onclose = () => status("connection closed; reload to reconnect");
    this.socket.onerror = () => status("connection error");
  }

  ready(): Promise<void> {
    if (this.socket.readyState === WebSocket.OPEN) return Promise.resolve();
    return new Promise((resolve) => {
      this.socket.addEventListener("open", () => resolve(), { once: true });
    });
  }

  send(text: string): void {
    this.socket.send(text);
  }

  onMessage(handler: (text: string) => void): void {
    this.handler = handler;
  }
}

function sessionUrl(): string {
  if (location.protocol.startsWith("http")) {
    const ws = location.protocol === "https:" ? "wss:" : "ws:";
    return `${ws}//${location.host}/session`;
  }
  return "ws://127.0.0.1:8765/session"; // opened from a file
}

function debounce<A extends unknown[]>(ms: number, fn: (...args: A) => void) {
  let timer: ReturnType<typeof setTimeout> | undefined;
  return (...args: A) => {
    clearTimeout(timer);
    timer = setTimeout(() => fn(...args), ms);
  };
}

// ---------------------------------------------------------------------------
// application state
// ---------------------------------------------------------------------------

async function start(): Promise<void> {
  const statusEl = document.getElementById("status") as HTMLElement;
  const setStatus = (text: string) => { statusEl.textContent = text; };

  const transport = new WsTransport(sessionUrl(), setStatus);
  const client = new SessionClient(transport);

  const viewport = new Viewport(document.getElementById("viewport") as HTMLElement);
  const menu = new PopupMenu(document.body);

  let pinnedNodeId: string | null = null;
  let toolMode: ToolMode | null = null;
  let gizmoFrame: Frame | null = null;

  // -- editor ----------------------------------------------------------------

  const pushSource = debounce(400, (text: string) => {
    void client.setSource(text).then((resp) => {
      const errors = (resp.diagnostics ?? []).filter((d) => d.severity === "error");
      setStatus(errors.length > 0
        ? `parse/eval: ${errors[0]?.message ?? "error"}`
        : `compiled revision ${resp.revision}`);
      editor.setDiagnostics(resp.diagnostics ?? []);
    });
  });

  const editor = new WorkbenchEditor(
    document.getElementById("editor") as HTMLElement,
    {
      onUserEdit: (text) => pushSource(text),
      onForwardSearch: (span) => { void client.forwardSearch(span); },
    },
  );

  // -- client events -----------------------------------------------------------

  client.on("source", (text) => editor.setText(text));
  client.on("revision", (revision, scene, diagnostics) => {
    viewport.setScene(scene);
    editor.setDiagnostics(diagnostics);
    setStatus(`revision ${revision}`);
  });
  client.on("scene", (scene) => viewport.setScene(scene));
  client.on("highlight", (state) => {
    viewport.setHighlight(state);
    editor.setDecorations(
      state === null ? null : deriveDecorations(state, new ByteIndex(client.source)),
    );
  });
  client.on("notice", setStatus);
  client.on("error", (error) => setStatus(`${error.code}: ${error.message}`));

  // -- selection and gizmo -----------------------------------------------------

  async function queryFrame(nodeId: string): Promise<Frame | null> {
    // beginDrag doubles as the frame query; end immediately so the
    // session holds no stale snapshot while the gizmo idles
    const resp = await client.beginDrag(nodeId, toolMode?.kind ?? "translate",
      toolMode?.scaleMode);
    if (isErrorResponse(resp)) return null;
    await client.endDrag();
    return resp.frame;
  }

  async function refreshGizmo(): Promise<void> {
    viewport.detachGizmo();
    gizmoFrame = null;
    if (pinnedNodeId === null || toolMode === null) return;
    const frame = await queryFrame(pinnedNodeId);
    if (frame === null || toolMode === null) return;
    gizmoFrame = frame;
    const group = buildGizmo(toolMode.kind);
    applyFrame(group, frame);
    viewport.attachGizmo(group);
    viewport.scaleGizmoToView();
  }

  async function pinSelection(nodeId: string | null): Promise<void> {
    pinnedNodeId = nodeId;
    if (nodeId !== null) await client.select(nodeId);
    await refreshGizmo();
  }

  const toolbar = new Toolbar(
    document.getElementById("toolbar") as HTMLElement,
    (mode) => {
      toolMode = mode;
      void refreshGizmo();
    },
  );
  void toolbar; // state lives in the callbacks

  // -- pointer interaction -------------------------------------------------------

  const canvas = viewport.renderer.domElement;
  let drag: DragSession | null = null;
  let dragAxis: HandleAxis | null = null;
  let sendInFlight = false;
  let sendAgain = false;
  let lastEditSelection: string | null = null;

  async function sendDragTick(): Promise<void> {
    if (drag === null || sendInFlight) { sendAgain = drag !== null; return; }
    sendInFlight = true;
    const resp = await client.updateDrag(drag.params());
    if (!isErrorResponse(resp)) lastEditSelection = resp.selected_node_after;
    sendInFlight = false;
    if (sendAgain) {
      sendAgain = false;
      void sendDragTick();
    }
  }

  canvas.addEventListener("pointerdown", (event) => {
    if (event.button !== 0) return;
    const axis = viewport.pickGizmoHandle(event);
    if (axis !== null && pinnedNodeId !== null && toolMode !== null && gizmoFrame !== null) {
      // begin a real drag against a fresh snapshot
      event.preventDefault();
      viewport.controls.enabled = false;
      const kind = toolMode.kind;
      const mode: ScaleMode | undefined = toolMode.scaleMode;
      void client.beginDrag(pinnedNodeId, kind, mode).then((resp) => {
        if (isErrorResponse(resp) || gizmoFrame === null) return;
        drag = new DragSession(kind, axis, resp.frame,
          viewport.rayFromPointer(event), viewport.viewDirection());
        dragAxis = axis;
        lastEditSelection = null;
        canvas.setPointerCapture(event.pointerId);
      });
      return;
    }
    // plain click: pick through the server and pin the hit
    const ray = viewport.rayFromPointer(event);
    void client.pick(ray.origin, ray.dir).then(async (hit) => {
      if (isErrorResponse(hit) || hit.leaf_id === null) return;
      await pinSelection(hit.leaf_id);
      setStatus(`picked ${hit.is_ghost ? "ghost " : ""}element at t=${hit.t?.toFixed(2)}`);
    });
  });

  canvas.addEventListener("pointermove", (event) => {
    if (drag === null) return;
    if (drag.update(viewport.rayFromPointer(event))) void sendDragTick();
  });

  canvas.addEventListener("wheel", (event) => {
    if (drag === null) return;
    event.preventDefault();
    drag.wheel(event.deltaY < 0 ? 1 : -1);
    void sendDragTick();
  }, { passive: false });

  canvas.addEventListener("pointerup", async (event) => {
    viewport.controls.enabled = true;
    if (drag === null) return;
    const finished = drag;
    drag = null;
    dragAxis = null;
    if (canvas.hasPointerCapture(event.pointerId)) {
      canvas.releasePointerCapture(event.pointerId);
    }
    if (!finished.isNoop()) {
      // flush the final accumulated parameters, then close the drag
      const resp = await client.updateDrag(finished.params());
      if (!isErrorResponse(resp)) lastEditSelection = resp.selected_node_after;
    }
    await client.endDrag();
    if (lastEditSelection !== null) await pinSelection(lastEditSelection);
    else await refreshGizmo();
  });
  void dragAxis;

  canvas.addEventListener("contextmenu", (event) => {
    event.preventDefault();
    const ray = viewport.rayFromPointer(event);
    void client.pick(ray.origin, ray.dir).then(async (hit) => {
      if (isErrorResponse(hit) || hit.leaf_id === null) {
        menu.hide();
        return;
      }
      const resp = await client.menu(hit.leaf_id);
      if (isErrorResponse(resp)) return;
      menu.show(resp.entries, event.clientX, event.clientY, {
        onHover: (entry) => { void client.select(entry.node_id); },
        onPick: (entry) => {
          void pinSelection(entry.node_id);
          editor.moveCursorToLine(entry.line);
        },
      });
    });
  });

  window.addEventListener("keydown", (event) => {
    if (event.key === "Escape") {
      menu.hide();
      void pinSelection(null);
      viewport.setHighlight(null);
      editor.setDecorations(null);
    }
  });

  // -- export ------------------------------------------------------------------

  (document.getElementById("export") as HTMLButtonElement).addEventListener(
    "click", () => {
      void client.exportStl("binary").then((resp) => {
        if (isErrorResponse(resp)) return;
        const raw = atob(resp.data);
        const bytes = new Uint8Array(raw.length);
        for (let i = 0; i < raw.length; i++) bytes[i] = raw.charCodeAt(i);
        const url = URL.createObjectURL(new Blob([bytes], { type: "model/stl" }));
        const a = document.createElement("a");
        a.href = url;
        a.download = "model.stl";
        a.click();
        URL.revokeObjectURL(url);
        setStatus(`exported ${resp.triangles} triangles`);
      });
    });

  // -- go ------------------------------------------------------------------------

  await transport.ready();
  setStatus("connected; compiling demo model");
  await client.open(DEMO_SOURCE);
  setStatus(`revision ${client.revision}`);
}

void start();
