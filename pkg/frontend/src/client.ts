/**
 * Client-side session state: one server connection, one source buffer.
 *
 * The server is the single authority on source text, geometry, and
 * provenance. This class keeps a byte-exact mirror of the server's
 * source (full text on open/setSource, byte splices on edit responses)
 * and republishes protocol payloads to the UI through listeners. It
 * never derives geometry or highlight data itself.
 *
 * Requests are strictly serialized: one in flight at a time, applied
 * in order, so the tracked revision is always consistent with what the
 * server will see next.
 */

import { spliceBytes, utf8Length } from "./bytes";
import type {
  Axis,
  BaseResponse,
  BeginDragResponse,
  CompileResponse,
  Diagnostic,
  EditResponse,
  ExportResponse,
  Frame,
  HighlightResponse,
  HighlightState,
  MenuResponse,
  PickResponse,
  ProtocolError,
  Scene,
  SceneResponse,
  ScaleMode,
  SourceResponse,
  TransformKind,
  TransformParams,
} from "./protocol";
import { isErrorResponse } from "./protocol";

export interface Transport {
  send(text: string): void;
  onMessage(handler: (text: string) => void): void;
}

export interface ClientEvents {
  /** revision changed: new scene (and compile diagnostics when any) */
  revision: (revision: number, scene: Scene | null, diagnostics: Diagnostic[]) => void;
  /** the mirrored source changed; `cause` says how */
  source: (source: string, cause: "open" | "edit" | "sync") => void;
  /** a highlight response arrived (null = cleared by a recompile) */
  highlight: (state: HighlightState | null) => void;
  /** ghost meshes in the scene changed (after a select refreshed them) */
  scene: (scene: Scene) => void;
  /** a protocol error came back */
  error: (error: ProtocolError) => void;
  /** a human-readable remark (HighlightState.notice) */
  notice: (text: string) => void;
}

type Listeners = { [K in keyof ClientEvents]: ClientEvents[K][] };

interface DragHandle {
  nodeId: string;
  kind: TransformKind;
  frame: Frame;
  /** server source at beginDrag; every tick's edit is relative to it */
  snapshotSource: string;
}

export class SessionClient {
  revision = 0;
  source = "";
  scene: Scene | null = null;
  highlight: HighlightState | null = null;
  diagnostics: Diagnostic[] = [];
  drag: DragHandle | null = null;

  private nextId = 1;
  private readonly pending = new Map<number, (payload: unknown) => void>();
  private queue: Promise<unknown> = Promise.resolve();
  private readonly listeners: Listeners = {
    revision: [], source: [], highlight: [], scene: [], error: [], notice: [],
  };

  constructor(private readonly transport: Transport) {
    transport.onMessage((text) => this.dispatch(text));
  }

  on<K extends keyof ClientEvents>(event: K, fn: ClientEvents[K]): void {
    this.listeners[event].push(fn);
  }

  private emit<K extends keyof ClientEvents>(
    event: K, ...args: Parameters<ClientEvents[K]>
  ): void {
    for (const fn of this.listeners[event]) {
      (fn as (...a: Parameters<ClientEvents[K]>) => void)(...args);
    }
  }

  // -- plumbing ------------------------------------------------------------

  private dispatch(text: string): void {
    let payload: unknown;
    try {
      payload = JSON.parse(text);
    } catch {
      return; // not ours; the transport is dedicated, so this is noise
    }
    const id = (payload as { id?: unknown }).id;
    if (typeof id === "number" && this.pending.has(id)) {
      const resolve = this.pending.get(id) as (p: unknown) => void;
      this.pending.delete(id);
      resolve(payload);
    }
  }

  /**
   * Send one request and await its response. `revisioned` requests
   * carry the client's current revision so a racing edit turns into a
   * clean stale_revision error instead of acting on the wrong tree.
   */
  private request<T extends BaseResponse>(
    method: string,
    fields: Record<string, unknown> = {},
    revisioned = true,
  ): Promise<T> {
    const run = () =>
      new Promise<T>((resolve) => {
        const id = this.nextId++;
        this.pending.set(id, resolve as (p: unknown) => void);
        const body: Record<string, unknown> = { method, id, ...fields };
        if (revisioned && this.revision > 0) body.revision = this.revision;
        this.transport.send(JSON.stringify(body));
      }).then((resp) => {
        this.revision = resp.revision;
        if (isErrorResponse(resp)) this.emit("error", resp.error);
        return resp;
      });
    const next = this.queue.then(run, run);
    this.queue = next.catch(() => undefined);
    return next;
  }

  private compileErrors(diags: Diagnostic[]): boolean {
    return diags.some((d) => d.severity === "error");
  }

  private adoptCompile(resp: CompileResponse, sent: string): void {
    this.diagnostics = resp.diagnostics ?? [];
    if (isErrorResponse(resp) || this.compileErrors(this.diagnostics)) {
      return; // transactional: server kept the previous source
    }
    this.source = sent;
    this.scene = resp.scene;
    this.highlight = null; // ids are revision-scoped
    this.drag = null;
    this.emit("source", this.source, "open");
    this.emit("highlight", null);
    this.emit("revision", this.revision, this.scene, this.diagnostics);
  }

  // -- sources -------------------------------------------------------------

  async open(source: string): Promise<CompileResponse> {
    const resp = await this.request<CompileResponse>("open", { source }, false);
    this.adoptCompile(resp, source);
    return resp;
  }

  async setSource(text: string): Promise<CompileResponse> {
    const resp = await this.request<CompileResponse>("setSource", { text }, false);
    this.adoptCompile(resp, text);
    return resp;
  }

  async getSource(): Promise<SourceResponse> {
    const resp = await this.request<SourceResponse>("getSource", {}, false);
    if (!isErrorResponse(resp) && resp.source !== this.source) {
      // the mirror slipped (should not happen); resync from authority
      this.source = resp.source;
      this.emit("source", this.source, "sync");
    }
    return resp;
  }

  async getScene(): Promise<SceneResponse> {
    const resp = await this.request<SceneResponse>("getScene", {}, false);
    if (!isErrorResponse(resp) && resp.scene) {
      this.scene = resp.scene;
      this.emit("scene", this.scene);
    }
    return resp;
  }

  // -- inspection ----------------------------------------------------------

  pick(origin: number[], dir: number[]): Promise<PickResponse> {
    return this.request<PickResponse>("pick", { origin, dir });
  }

  menu(leafId: string): Promise<MenuResponse> {
    return this.request<MenuResponse>("menu", { leaf_id: leafId });
  }

  async select(nodeId: string): Promise<HighlightResponse> {
    const resp = await this.request<HighlightResponse>("select", { node_id: nodeId });
    await this.adoptHighlight(resp);
    return resp;
  }

  async forwardSearch(span: [number, number]): Promise<HighlightResponse> {
    const resp = await this.request<HighlightResponse>("forwardSearch", { span });
    await this.adoptHighlight(resp);
    return resp;
  }

  async variableSearch(span: [number, number]): Promise<HighlightResponse> {
    const resp = await this.request<HighlightResponse>("variableSearch", { span });
    await this.adoptHighlight(resp);
    return resp;
  }

  private async adoptHighlight(resp: HighlightResponse): Promise<void> {
    if (isErrorResponse(resp)) return;
    const hadGhosts = (this.highlight?.ghosts.length ?? 0) > 0;
    this.highlight = {
      target_spans: resp.target_spans,
      impacted_spans: resp.impacted_spans,
      target_node_ids: resp.target_node_ids,
      impacted_node_ids: resp.impacted_node_ids,
      ghosts: resp.ghosts,
      notice: resp.notice,
    };
    this.emit("highlight", this.highlight);
    if (resp.notice) this.emit("notice", resp.notice);
    // ghost meshes live in the server's scene; refresh when they appear
    // or disappear so the viewport draws exactly the installed set
    if (resp.ghosts.length > 0 || hadGhosts) await this.getScene();
  }

  // -- edits ---------------------------------------------------------------

  async applyTransform(
    nodeId: string, kind: TransformKind, params: TransformParams,
  ): Promise<EditResponse> {
    const resp = await this.request<EditResponse>("applyTransform", {
      node_id: nodeId, kind, params,
    });
    if (!isErrorResponse(resp)) this.adoptEdit(resp, this.source);
    return resp;
  }

  async beginDrag(
    nodeId: string, kind: TransformKind, mode?: ScaleMode,
  ): Promise<BeginDragResponse> {
    const fields: Record<string, unknown> = { node_id: nodeId, kind };
    if (mode) fields.mode = mode;
    const resp = await this.request<BeginDragResponse>("beginDrag", fields);
    if (!isErrorResponse(resp)) {
      this.drag = {
        nodeId, kind, frame: resp.frame, snapshotSource: this.source,
      };
    }
    return resp;
  }

  /**
   * One drag tick. `params` carry the TOTAL accumulated delta since
   * beginDrag; the edit in the response is relative to the drag-start
   * snapshot, so the splice applies to the snapshot, not to the
   * previous tick's result.
   */
  async updateDrag(params: TransformParams): Promise<EditResponse> {
    const snapshot = this.drag?.snapshotSource;
    const resp = await this.request<EditResponse>("updateDrag", { ...params });
    if (!isErrorResponse(resp) && snapshot !== undefined) {
      this.adoptEdit(resp, snapshot);
    }
    return resp;
  }

  async endDrag(): Promise<SourceResponse> {
    const resp = await this.request<SourceResponse>("endDrag", {}, false);
    this.drag = null;
    if (!isErrorResponse(resp) && resp.source !== this.source) {
      this.source = resp.source;
      this.emit("source", this.source, "sync");
    }
    return resp;
  }

  exportStl(format: "binary" | "ascii" = "binary"): Promise<ExportResponse> {
    return this.request<ExportResponse>("export", { format });
  }

  private adoptEdit(resp: EditResponse, baseSource: string): void {
    this.source = spliceBytes(
      baseSource, resp.edit.span.start, resp.edit.span.end, resp.edit.replacement,
    );
    this.scene = resp.scene;
    this.diagnostics = resp.diagnostics ?? [];
    this.highlight = null; // spans and ids moved; caller re-selects
    this.emit("source", this.source, "edit");
    this.emit("highlight", null);
    this.emit("revision", this.revision, this.scene, this.diagnostics);
  }

  /** Quick integrity check used by tests and the status bar. */
  bufferByteLength(): number {
    return utf8Length(this.source);
  }
}
