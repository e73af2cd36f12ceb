/**
 * Wire types for the session protocol, mirroring docs/protocol.md.
 *
 * The client performs no geometry or provenance computation of its own:
 * everything it renders is shaped like one of these payloads. Node ids
 * and spans are revision-scoped; `Span` offsets are bytes into the
 * UTF-8 source, not JS string indices (see bytes.ts for conversion).
 */

export interface Span {
  start: number;
  end: number;
  start_line: number;
  start_col: number;
  end_line: number;
  end_col: number;
}

export interface Diagnostic {
  message: string;
  span: Span;
  severity: "error" | "warning";
}

export interface MeshData {
  vertices: number[][];
  triangles: number[][];
  /** per-triangle id of the primitive leaf that owns the surface */
  face_source: string[];
}

export interface ScenePart extends MeshData {
  node_id: string;
}

export type GhostClassification = "target" | "impacted";

export interface GhostScenePart extends ScenePart {
  classification: GhostClassification;
}

export interface Scene {
  parts: ScenePart[];
  ghosts: GhostScenePart[];
}

export interface TargetSpan {
  span: Span;
  /** 1-based badge number, outermost call first */
  call_order: number;
}

export interface GhostSpec {
  source_subtree: string;
  classification: GhostClassification;
  world_matrix: number[][];
}

export interface HighlightState {
  target_spans: TargetSpan[];
  impacted_spans: Span[];
  /** branch from the root ("") down to the selected node, selected last */
  target_node_ids: string[];
  impacted_node_ids: string[];
  ghosts: GhostSpec[];
  notice: string | null;
}

export interface MenuEntry {
  node_id: string;
  label: string;
  line: number;
}

export interface Frame {
  rotation: number[][];
  origin: number[];
}

export interface TextEditPayload {
  span: Span;
  replacement: string;
}

export type EditAction = "modified_existing" | "inserted_new" | "updated_primitive";

export interface ProtocolError {
  code: "bad_request" | "stale_revision" | "edit_rejected" | "internal_error";
  message: string;
}

/** Every response carries the revision it reflects; errors carry `error`. */
export interface BaseResponse {
  revision: number;
  id?: string | number;
  error?: ProtocolError;
}

export interface CompileResponse extends BaseResponse {
  diagnostics: Diagnostic[];
  scene: Scene | null;
}

export interface SceneResponse extends BaseResponse {
  scene: Scene | null;
}

export interface SourceResponse extends BaseResponse {
  source: string;
}

export interface PickResponse extends BaseResponse {
  leaf_id: string | null;
  t: number | null;
  point?: number[];
  is_ghost?: boolean;
}

export interface MenuResponse extends BaseResponse {
  entries: MenuEntry[];
}

/** select / forwardSearch / variableSearch spread HighlightState flat. */
export type HighlightResponse = BaseResponse & HighlightState;

export interface BeginDragResponse extends BaseResponse {
  node_id: string;
  frame: Frame;
}

export interface EditResponse extends BaseResponse {
  edit: TextEditPayload;
  action: EditAction;
  selected_node_after: string;
  diagnostics: Diagnostic[];
  scene: Scene | null;
}

export interface ExportResponse extends BaseResponse {
  format: "binary" | "ascii";
  triangles: number;
  data: string;
}

export type TransformKind = "translate" | "rotate" | "scale";
export type ScaleMode = "scale_node" | "scale_primitive";
export type Axis = "x" | "y" | "z";

export type TransformParams =
  | { delta: [number, number, number] }
  | { axis: Axis; angle: number }
  | { factors: [number, number, number]; mode?: ScaleMode };

export function isErrorResponse(resp: BaseResponse): resp is BaseResponse & { error: ProtocolError } {
  return resp.error !== undefined;
}
