/**
 * Editor decoration model, derived purely from a HighlightState.
 *
 * Target spans tint green, deeper calls darker (the call-order badge
 * number doubles as the intensity bucket); impacted spans tint pink.
 * Badges put the call-order number in the margin of the line where
 * the span starts. Char offsets are UTF-16 indices ready for the
 * editor; the protocol's byte offsets are converted by the caller's
 * ByteIndex so this module stays independent of the buffer.
 */

import { ByteIndex } from "./bytes";
import type { HighlightState } from "./protocol";

export interface MarkDecoration {
  fromChar: number;
  toChar: number;
  kind: "target" | "impacted";
  /** 1..4, target only; deeper call order saturates at 4 */
  intensity: number;
}

export interface MarginBadge {
  /** 1-based line number */
  line: number;
  order: number;
}

export interface DecorationModel {
  marks: MarkDecoration[];
  badges: MarginBadge[];
}

export const EMPTY_DECORATIONS: DecorationModel = { marks: [], badges: [] };

export function intensityBucket(callOrder: number): number {
  return Math.max(1, Math.min(4, callOrder));
}

export function deriveDecorations(
  state: HighlightState | null,
  bytes: ByteIndex,
): DecorationModel {
  if (state === null) return EMPTY_DECORATIONS;
  const marks: MarkDecoration[] = [];
  const badges: MarginBadge[] = [];
  const badgedLines = new Set<string>();

  for (const { span, call_order } of state.target_spans) {
    marks.push({
      fromChar: bytes.byteToChar(span.start),
      toChar: bytes.byteToChar(span.end),
      kind: "target",
      intensity: intensityBucket(call_order),
    });
    const key = `${span.start_line}:${call_order}`;
    if (!badgedLines.has(key)) {
      badgedLines.add(key);
      badges.push({ line: span.start_line, order: call_order });
    }
  }
  for (const span of state.impacted_spans) {
    marks.push({
      fromChar: bytes.byteToChar(span.start),
      toChar: bytes.byteToChar(span.end),
      kind: "impacted",
      intensity: 1,
    });
  }

  // editors want decorations sorted and non-degenerate
  marks.sort((a, b) => a.fromChar - b.fromChar || a.toChar - b.toChar);
  badges.sort((a, b) => a.line - b.line || a.order - b.order);
  return { marks: marks.filter((m) => m.toChar > m.fromChar), badges };
}

/**
 * Face tint for the viewport: "target" when the face's leaf lies in
 * the selected subtree, "impacted" when it lies under any impacted
 * node. Node ids are child-index paths, so subtree membership is a
 * pure id-prefix test, no tree needed.
 */
export function classifyLeaf(
  leafId: string,
  state: HighlightState | null,
): "target" | "impacted" | null {
  if (state === null) return null;
  const selected = state.target_node_ids[state.target_node_ids.length - 1];
  if (selected !== undefined && idInSubtree(leafId, selected)) return "target";
  for (const nodeId of state.impacted_node_ids) {
    if (idInSubtree(leafId, nodeId)) return "impacted";
  }
  return null;
}

export function idInSubtree(leafId: string, rootId: string): boolean {
  if (rootId === "") return true;
  return leafId === rootId || leafId.startsWith(rootId + ".");
}
