/**
 * Code editor pane: CodeMirror 6 with provenance decorations.
 *
 * Highlight spans arrive as a DecorationModel (already converted to
 * char offsets); target spans tint green with deeper calls darker,
 * impacted spans tint pink, and margin badges show the call-order
 * number on the line where a target statement starts. Decorations are
 * display state only: they are replaced wholesale on every highlight
 * response and cleared when the document or revision changes.
 */

import {
  Decoration,
  type DecorationSet,
  EditorView,
  GutterMarker,
  gutter,
  keymap,
  lineNumbers,
} from "@codemirror/view";
import {
  Annotation,
  EditorState,
  RangeSet,
  RangeSetBuilder,
  StateEffect,
  StateField,
} from "@codemirror/state";
import { defaultKeymap, history, historyKeymap } from "@codemirror/commands";
import { StreamLanguage } from "@codemirror/language";
import { ByteIndex } from "./bytes";
import type { DecorationModel } from "./decorations";
import { EMPTY_DECORATIONS } from "./decorations";
import type { Diagnostic } from "./protocol";

// ---------------------------------------------------------------------------
// syntax: a small stream tokenizer for the modeling language
// ---------------------------------------------------------------------------

const KEYWORDS = new Set(["module", "for", "if", "else", "true", "false"]);
const BUILTINS = new Set([
  "cube", "sphere", "cylinder", "translate", "rotate", "scale",
  "union", "difference", "intersection",
]);

const bcsLanguage = StreamLanguage.define<Record<string, never>>({
  token(stream) {
    if (stream.match("//")) { stream.skipToEnd(); return "comment"; }
    if (stream.match("/*")) {
      while (!stream.eol()) {
        if (stream.match("*/")) return "comment";
        stream.next();
      }
      return "comment";
    }
    if (stream.match(/^\d+\.?\d*(?:[eE][+-]?\d+)?|^\.\d+/)) return "number";
    if (stream.match(/^\$?[A-Za-z_][A-Za-z0-9_]*/)) {
      const word = stream.current();
      if (KEYWORDS.has(word)) return "keyword";
      if (BUILTINS.has(word)) return "typeName";
      if (word.startsWith("$")) return "special(variableName)";
      return "variableName";
    }
    stream.next();
    return null;
  },
});

// ---------------------------------------------------------------------------
// decorations
// ---------------------------------------------------------------------------

const setHighlightDecorations = StateEffect.define<DecorationModel>();
const setDiagnosticMarks = StateEffect.define<{ from: number; to: number }[]>();

const TARGET_CLASSES = [
  "bcs-target-o1", "bcs-target-o2", "bcs-target-o3", "bcs-target-o4",
] as const;

function marksFromModel(model: DecorationModel): DecorationSet {
  const builder = new RangeSetBuilder<Decoration>();
  for (const mark of model.marks) {
    const cls = mark.kind === "target"
      ? (TARGET_CLASSES[mark.intensity - 1] as string)
      : "bcs-impacted";
    builder.add(mark.fromChar, mark.toChar, Decoration.mark({ class: cls }));
  }
  return builder.finish();
}

const highlightField = StateField.define<DecorationSet>({
  create: () => Decoration.none,
  update(value, tr) {
    for (const effect of tr.effects) {
      if (effect.is(setHighlightDecorations)) return marksFromModel(effect.value);
    }
    // any text change invalidates the spans wholesale
    return tr.docChanged ? Decoration.none : value;
  },
  provide: (field) => EditorView.decorations.from(field),
});

const diagnosticField = StateField.define<DecorationSet>({
  create: () => Decoration.none,
  update(value, tr) {
    for (const effect of tr.effects) {
      if (effect.is(setDiagnosticMarks)) {
        const builder = new RangeSetBuilder<Decoration>();
        for (const { from, to } of effect.value) {
          if (to > from) builder.add(from, to, Decoration.mark({ class: "bcs-error" }));
        }
        return builder.finish();
      }
    }
    return tr.docChanged ? Decoration.none : value;
  },
  provide: (field) => EditorView.decorations.from(field),
});

class BadgeMarker extends GutterMarker {
  constructor(private readonly text: string) { super(); }

  override toDOM(): Node {
    const el = document.createElement("span");
    el.className = "bcs-badge";
    el.textContent = this.text;
    return el;
  }

  override eq(other: BadgeMarker): boolean {
    return other.text === this.text;
  }
}

const badgeField = StateField.define<RangeSet<GutterMarker>>({
  create: () => RangeSet.empty,
  update(value, tr) {
    for (const effect of tr.effects) {
      if (effect.is(setHighlightDecorations)) {
        const byLine = new Map<number, number[]>();
        for (const badge of effect.value.badges) {
          const orders = byLine.get(badge.line) ?? [];
          orders.push(badge.order);
          byLine.set(badge.line, orders);
        }
        const builder = new RangeSetBuilder<GutterMarker>();
        const doc = tr.state.doc;
        for (const line of [...byLine.keys()].sort((a, b) => a - b)) {
          if (line < 1 || line > doc.lines) continue;
          const orders = (byLine.get(line) as number[]).sort((a, b) => a - b);
          builder.add(doc.line(line).from, doc.line(line).from,
            new BadgeMarker(orders.join(",")));
        }
        return builder.finish();
      }
    }
    return tr.docChanged ? RangeSet.empty : value;
  },
});

const badgeGutter = gutter({
  class: "bcs-badge-gutter",
  markers: (view) => view.state.field(badgeField),
});

/** Tags programmatic document syncs so they are not mistaken for typing. */
const remoteSync = Annotation.define<boolean>();

// ---------------------------------------------------------------------------
// the editor pane
// ---------------------------------------------------------------------------

export interface EditorCallbacks {
  /** fired on every user-typed document change (caller debounces) */
  onUserEdit: (text: string) => void;
  /** F1 over a selection: [start, end) byte span */
  onForwardSearch: (span: [number, number]) => void;
}

export class WorkbenchEditor {
  readonly view: EditorView;

  constructor(parent: HTMLElement, callbacks: EditorCallbacks) {
    const searchKey = keymap.of([{
      key: "F1",
      preventDefault: true,
      run: (view) => {
        const range = view.state.selection.main;
        if (range.empty) return false;
        const bytes = new ByteIndex(view.state.doc.toString());
        callbacks.onForwardSearch([
          bytes.charToByte(range.from), bytes.charToByte(range.to),
        ]);
        return true;
      },
    }]);

    this.view = new EditorView({
      parent,
      state: EditorState.create({
        doc: "",
        extensions: [
          lineNumbers(),
          badgeGutter,
          badgeField,
          history(),
          searchKey,
          keymap.of([...defaultKeymap, ...historyKeymap]),
          bcsLanguage,
          highlightField,
          diagnosticField,
          EditorView.updateListener.of((update) => {
            if (!update.docChanged) return;
            const typed = update.transactions.some(
              (tr) => !tr.annotation(remoteSync) && (tr.isUserEvent("input")
                || tr.isUserEvent("delete") || tr.isUserEvent("move")
                || tr.isUserEvent("undo") || tr.isUserEvent("redo")),
            );
            if (typed) callbacks.onUserEdit(update.state.doc.toString());
          }),
          EditorView.theme({
            "&": { height: "100%" },
            ".cm-scroller": { overflow: "auto" },
          }),
        ],
      }),
    });
  }

  getText(): string {
    return this.view.state.doc.toString();
  }

  /** Replace the document with server text, as a minimal single change. */
  setText(text: string): void {
    const current = this.view.state.doc.toString();
    if (current === text) return;
    let prefix = 0;
    const max = Math.min(current.length, text.length);
    while (prefix < max && current[prefix] === text[prefix]) prefix++;
    let suffix = 0;
    while (
      suffix < max - prefix
      && current[current.length - 1 - suffix] === text[text.length - 1 - suffix]
    ) suffix++;
    this.view.dispatch({
      changes: {
        from: prefix,
        to: current.length - suffix,
        insert: text.slice(prefix, text.length - suffix),
      },
      annotations: remoteSync.of(true),
    });
  }

  setDecorations(model: DecorationModel | null): void {
    this.view.dispatch({
      effects: setHighlightDecorations.of(model ?? EMPTY_DECORATIONS),
    });
  }

  setDiagnostics(diagnostics: Diagnostic[]): void {
    const bytes = new ByteIndex(this.getText());
    this.view.dispatch({
      effects: setDiagnosticMarks.of(
        diagnostics
          .filter((d) => d.severity === "error")
          .map((d) => ({
            from: bytes.byteToChar(d.span.start),
            to: bytes.byteToChar(d.span.end),
          })),
      ),
    });
  }

  /** Jump the cursor to a protocol line (1-based) and reveal it. */
  moveCursorToLine(line: number): void {
    const doc = this.view.state.doc;
    if (line < 1 || line > doc.lines) return;
    const pos = doc.line(line).from;
    this.view.dispatch({
      selection: { anchor: pos },
      effects: EditorView.scrollIntoView(pos, { y: "center" }),
      annotations: remoteSync.of(true),
    });
    this.view.focus();
  }
}
