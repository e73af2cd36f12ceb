/**
 * Mode toolbar: translate / rotate / scale buttons plus a "scale
 * primitive" variant that rewrites the primitive's own arguments
 * instead of wrapping it in a scale element. One mode is active at a
 * time; clicking the active button deactivates it (no gizmo).
 */

import type { ScaleMode, TransformKind } from "./protocol";

export interface ToolMode {
  kind: TransformKind;
  scaleMode?: ScaleMode;
}

const MODES: { id: string; label: string; title: string; mode: ToolMode }[] = [
  { id: "translate", label: "Move", title: "translate the selection",
    mode: { kind: "translate" } },
  { id: "rotate", label: "Rotate", title: "rotate the selection",
    mode: { kind: "rotate" } },
  { id: "scale", label: "Scale", title: "scale through a scale element",
    mode: { kind: "scale", scaleMode: "scale_node" } },
  { id: "scale-primitive", label: "Resize", title: "rewrite the primitive's own dimensions",
    mode: { kind: "scale", scaleMode: "scale_primitive" } },
];

export class Toolbar {
  active: ToolMode | null = null;

  private readonly buttons = new Map<string, HTMLButtonElement>();

  constructor(parent: HTMLElement, private readonly onChange: (mode: ToolMode | null) => void) {
    for (const { id, label, title, mode } of MODES) {
      const button = document.createElement("button");
      button.className = "bcs-tool";
      button.dataset.mode = id;
      button.textContent = label;
      button.title = title;
      button.addEventListener("click", () => this.toggle(id, mode));
      parent.appendChild(button);
      this.buttons.set(id, button);
    }
  }

  private toggle(id: string, mode: ToolMode): void {
    const turningOff = this.buttons.get(id)?.classList.contains("active") ?? false;
    for (const button of this.buttons.values()) button.classList.remove("active");
    if (turningOff) {
      this.active = null;
    } else {
      this.buttons.get(id)?.classList.add("active");
      this.active = mode;
    }
    this.onChange(this.active);
  }
}
