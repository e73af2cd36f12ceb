/**
 * Right-click popup listing the picked element's enclosing code, leaf
 * first. Hovering an entry previews its selection without closing the
 * menu; clicking pins it; clicking anywhere else closes the menu and
 * keeps whatever was pinned last.
 */

import type { MenuEntry } from "./protocol";

export interface MenuCallbacks {
  onHover: (entry: MenuEntry) => void;
  onPick: (entry: MenuEntry) => void;
}

export class PopupMenu {
  private readonly el: HTMLDivElement;
  private readonly dismiss = (event: PointerEvent) => {
    if (!this.el.contains(event.target as Node)) this.hide();
  };

  constructor(parent: HTMLElement) {
    this.el = document.createElement("div");
    this.el.className = "bcs-menu";
    this.el.style.display = "none";
    parent.appendChild(this.el);
  }

  show(entries: MenuEntry[], x: number, y: number, callbacks: MenuCallbacks): void {
    this.el.textContent = "";
    for (const entry of entries) {
      const row = document.createElement("div");
      row.className = "bcs-menu-row";
      const label = document.createElement("span");
      label.textContent = entry.label;
      const line = document.createElement("span");
      line.className = "bcs-menu-line";
      line.textContent = `:${entry.line}`;
      row.append(label, line);
      row.addEventListener("pointerenter", () => callbacks.onHover(entry));
      row.addEventListener("click", () => {
        callbacks.onPick(entry);
        this.hide();
      });
      this.el.appendChild(row);
    }
    this.el.style.left = `${x}px`;
    this.el.style.top = `${y}px`;
    this.el.style.display = "block";
    // next tick so the opening click does not immediately dismiss it
    setTimeout(() => window.addEventListener("pointerdown", this.dismiss), 0);
  }

  hide(): void {
    this.el.style.display = "none";
    window.removeEventListener("pointerdown", this.dismiss);
  }

  get visible(): boolean {
    return this.el.style.display !== "none";
  }
}
