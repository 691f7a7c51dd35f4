/** Canvas interaction: rubber-band rectangle drawing over the reference
 * frame, plus rendering of drafts and evidence overlays. */

import { dragToRect } from "./geometry.js";
import type { ComponentDraft } from "./query-builder.js";
import type { RoiRect } from "./types.js";

export interface OverlayBox {
  rect: RoiRect;
  component: number | null;
}

export class DrawingSurface {
  private drag: { x0: number; y0: number; x1: number; y1: number } | null = null;
  private background: HTMLImageElement | null = null;
  onRectangle: ((rect: RoiRect) => void) | null = null;

  constructor(private canvas: HTMLCanvasElement) {
    canvas.addEventListener("mousedown", (e) => {
      const { x, y } = this.eventPoint(e);
      this.drag = { x0: x, y0: y, x1: x, y1: y };
    });
    canvas.addEventListener("mousemove", (e) => {
      if (!this.drag) return;
      const { x, y } = this.eventPoint(e);
      this.drag.x1 = x;
      this.drag.y1 = y;
      this.requestRender();
    });
    const finish = () => {
      if (!this.drag) return;
      const rect = dragToRect(this.drag.x0, this.drag.y0, this.drag.x1, this.drag.y1);
      this.drag = null;
      if (rect.w >= 3 && rect.h >= 3 && this.onRectangle) {
        this.onRectangle(rect);
      }
      this.requestRender();
    };
    canvas.addEventListener("mouseup", finish);
    canvas.addEventListener("mouseleave", finish);
  }

  private drafts: ComponentDraft[] = [];
  private overlays: OverlayBox[] = [];

  setBackground(img: HTMLImageElement): void {
    this.background = img;
    this.requestRender();
  }

  setDrafts(drafts: ComponentDraft[]): void {
    this.drafts = drafts;
    this.requestRender();
  }

  setOverlays(overlays: OverlayBox[]): void {
    this.overlays = overlays;
    this.requestRender();
  }

  private eventPoint(e: MouseEvent): { x: number; y: number } {
    const bounds = this.canvas.getBoundingClientRect();
    return {
      x: ((e.clientX - bounds.left) / bounds.width) * this.canvas.width,
      y: ((e.clientY - bounds.top) / bounds.height) * this.canvas.height,
    };
  }

  private requestRender(): void {
    requestAnimationFrame(() => this.render());
  }

  render(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
    if (this.background) {
      ctx.drawImage(this.background, 0, 0, this.canvas.width, this.canvas.height);
    } else {
      ctx.fillStyle = "#20242b";
      ctx.fillRect(0, 0, this.canvas.width, this.canvas.height);
    }

    for (const box of this.overlays) {
      ctx.fillStyle = "rgba(224, 49, 49, 0.35)";
      ctx.fillRect(box.rect.x, box.rect.y, box.rect.w, box.rect.h);
      ctx.strokeStyle = "rgba(224, 49, 49, 0.9)";
      ctx.lineWidth = 1;
      ctx.strokeRect(box.rect.x, box.rect.y, box.rect.w, box.rect.h);
    }

    for (const draft of this.drafts) {
      ctx.strokeStyle = draft.color;
      ctx.lineWidth = 2;
      ctx.strokeRect(
        draft.displayRect.x, draft.displayRect.y,
        draft.displayRect.w, draft.displayRect.h,
      );
      ctx.fillStyle = draft.color;
      ctx.font = "bold 14px sans-serif";
      ctx.fillText(
        String(draft.ordinal),
        draft.displayRect.x + 4,
        draft.displayRect.y + 16,
      );
    }

    if (this.drag) {
      const rect = dragToRect(this.drag.x0, this.drag.y0, this.drag.x1, this.drag.y1);
      ctx.setLineDash([4, 3]);
      ctx.strokeStyle = "#fab005";
      ctx.strokeRect(rect.x, rect.y, rect.w, rect.h);
      ctx.setLineDash([]);
    }
  }
}
