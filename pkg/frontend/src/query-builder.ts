/** Component drafts drawn on the canvas and their conversion to a
 * schema-valid query document. */

import { clampToFrame, displayToNative, type DisplayMapping } from "./geometry.js";
import type { Constraints, QueryDocument, RoiRect } from "./types.js";

export interface ComponentDraft {
  ordinal: number; // 1-based, contiguous
  displayRect: RoiRect;
  constraints: Constraints;
  color: string;
}

const DRAFT_COLORS = ["#2f9e44", "#1971c2", "#e8590c", "#9c36b5", "#0c8599", "#e03131"];

export function draftColor(ordinal: number): string {
  return DRAFT_COLORS[(ordinal - 1) % DRAFT_COLORS.length];
}

export function newDraft(drafts: ComponentDraft[], displayRect: RoiRect): ComponentDraft {
  const ordinal = drafts.length + 1;
  return { ordinal, displayRect, constraints: {}, color: draftColor(ordinal) };
}

/** Remove a draft and renumber so ordinals stay contiguous from 1. */
export function removeDraft(drafts: ComponentDraft[], ordinal: number): ComponentDraft[] {
  return drafts
    .filter((d) => d.ordinal !== ordinal)
    .map((d, i) => ({ ...d, ordinal: i + 1, color: draftColor(i + 1) }));
}

export function draftProblems(drafts: ComponentDraft[]): string[] {
  const problems: string[] = [];
  if (drafts.length === 0) {
    problems.push("draw at least one component region");
  }
  drafts.forEach((d) => {
    if (Object.keys(d.constraints).length === 0) {
      problems.push(`component ${d.ordinal} needs at least one constraint`);
    }
    const m = d.constraints.motion;
    if (m && m.directions.length === 0) {
      problems.push(`component ${d.ordinal}: pick at least one direction`);
    }
    if (d.displayRect.w < 2 || d.displayRect.h < 2) {
      problems.push(`component ${d.ordinal}: region is degenerate`);
    }
  });
  return problems;
}

/** Serialize drafts into the wire query document, converting ROIs to native
 * pixels and clamping them to the frame. Throws when invalid. */
export function composeQuery(
  drafts: ComponentDraft[],
  mapping: DisplayMapping,
  options: { threshold?: number; lambda?: number } = {},
): QueryDocument {
  const problems = draftProblems(drafts);
  if (problems.length > 0) {
    throw new Error(problems.join("; "));
  }
  const ordered = [...drafts].sort((a, b) => a.ordinal - b.ordinal);
  return {
    version: 1,
    frame_size: { w: mapping.frameWidth, h: mapping.frameHeight },
    components: ordered.map((d) => ({
      roi: roundRect(clampToFrame(mapping, displayToNative(mapping, d.displayRect))),
      constraints: d.constraints,
    })),
    ...(options.threshold !== undefined ? { threshold: options.threshold } : {}),
    ...(options.lambda !== undefined ? { lambda: options.lambda } : {}),
  };
}

/** Rebuild drafts from a previously composed document (round trip). */
export function draftsFromQuery(
  doc: QueryDocument,
  mapping: DisplayMapping,
): ComponentDraft[] {
  return doc.components.map((c, i) => ({
    ordinal: i + 1,
    displayRect: {
      x: c.roi.x * mapping.scaleX,
      y: c.roi.y * mapping.scaleY,
      w: c.roi.w * mapping.scaleX,
      h: c.roi.h * mapping.scaleY,
    },
    constraints: c.constraints,
    color: draftColor(i + 1),
  }));
}

function roundRect(rect: RoiRect): RoiRect {
  return {
    x: Math.round(rect.x * 100) / 100,
    y: Math.round(rect.y * 100) / 100,
    w: Math.round(rect.w * 100) / 100,
    h: Math.round(rect.h * 100) / 100,
  };
}
