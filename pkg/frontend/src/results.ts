/** Result presentation logic: ordering, client-side score filtering and
 * evidence boxes scaled to the displayed frame. */

import type { DisplayMapping } from "./geometry.js";
import { nativeToDisplay } from "./geometry.js";
import type { EvidenceOverlay, ResultDocument, ResultMatch, RoiRect } from "./types.js";

export function rankedMatches(doc: ResultDocument): ResultMatch[] {
  return [...doc.matches].sort((a, b) => b.score - a.score || a.rank - b.rank);
}

/** Slider filter: keep matches scoring at least the floor. Operates purely
 * client-side; no re-query. */
export function filterByScore(matches: ResultMatch[], floor: number): ResultMatch[] {
  return matches.filter((m) => m.score >= floor);
}

export function scoreBounds(matches: ResultMatch[]): { lo: number; hi: number } {
  if (matches.length === 0) {
    return { lo: 0, hi: 1 };
  }
  const scores = matches.map((m) => m.score);
  return { lo: Math.min(...scores), hi: Math.max(...scores) };
}

/** Inclusive frame interval covered by a document range. */
export function documentsToFrames(
  startDocument: number,
  endDocument: number,
  framesPerDocument: number,
): { startFrame: number; endFrame: number } {
  return {
    startFrame: startDocument * framesPerDocument,
    endFrame: (endDocument + 1) * framesPerDocument - 1,
  };
}

export function describeMatch(m: ResultMatch): string {
  const d = m.distortions;
  const distortions =
    d && Object.keys(d).length > 0
      ? ` (i/d/c ${d.insertions ?? 0}/${d.deletions ?? 0}/${d.continuations ?? 0})`
      : "";
  return `score ${m.score.toFixed(2)}, frames ${m.start_frame}-${m.end_frame}${distortions}`;
}

/** Evidence rectangles in display coordinates, tagged with the component
 * color index for the overlay. */
export function overlayRects(
  overlay: EvidenceOverlay,
  mapping: DisplayMapping,
): { rect: RoiRect; component: number | null }[] {
  return overlay.boxes.map((b) => ({
    rect: nativeToDisplay(mapping, { x: b.x, y: b.y, w: b.w, h: b.h }),
    component: b.component,
  }));
}
