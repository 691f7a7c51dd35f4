/** Mapping between displayed-canvas coordinates and native frame pixels.
 * Native pixels are the wire truth; the canvas may be scaled. */

import type { RoiRect } from "./types.js";

export interface DisplayMapping {
  scaleX: number;
  scaleY: number;
  frameWidth: number;
  frameHeight: number;
}

export function makeMapping(
  frameWidth: number,
  frameHeight: number,
  displayWidth: number,
  displayHeight: number,
): DisplayMapping {
  return {
    scaleX: displayWidth / frameWidth,
    scaleY: displayHeight / frameHeight,
    frameWidth,
    frameHeight,
  };
}

export function displayToNative(m: DisplayMapping, rect: RoiRect): RoiRect {
  return {
    x: rect.x / m.scaleX,
    y: rect.y / m.scaleY,
    w: rect.w / m.scaleX,
    h: rect.h / m.scaleY,
  };
}

export function nativeToDisplay(m: DisplayMapping, rect: RoiRect): RoiRect {
  return {
    x: rect.x * m.scaleX,
    y: rect.y * m.scaleY,
    w: rect.w * m.scaleX,
    h: rect.h * m.scaleY,
  };
}

/** Clamp a native-pixel rectangle to the frame, preserving at least 1px. */
export function clampToFrame(m: DisplayMapping, rect: RoiRect): RoiRect {
  const x0 = Math.min(Math.max(rect.x, 0), m.frameWidth - 1);
  const y0 = Math.min(Math.max(rect.y, 0), m.frameHeight - 1);
  const x1 = Math.min(Math.max(rect.x + rect.w, x0 + 1), m.frameWidth);
  const y1 = Math.min(Math.max(rect.y + rect.h, y0 + 1), m.frameHeight);
  return { x: x0, y: y0, w: x1 - x0, h: y1 - y0 };
}

/** Normalize a drag gesture (any two corners) into a positive-size rect. */
export function dragToRect(x0: number, y0: number, x1: number, y1: number): RoiRect {
  return {
    x: Math.min(x0, x1),
    y: Math.min(y0, y1),
    w: Math.abs(x1 - x0),
    h: Math.abs(y1 - y0),
  };
}
