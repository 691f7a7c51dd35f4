import { describe, expect, it } from "vitest";

import {
  clampToFrame,
  displayToNative,
  dragToRect,
  makeMapping,
  nativeToDisplay,
} from "./geometry.js";

describe("coordinate mapping", () => {
  const mapping = makeMapping(256, 256, 640, 640);

  it("round trips display -> native -> display", () => {
    const rect = { x: 100, y: 50, w: 200, h: 80 };
    const back = nativeToDisplay(mapping, displayToNative(mapping, rect));
    expect(back.x).toBeCloseTo(rect.x);
    expect(back.y).toBeCloseTo(rect.y);
    expect(back.w).toBeCloseTo(rect.w);
    expect(back.h).toBeCloseTo(rect.h);
  });

  it("scales display pixels down to native pixels", () => {
    const native = displayToNative(mapping, { x: 640, y: 320, w: 64, h: 32 });
    expect(native).toEqual({ x: 256, y: 128, w: 25.6, h: 12.8 });
  });

  it("handles anisotropic scaling", () => {
    const m = makeMapping(320, 240, 640, 640);
    const native = displayToNative(m, { x: 320, y: 320, w: 64, h: 64 });
    expect(native.x).toBeCloseTo(160);
    expect(native.y).toBeCloseTo(120);
    expect(native.w).toBeCloseTo(32);
    expect(native.h).toBeCloseTo(24);
  });
});

describe("clamping", () => {
  const mapping = makeMapping(256, 256, 256, 256);

  it("keeps in-frame rectangles untouched", () => {
    const rect = { x: 10, y: 20, w: 30, h: 40 };
    expect(clampToFrame(mapping, rect)).toEqual(rect);
  });

  it("clamps a rectangle dragged outside the frame", () => {
    const clamped = clampToFrame(mapping, { x: -50, y: 200, w: 100, h: 500 });
    expect(clamped.x).toBe(0);
    expect(clamped.y).toBe(200);
    expect(clamped.x + clamped.w).toBeLessThanOrEqual(256);
    expect(clamped.y + clamped.h).toBeLessThanOrEqual(256);
  });

  it("never returns a degenerate rectangle", () => {
    const clamped = clampToFrame(mapping, { x: 400, y: 400, w: 50, h: 50 });
    expect(clamped.w).toBeGreaterThanOrEqual(1);
    expect(clamped.h).toBeGreaterThanOrEqual(1);
  });
});

describe("drag normalization", () => {
  it("accepts corners in any order", () => {
    expect(dragToRect(10, 10, 50, 40)).toEqual({ x: 10, y: 10, w: 40, h: 30 });
    expect(dragToRect(50, 40, 10, 10)).toEqual({ x: 10, y: 10, w: 40, h: 30 });
    expect(dragToRect(50, 10, 10, 40)).toEqual({ x: 10, y: 10, w: 40, h: 30 });
  });
});
