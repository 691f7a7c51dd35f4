import { describe, expect, it } from "vitest";

import { makeMapping } from "./geometry.js";
import {
  composeQuery,
  draftProblems,
  draftsFromQuery,
  newDraft,
  removeDraft,
  type ComponentDraft,
} from "./query-builder.js";

const mapping = makeMapping(256, 256, 512, 512);

function draft(ordinal: number, x: number, constraints = {}): ComponentDraft {
  return {
    ordinal,
    displayRect: { x, y: 100, w: 120, h: 200 },
    constraints: { motion: { directions: ["E"] }, ...constraints },
    color: "#123456",
  };
}

describe("composing a query document", () => {
  it("builds a single-component motion query", () => {
    const doc = composeQuery([draft(1, 0)], mapping);
    expect(doc.version).toBe(1);
    expect(doc.frame_size).toEqual({ w: 256, h: 256 });
    expect(doc.components).toHaveLength(1);
    expect(doc.components[0].constraints.motion?.directions).toEqual(["E"]);
    // 512-wide display over 256-wide frame: native coordinates halve
    expect(doc.components[0].roi).toEqual({ x: 0, y: 50, w: 60, h: 100 });
  });

  it("orders components by ordinal, mirroring a three-part route", () => {
    const approach = draft(1, 0);
    const turn = draft(2, 170, { motion: { directions: ["S", "SE"] } });
    const leave = draft(3, 340, { motion: { directions: ["W"] } });
    const doc = composeQuery([turn, leave, approach], mapping);
    expect(doc.components.map((c) => c.constraints.motion?.directions)).toEqual([
      ["E"], ["S", "SE"], ["W"],
    ]);
  });

  it("clamps regions dragged outside the frame", () => {
    const outside = draft(1, 480); // display x 480..600 of 512
    const doc = composeQuery([outside], mapping);
    const roi = doc.components[0].roi;
    expect(roi.x + roi.w).toBeLessThanOrEqual(256);
    expect(roi.w).toBeGreaterThanOrEqual(1);
  });

  it("refuses to compose an invalid draft set", () => {
    expect(() => composeQuery([], mapping)).toThrow(/at least one component/);
    const bare = { ...draft(1, 0), constraints: {} };
    expect(() => composeQuery([bare], mapping)).toThrow(/component 1/);
  });

  it("carries optional overrides", () => {
    const doc = composeQuery([draft(1, 0)], mapping, { threshold: 9, lambda: 0.25 });
    expect(doc.threshold).toBe(9);
    expect(doc.lambda).toBe(0.25);
  });
});

describe("round trip", () => {
  it("drafts -> document -> drafts preserves regions and constraints", () => {
    const drafts = [draft(1, 0), draft(2, 170, { color: { rgb: [255, 0, 0] } })];
    const doc = composeQuery(drafts, mapping);
    const back = draftsFromQuery(doc, mapping);
    expect(back).toHaveLength(2);
    back.forEach((b, i) => {
      expect(b.ordinal).toBe(i + 1);
      expect(b.displayRect.x).toBeCloseTo(drafts[i].displayRect.x, 1);
      expect(b.displayRect.w).toBeCloseTo(drafts[i].displayRect.w, 1);
      expect(b.constraints).toEqual(doc.components[i].constraints);
    });
  });
});

describe("draft management", () => {
  it("keeps ordinals contiguous after removal", () => {
    let drafts = [draft(1, 0), draft(2, 100), draft(3, 200)];
    drafts = removeDraft(drafts, 2);
    expect(drafts.map((d) => d.ordinal)).toEqual([1, 2]);
    expect(drafts[1].displayRect.x).toBe(200); // the old third moved up
  });

  it("assigns the next ordinal to a new draft", () => {
    const drafts = [draft(1, 0)];
    const added = newDraft(drafts, { x: 5, y: 5, w: 50, h: 50 });
    expect(added.ordinal).toBe(2);
    expect(Object.keys(added.constraints)).toHaveLength(0);
  });

  it("reports every validation problem at once", () => {
    const problems = draftProblems([
      { ...draft(1, 0), constraints: {} },
      { ...draft(2, 0), displayRect: { x: 0, y: 0, w: 1, h: 1 } },
    ]);
    expect(problems.some((p) => p.includes("component 1"))).toBe(true);
    expect(problems.some((p) => p.includes("degenerate"))).toBe(true);
  });
});
