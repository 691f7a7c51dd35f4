import { describe, expect, it } from "vitest";

import { makeMapping } from "./geometry.js";
import {
  describeMatch,
  documentsToFrames,
  filterByScore,
  overlayRects,
  rankedMatches,
  scoreBounds,
} from "./results.js";
import type { ResultDocument, ResultMatch } from "./types.js";

function match(rank: number, score: number): ResultMatch {
  return {
    rank,
    score,
    start_document: 0,
    end_document: 2,
    start_frame: 0,
    end_frame: 89,
    distortions: { insertions: 1, deletions: 0, continuations: 2 },
    path: [],
  };
}

const doc: ResultDocument = {
  version: 1,
  algorithm: "dp",
  archive: "demo",
  frames_per_document: 30,
  tile_size: 16,
  matches: [match(2, 8), match(1, 11), match(3, 7)],
};

describe("result ordering and filtering", () => {
  it("displays in descending score order", () => {
    expect(rankedMatches(doc).map((m) => m.score)).toEqual([11, 8, 7]);
  });

  it("slider floor filters client side", () => {
    const ranked = rankedMatches(doc);
    expect(filterByScore(ranked, 8).map((m) => m.rank)).toEqual([1, 2]);
  });

  it("raising the floor above the top score empties the list", () => {
    const ranked = rankedMatches(doc);
    const { hi } = scoreBounds(ranked);
    expect(filterByScore(ranked, hi + 1)).toEqual([]);
  });

  it("score bounds cover the match set", () => {
    expect(scoreBounds(doc.matches)).toEqual({ lo: 7, hi: 11 });
    expect(scoreBounds([])).toEqual({ lo: 0, hi: 1 });
  });
});

describe("frame arithmetic", () => {
  it("documents 12..15 at 30 frames each span frames 360..479", () => {
    expect(documentsToFrames(12, 15, 30)).toEqual({ startFrame: 360, endFrame: 479 });
  });
});

describe("presentation", () => {
  it("describes a match with distortion counts", () => {
    const text = describeMatch(match(1, 11));
    expect(text).toContain("score 11.00");
    expect(text).toContain("frames 0-89");
    expect(text).toContain("1/0/2");
  });

  it("scales evidence boxes into display coordinates", () => {
    const mapping = makeMapping(256, 256, 512, 512);
    const rects = overlayRects(
      {
        rank: 1,
        boxes: [{ document: 3, component: 0, x: 32, y: 48, w: 16, h: 16 }],
      },
      mapping,
    );
    expect(rects).toHaveLength(1);
    expect(rects[0].rect).toEqual({ x: 64, y: 96, w: 32, h: 32 });
    expect(rects[0].component).toBe(0);
  });
});
