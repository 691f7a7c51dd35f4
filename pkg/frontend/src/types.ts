/** Wire types mirroring the service schemas (docs/formats.md, version 1). */

export interface ArchiveSummary {
  id: string;
  feature_set: "cctv" | "airborne";
  frame_count: number;
  document_count: number;
}

export interface Geometry {
  frame_width: number;
  frame_height: number;
  tile_size: number;
  frames_per_document: number;
  tree_depth: number;
  atoms_per_row: number;
  atoms_per_col: number;
}

export type Direction = "E" | "NE" | "N" | "NW" | "W" | "SW" | "S" | "SE";

export interface MotionConstraint {
  directions: Direction[];
  idle_share?: number;
}

export interface Constraints {
  motion?: MotionConstraint;
  color?: { rgb: [number, number, number] };
  activity?: { level: number };
  size?: { pixels: number };
  persistence?: { frames: number };
  displacement?: { dx: number; dy: number };
}

export interface RoiRect {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface QueryComponent {
  roi: RoiRect;
  constraints: Constraints;
}

export interface QueryDocument {
  version: 1;
  frame_size?: { w: number; h: number };
  components: QueryComponent[];
  threshold?: number;
  lambda?: number;
}

export interface PathStep {
  document: number;
  component: number | null;
  kind: "match" | "continuation" | "insertion" | "deletion";
  tiles: [number, number][];
}

export interface ResultMatch {
  rank: number;
  score: number;
  start_document: number;
  end_document: number;
  start_frame: number;
  end_frame: number;
  distortions: Record<string, number>;
  path: PathStep[];
}

export interface ResultDocument {
  version: 1;
  algorithm: "dp" | "greedy";
  archive: string;
  frames_per_document: number;
  tile_size: number;
  matches: ResultMatch[];
}

export interface JobStatus {
  job_id: string;
  state: "queued" | "running" | "done" | "failed";
  error?: string;
}

export interface EvidenceBox {
  document: number;
  component: number | null;
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface EvidenceOverlay {
  rank: number;
  boxes: EvidenceBox[];
}
