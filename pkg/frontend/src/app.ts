/** Wires the query-creation workflow: pick an archive, draw ordered
 * component regions on a reference frame, attach constraints, submit as a
 * job, poll, browse ranked matches with evidence overlaid. */

import { ApiError, Client } from "./api.js";
import { DrawingSurface } from "./drawing.js";
import { makeMapping, type DisplayMapping } from "./geometry.js";
import {
  composeQuery,
  draftProblems,
  newDraft,
  removeDraft,
  type ComponentDraft,
} from "./query-builder.js";
import {
  describeMatch,
  filterByScore,
  overlayRects,
  rankedMatches,
  scoreBounds,
} from "./results.js";
import type { Constraints, Direction, ResultDocument, ResultMatch } from "./types.js";

const DIRECTIONS: Direction[] = ["E", "NE", "N", "NW", "W", "SW", "S", "SE"];

interface AppState {
  archiveId: string | null;
  mapping: DisplayMapping | null;
  drafts: ComponentDraft[];
  selected: number | null; // ordinal of the draft being edited
  jobId: string | null;
  results: ResultDocument | null;
  scoreFloor: number;
  backgroundFrame: number;
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

export function startApp(baseUrl: string): void {
  const client = new Client(baseUrl);
  const canvas = el<HTMLCanvasElement>("frame-canvas");
  const surface = new DrawingSurface(canvas);
  const state: AppState = {
    archiveId: null,
    mapping: null,
    drafts: [],
    selected: null,
    jobId: null,
    results: null,
    scoreFloor: 0,
    backgroundFrame: 0,
  };

  const status = (text: string) => {
    el("status").textContent = text;
  };

  async function loadArchives() {
    const archives = await client.listArchives();
    const select = el<HTMLSelectElement>("archive-select");
    select.innerHTML = "";
    for (const a of archives) {
      const option = document.createElement("option");
      option.value = a.id;
      option.textContent = `${a.id} (${a.frame_count} frames, ${a.feature_set})`;
      select.appendChild(option);
    }
    if (archives.length) {
      await selectArchive(archives[0].id);
    } else {
      status("no archives on the server");
    }
  }

  async function selectArchive(id: string) {
    state.archiveId = id;
    state.drafts = [];
    state.results = null;
    const geometry = await client.geometry(id);
    state.mapping = makeMapping(
      geometry.frame_width, geometry.frame_height, canvas.width, canvas.height,
    );
    await loadBackground();
    renderAll();
    status(`archive ${id}: draw component regions in order`);
  }

  async function loadBackground() {
    if (!state.archiveId) return;
    const img = new Image();
    img.crossOrigin = "anonymous";
    await new Promise<void>((resolve, reject) => {
      img.onload = () => resolve();
      img.onerror = () => reject(new Error("frame load failed"));
      img.src = client.frameUrl(state.archiveId!, state.backgroundFrame);
    });
    surface.setBackground(img);
  }

  surface.onRectangle = (rect) => {
    state.drafts = [...state.drafts, newDraft(state.drafts, rect)];
    state.selected = state.drafts.length;
    renderAll();
  };

  function setConstraint(partial: Partial<Constraints>) {
    if (state.selected === null) return;
    state.drafts = state.drafts.map((d) =>
      d.ordinal === state.selected
        ? { ...d, constraints: { ...d.constraints, ...partial } }
        : d,
    );
    renderAll();
  }

  function renderComponentList() {
    const list = el("component-list");
    list.innerHTML = "";
    for (const d of state.drafts) {
      const item = document.createElement("li");
      item.style.borderLeft = `4px solid ${d.color}`;
      const constraints = Object.keys(d.constraints).join(", ") || "no constraints yet";
      const label = document.createElement("span");
      label.textContent = `#${d.ordinal}: ${constraints}`;
      label.onclick = () => {
        state.selected = d.ordinal;
        renderAll();
      };
      if (state.selected === d.ordinal) item.classList.add("selected");
      const remove = document.createElement("button");
      remove.textContent = "x";
      remove.onclick = () => {
        state.drafts = removeDraft(state.drafts, d.ordinal);
        state.selected = null;
        renderAll();
      };
      item.append(label, remove);
      list.appendChild(item);
    }
    const problems = draftProblems(state.drafts);
    el("problems").textContent = problems.join("; ");
    el<HTMLButtonElement>("submit-dp").disabled = problems.length > 0;
    el<HTMLButtonElement>("submit-greedy").disabled = problems.length > 0;
  }

  function renderConstraintEditor() {
    const editor = el("constraint-editor");
    editor.style.display = state.selected === null ? "none" : "block";
    if (state.selected === null) return;
    const draft = state.drafts.find((d) => d.ordinal === state.selected);
    if (!draft) return;
    const motion = draft.constraints.motion;
    for (const direction of DIRECTIONS) {
      const button = el<HTMLButtonElement>(`dir-${direction}`);
      button.classList.toggle("active", !!motion?.directions.includes(direction));
    }
    el<HTMLInputElement>("color-enabled").checked = !!draft.constraints.color;
    el<HTMLInputElement>("size-enabled").checked = !!draft.constraints.size;
    el<HTMLInputElement>("persistence-enabled").checked = !!draft.constraints.persistence;
  }

  function renderResults() {
    const list = el("result-list");
    list.innerHTML = "";
    if (!state.results) {
      el("result-empty").textContent = state.jobId ? "" : "no query submitted yet";
      return;
    }
    const matches = filterByScore(rankedMatches(state.results), state.scoreFloor);
    el("result-empty").textContent = matches.length ? "" : "no matches above threshold";
    for (const match of matches) {
      const item = document.createElement("li");
      const label = document.createElement("span");
      label.textContent = `#${match.rank} ${describeMatch(match)}`;
      label.onclick = () => void showEvidence(match);
      item.appendChild(label);
      list.appendChild(item);
    }
  }

  async function showEvidence(match: ResultMatch) {
    if (!state.jobId || !state.mapping) return;
    state.backgroundFrame = match.start_frame;
    await loadBackground();
    const overlay = await client.evidence(state.jobId, match.rank);
    surface.setOverlays(overlayRects(overlay, state.mapping));
    status(`match #${match.rank}: frames ${match.start_frame}-${match.end_frame}`);
  }

  function renderAll() {
    surface.setDrafts(state.drafts);
    renderComponentList();
    renderConstraintEditor();
    renderResults();
  }

  async function submit(algorithm: "dp" | "greedy") {
    if (!state.archiveId || !state.mapping) return;
    try {
      const query = composeQuery(state.drafts, state.mapping);
      status(`submitting ${algorithm} query...`);
      const jobId = await client.submitQuery(state.archiveId, query, algorithm);
      state.jobId = jobId;
      status(`job ${jobId} running...`);
      const final = await client.waitForJob(jobId);
      if (final.state === "failed") {
        status(`job failed: ${final.error ?? "unknown error"}`);
        return;
      }
      state.results = await client.results(jobId);
      const { lo, hi } = scoreBounds(state.results.matches);
      const slider = el<HTMLInputElement>("score-slider");
      slider.min = String(Math.floor(lo));
      slider.max = String(Math.ceil(hi) + 1);
      slider.value = slider.min;
      state.scoreFloor = Number(slider.min);
      surface.setOverlays([]);
      renderResults();
      status(`${state.results.matches.length} matches`);
    } catch (error) {
      status(error instanceof ApiError
        ? `server rejected the query: ${error.message}`
        : String(error));
    }
  }

  // wiring
  el<HTMLSelectElement>("archive-select").onchange = (e) =>
    void selectArchive((e.target as HTMLSelectElement).value);
  el<HTMLButtonElement>("submit-dp").onclick = () => void submit("dp");
  el<HTMLButtonElement>("submit-greedy").onclick = () => void submit("greedy");
  el<HTMLButtonElement>("clear-drafts").onclick = () => {
    state.drafts = [];
    state.selected = null;
    surface.setOverlays([]);
    renderAll();
  };
  el<HTMLInputElement>("score-slider").oninput = (e) => {
    state.scoreFloor = Number((e.target as HTMLInputElement).value);
    renderResults();
  };
  for (const direction of DIRECTIONS) {
    el<HTMLButtonElement>(`dir-${direction}`).onclick = () => {
      if (state.selected === null) return;
      const draft = state.drafts.find((d) => d.ordinal === state.selected)!;
      const current = draft.constraints.motion?.directions ?? [];
      const next = current.includes(direction)
        ? current.filter((d) => d !== direction)
        : [...current, direction];
      if (next.length === 0) {
        const { motion: _dropped, ...rest } = draft.constraints;
        state.drafts = state.drafts.map((d) =>
          d.ordinal === state.selected ? { ...d, constraints: rest } : d,
        );
        renderAll();
      } else {
        setConstraint({ motion: { directions: next } });
      }
    };
  }
  el<HTMLInputElement>("color-enabled").onchange = (e) => {
    const on = (e.target as HTMLInputElement).checked;
    const rgb = el<HTMLInputElement>("color-swatch").value;
    if (on) {
      setConstraint({
        color: {
          rgb: [
            parseInt(rgb.slice(1, 3), 16),
            parseInt(rgb.slice(3, 5), 16),
            parseInt(rgb.slice(5, 7), 16),
          ],
        },
      });
    } else {
      dropConstraint("color");
    }
  };
  el<HTMLInputElement>("size-enabled").onchange = (e) => {
    if ((e.target as HTMLInputElement).checked) {
      setConstraint({ size: { pixels: Number(el<HTMLInputElement>("size-pixels").value) } });
    } else {
      dropConstraint("size");
    }
  };
  el<HTMLInputElement>("persistence-enabled").onchange = (e) => {
    if ((e.target as HTMLInputElement).checked) {
      setConstraint({
        persistence: { frames: Number(el<HTMLInputElement>("persistence-frames").value) },
      });
    } else {
      dropConstraint("persistence");
    }
  };

  function dropConstraint(key: keyof Constraints) {
    if (state.selected === null) return;
    state.drafts = state.drafts.map((d) => {
      if (d.ordinal !== state.selected) return d;
      const constraints = { ...d.constraints };
      delete constraints[key];
      return { ...d, constraints };
    });
    renderAll();
  }

  void loadArchives().catch((error) => status(String(error)));
}
