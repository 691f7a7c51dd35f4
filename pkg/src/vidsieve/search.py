"""Partial-match retrieval and assembly into ranked full matches.

Partial matches are index hits: spatio-temporal locations whose stored tree
content collides with a component's query trees for every constrained
feature. Two assemblers turn them into scored video segments:

* a greedy optimizer that, per candidate start, picks the segment length
  maximizing ``exp(distinct matched tile coordinates - lambda * length)``,
  blind to component order;
* a causal dynamic program over (document, component) cells that rewards
  in-order matches and charges three distortions: an unmatched document
  inside a match (insertion), a skipped component (deletion) and a repeated
  component (continuation). Airborne runs add a bonus when consecutive
  matches come from the same tracklet. Paths are extracted best first,
  claimed cells are zeroed, and the matrix is refilled so extracted paths
  stay node-disjoint with non-increasing scores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .config import DpWeights
from .lsh import ArchiveIndex
from .query import Query

_NO_TRACK = -1


class QueryArchiveMismatch(ValueError):
    """Query and archive disagree on geometry or seed."""


@dataclass
class PartialMatchSet:
    """Per-component index hits over a document range.

    ``locations[alpha]`` maps a document index to the set of matching tile
    coordinates; entries are (u, v) pairs, or (u, v, track_id) triples for
    tracked archives.
    """

    n_documents: int
    locations: list[dict[int, set]]
    tracked: bool = False

    @property
    def n_components(self) -> int:
        return len(self.locations)

    def match_matrix(self) -> np.ndarray:
        """Binary (documents x components) indicator: component matched
        anywhere admissible in the document."""
        m = np.zeros((self.n_documents, self.n_components), dtype=np.uint8)
        for alpha, per_doc in enumerate(self.locations):
            for doc, locs in per_doc.items():
                if locs and 0 <= doc < self.n_documents:
                    m[doc, alpha] = 1
        return m

    def dominant_tracks(self) -> np.ndarray:
        """Per (document, component): the track id backing the most
        locations, smallest id on ties; -1 where untracked or unmatched."""
        phi = np.full((self.n_documents, self.n_components), _NO_TRACK, dtype=np.int64)
        if not self.tracked:
            return phi
        for alpha, per_doc in enumerate(self.locations):
            for doc, locs in per_doc.items():
                if not locs or not (0 <= doc < self.n_documents):
                    continue
                counts: dict[int, int] = {}
                for loc in locs:
                    if len(loc) >= 3:
                        counts[loc[2]] = counts.get(loc[2], 0) + 1
                if counts:
                    phi[doc, alpha] = min(
                        (t for t in counts), key=lambda t: (-counts[t], t)
                    )
        return phi

    def tiles(self, alpha: int, doc: int) -> set[tuple[int, int]]:
        return {(loc[0], loc[1]) for loc in self.locations[alpha].get(doc, set())}

    def pooled_tiles(self) -> dict[int, set[tuple[int, int]]]:
        """Document -> distinct matching tile coordinates over all components."""
        pooled: dict[int, set[tuple[int, int]]] = {}
        for per_doc in self.locations:
            for doc, locs in per_doc.items():
                if 0 <= doc < self.n_documents:
                    pooled.setdefault(doc, set()).update((l[0], l[1]) for l in locs)
        return pooled


def partial_matches(
    query: Query, archive: ArchiveIndex, document_count: int
) -> PartialMatchSet:
    """Look up each component's query trees at every admissible anchor.

    A location matches a component only if it is returned for every
    constrained feature (set intersection); the component's match set is the
    union over its ROI anchors.
    """
    if query.frame_size is not None:
        expected = (archive.geometry.frame_width, archive.geometry.frame_height)
        if tuple(query.frame_size) != expected:
            raise QueryArchiveMismatch(
                f"query drawn on {query.frame_size} frames, archive is {expected}"
            )
    tracked = archive.feature_set == "airborne"
    locations: list[dict[int, set]] = []
    for component in query.components:
        missing = [f for f in component.features() if f not in archive.indices]
        if missing:
            raise QueryArchiveMismatch(
                f"archive has no index for constrained feature(s) {missing}"
            )
        vectors = {
            f: component.query_vectors(f, archive.geometry.tree_depth)
            for f in component.features()
        }
        per_doc: dict[int, set] = {}
        for (u, v) in component.anchors(archive.geometry):
            hit_sets = []
            for f, probes in vectors.items():
                hits: set = set()
                for vec in probes:  # a constraint may probe several trees
                    hits |= archive.lookup(f, vec, (u, v))
                if tracked:
                    docs = {}
                    for entry in hits:
                        docs.setdefault(entry[0], set()).add(entry[1])
                    hit_sets.append(docs)
                else:
                    hit_sets.append({doc: None for doc in hits})
                if not hits:
                    break
            if len(hit_sets) < len(vectors):
                continue
            common = set(hit_sets[0])
            for hs in hit_sets[1:]:
                common &= set(hs)
            for doc in common:
                if tracked:
                    track_ids = set(hit_sets[0][doc])
                    for hs in hit_sets[1:]:
                        track_ids &= hs[doc]
                    if not track_ids:
                        track_ids = set().union(*(hs[doc] for hs in hit_sets))
                    per_doc.setdefault(doc, set()).update(
                        (u, v, t) for t in track_ids
                    )
                else:
                    per_doc.setdefault(doc, set()).add((u, v))
        locations.append(per_doc)
    return PartialMatchSet(
        n_documents=document_count, locations=locations, tracked=tracked
    )


@dataclass(frozen=True)
class PathStep:
    """One cell of a full-match path."""

    document: int
    component: int | None  # None for greedy (order-blind) matches
    kind: str  # match | continuation | insertion | deletion
    tiles: tuple[tuple[int, int], ...] = ()


@dataclass
class FullMatch:
    """A scored video segment with its supporting assignments."""

    start_document: int
    end_document: int  # inclusive
    score: float
    path: list[PathStep] = field(default_factory=list)
    distortions: dict[str, int] = field(default_factory=dict)

    def frame_interval(self, frames_per_document: int) -> tuple[int, int]:
        return (
            self.start_document * frames_per_document,
            (self.end_document + 1) * frames_per_document - 1,
        )


# ---------------------------------------------------------------------------
# Greedy assembler


def greedy_full_matches(
    matches: PartialMatchSet,
    time_scale: float,
    horizon: int,
    min_log_value: float | None = None,
) -> list[FullMatch]:
    """Best non-overlapping segments under the discounted coverage value.

    For each start document with at least one partial match, the value of
    the segment [start, start + length] is
    ``exp(distinct matching tiles - time_scale * length)``; the shortest
    length attaining the maximum wins. Lower-valued segments overlapping a
    chosen one are suppressed. Segments whose log value falls below
    ``min_log_value`` are dropped when a floor is given.
    """
    if time_scale < 0:
        raise ValueError("time scale must be non-negative")
    pooled = matches.pooled_tiles()
    if not pooled:
        return []
    candidates = []
    for start in sorted(pooled):
        seen: set[tuple[int, int]] = set(pooled[start])
        best_log: float | None = None
        best_delta = 1
        for delta in range(1, horizon + 1):
            doc = start + delta
            if doc in pooled:
                seen |= pooled[doc]
            log_value = len(seen) - time_scale * delta
            if best_log is None or log_value > best_log + 1e-12:
                best_log = log_value
                best_delta = delta
        candidates.append((start, best_delta, best_log))

    candidates.sort(key=lambda c: (-c[2], c[0]))
    chosen: list[tuple[int, int, float]] = []
    for start, delta, log_value in candidates:
        end = start + delta
        if any(not (end < s or start > e) for s, e, _ in chosen):
            continue
        if min_log_value is not None and log_value < min_log_value:
            continue
        chosen.append((start, end, log_value))

    out = []
    for start, end, log_value in sorted(chosen, key=lambda c: (-c[2], c[0])):
        path = [
            PathStep(
                document=doc,
                component=None,
                kind="match",
                tiles=tuple(sorted(pooled[doc])),
            )
            for doc in range(start, min(end, matches.n_documents - 1) + 1)
            if doc in pooled
        ]
        out.append(
            FullMatch(
                start_document=start,
                end_document=end,
                score=math.exp(log_value) if log_value < 700 else math.inf,
                path=path,
                distortions={},
            )
        )
    return out


# ---------------------------------------------------------------------------
# Dynamic-programming assembler

_START, _DIAG, _CONT, _GAP, _SKIP = 0, 1, 2, 3, 4
_KIND = {_DIAG: "match", _CONT: "continuation", _GAP: "insertion", _SKIP: "deletion"}


def _fill(
    m: np.ndarray,
    phi: np.ndarray,
    weights: DpWeights,
    tracked: bool,
    claimed: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """One pass of the value recurrence; claimed cells are pinned to zero."""
    docs, comps = m.shape
    value = np.zeros((docs, comps), dtype=np.float64)
    back = np.zeros((docs, comps), dtype=np.int8)
    for tau in range(docs):
        for alpha in range(comps):
            if claimed[tau, alpha]:
                continue
            up = value[tau - 1, alpha] if tau > 0 else 0.0
            diag = value[tau - 1, alpha - 1] if tau > 0 and alpha > 0 else 0.0
            left = value[tau, alpha - 1] if alpha > 0 else 0.0
            if m[tau, alpha]:
                choices = (
                    (diag + weights.match, _DIAG),
                    (up + weights.continuation, _CONT),
                )
            else:
                choices = (
                    (up + weights.unmatched_document, _GAP),
                    (left + weights.skipped_component, _SKIP),
                )
            best, line = max(choices, key=lambda c: c[0])
            if best <= 0.0:
                best, line = 0.0, _START
            if (
                tracked
                and m[tau, alpha]
                and best > 0.0
                and tau > 0
                and alpha > 0
                and phi[tau, alpha] != _NO_TRACK
                and phi[tau, alpha] == phi[tau - 1, alpha - 1]
            ):
                best += weights.same_track_bonus
            value[tau, alpha] = best
            back[tau, alpha] = line
    return value, back


def _predecessor(tau: int, alpha: int, line: int) -> tuple[int, int]:
    if line == _DIAG:
        return tau - 1, alpha - 1
    if line in (_CONT, _GAP):
        return tau - 1, alpha
    return tau, alpha - 1  # _SKIP


def _windows(m: np.ndarray, weights: DpWeights, tracked: bool) -> list[tuple[int, int]]:
    """Document ranges that the DP can treat independently.

    A path crossing a stretch of documents with no matches pays the
    unmatched-document penalty per document; once the stretch is longer than
    any achievable score divided by that penalty, no positive path spans it,
    so the timeline splits. This keeps query cost proportional to matched
    content rather than archive length.
    """
    docs = m.shape[0]
    matched = np.nonzero(m.any(axis=1))[0]
    if len(matched) == 0:
        return []
    penalty = -weights.unmatched_document
    if penalty <= 0:
        return [(0, docs - 1)]
    per_cell = max(weights.match, weights.continuation) + (
        weights.same_track_bonus if tracked else 0.0
    )
    ceiling = int(m.sum()) * per_cell
    bridge = int(math.floor(ceiling / penalty)) + 1
    spans = []
    start = prev = int(matched[0])
    for doc in matched[1:]:
        if doc - prev > bridge:
            spans.append((start, prev))
            start = int(doc)
        prev = int(doc)
    spans.append((start, prev))
    return spans


def dp_full_matches(
    matches: PartialMatchSet,
    weights: DpWeights,
    threshold: float,
    max_paths: int = 100,
) -> list[FullMatch]:
    """Ranked causal alignments of the query components to the documents.

    Fills the value matrix with the four-way recurrence (match, continuation,
    unmatched document, skipped component, each gated by the cell's match
    bit), adds the same-track bonus on tracked archives, then repeatedly
    extracts the best path, zeroes its cells and refills until the best
    remaining value drops to the threshold or ``max_paths`` is reached.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    m = matches.match_matrix()
    phi = matches.dominant_tracks()
    results: list[FullMatch] = []
    for lo, hi in _windows(m, weights, matches.tracked):
        window = slice(lo, hi + 1)
        results.extend(
            _extract_paths(
                m[window], phi[window], weights, matches, lo, threshold, max_paths
            )
        )
    results.sort(key=lambda r: (-r.score, r.start_document))
    return results[:max_paths]


def _extract_paths(
    m: np.ndarray,
    phi: np.ndarray,
    weights: DpWeights,
    matches: PartialMatchSet,
    doc_offset: int,
    threshold: float,
    max_paths: int,
) -> list[FullMatch]:
    claimed = np.zeros(m.shape, dtype=bool)
    out: list[FullMatch] = []
    while len(out) < max_paths:
        value, back = _fill(m, phi, weights, matches.tracked, claimed)
        best = float(value.max(initial=0.0))
        if best <= threshold:
            break
        tau, alpha = np.unravel_index(int(value.argmax()), value.shape)
        cells: list[tuple[int, int, int]] = []
        while True:
            line = int(back[tau, alpha])
            cells.append((int(tau), int(alpha), line))
            if line == _START:
                break
            ptau, palpha = _predecessor(tau, alpha, line)
            if ptau < 0 or palpha < 0 or value[ptau, palpha] <= 0.0:
                break
            tau, alpha = ptau, palpha
        cells.reverse()

        path = []
        distortions = {"insertions": 0, "deletions": 0, "continuations": 0}
        for i, (ctau, calpha, line) in enumerate(cells):
            if i == 0:
                kind = "match" if m[ctau, calpha] else "insertion"
            else:
                kind = _KIND[line]
            if kind == "continuation":
                distortions["continuations"] += 1
            elif kind == "insertion":
                distortions["insertions"] += 1
            elif kind == "deletion":
                distortions["deletions"] += 1
            doc = ctau + doc_offset
            path.append(
                PathStep(
                    document=doc,
                    component=calpha,
                    kind=kind,
                    tiles=tuple(sorted(matches.tiles(calpha, doc))),
                )
            )
            claimed[ctau, calpha] = True
        out.append(
            FullMatch(
                start_document=path[0].document,
                end_document=path[-1].document,
                score=best,
                path=path,
                distortions=distortions,
            )
        )
    return out


# ---------------------------------------------------------------------------
# False-positive bounds


def random_match_bound(
    dict_size: int, components: int, window: int, ordered: bool
) -> Fraction:
    """Probability that a random document sequence realizes an N-component
    query, evaluated exactly.

    Unordered: C(|D|, N) / |D|^N. Ordered queries divide by N! since only
    one arrangement of the drawn components respects the query order.
    """
    if components < 1:
        raise ValueError("a query has at least one component")
    if components > dict_size:
        raise ValueError(
            f"cannot draw {components} distinct components from a "
            f"dictionary of {dict_size}"
        )
    if window < 1:
        raise ValueError("window must span at least one document")
    p = Fraction(math.comb(dict_size, components), dict_size ** components)
    if ordered:
        p /= math.factorial(components)
    return p


def random_match_bound_asymptotic(
    dict_size: int, components: int, window: int, ordered: bool
) -> float:
    """Large-dictionary approximation of the same bound:
    ``exp(-N log(|D| / window))``, divided by N! when ordered."""
    value = math.exp(-components * math.log(dict_size / window))
    if ordered:
        value /= math.factorial(components)
    return value
