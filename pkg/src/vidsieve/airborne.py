"""Moving-object candidates and tracklets for low-contrast aerial footage.

Frame differencing (optionally spanning several frames for slow walkers)
followed by a 3x3 morphological opening yields detection candidates; bodies
larger than the size cap are discarded as clutter (tree borders, waves).
Candidates are associated frame to frame by greedily taking the cheapest
remaining pair under a five-term cost that weighs distance, size change,
shape change, color likelihood and deviation from the motion-predicted
position. Tracklets are short lived by design: an unmatched tracklet ends,
an unmatched candidate starts a new one.

Each tracklet point contributes a per-frame displacement measurement, binned
into the atom containing the point; those 1-level displacement trees (tagged
with the track id) are what airborne archives index.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import kernels
from .config import AirborneConfig
from .grid import AtomCoord, GridGeometry
from .trees import DISPLACEMENT, FeatureTree

_OPENING_KERNEL = np.ones((3, 3), dtype=bool)


@dataclass
class DetectionCandidate:
    """One connected change region in a frame-difference image."""

    position: np.ndarray  # (x, y) centroid, pixels
    mask: np.ndarray  # bool, cropped to the bounding box
    size: int  # set pixels in the mask
    colors: np.ndarray  # (n, 3) RGB samples of the occupied pixels

    def __post_init__(self):
        if int(self.mask.sum()) != self.size:
            raise ValueError("candidate size must equal the set bits of its mask")


def detect_candidates(
    frame_a: np.ndarray,
    frame_b: np.ndarray,
    threshold: float,
    size_filter_max: int = 150,
    color_frame: np.ndarray | None = None,
) -> list[DetectionCandidate]:
    """Change candidates between two grayscale frames.

    Absolute difference above ``threshold``, opened with a 3x3 kernel,
    labeled 8-connected; bodies with more than ``size_filter_max`` pixels are
    dropped. ``color_frame`` supplies RGB samples for the occupied pixels
    (the gray value is replicated when absent).
    """
    a = np.asarray(frame_a, dtype=np.float64)
    b = np.asarray(frame_b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"frame shapes differ: {a.shape} vs {b.shape}")
    changed = np.abs(b - a) > threshold
    opened = ndimage.binary_opening(changed, structure=_OPENING_KERNEL)
    labels, count = kernels.label_components(np.ascontiguousarray(opened, dtype=np.uint8))

    candidates = []
    for lbl in range(1, count + 1):
        rows, cols = np.nonzero(labels == lbl)
        size = len(rows)
        if size > size_filter_max:
            continue
        top, left = rows.min(), cols.min()
        local = np.zeros((rows.max() - top + 1, cols.max() - left + 1), dtype=bool)
        local[rows - top, cols - left] = True
        if color_frame is not None:
            colors = np.asarray(color_frame, dtype=np.float64)[rows, cols]
        else:
            gray = b[rows, cols]
            colors = np.stack([gray, gray, gray], axis=1)
        candidates.append(
            DetectionCandidate(
                position=np.array([cols.mean(), rows.mean()]),
                mask=local,
                size=size,
                colors=colors,
            )
        )
    return candidates


class GaussianMixture:
    """Small diagonal-covariance mixture fitted with EM.

    Initialization is deterministic: components start at brightness
    quantiles of the samples, so repeated fits agree exactly.
    """

    def __init__(self, components: int = 3, iterations: int = 10, variance_floor: float = 4.0):
        self.components = components
        self.iterations = iterations
        self.variance_floor = variance_floor
        self.means: np.ndarray | None = None
        self.variances: np.ndarray | None = None
        self.weights: np.ndarray | None = None

    def fit(self, samples: np.ndarray) -> "GaussianMixture":
        samples = np.asarray(samples, dtype=np.float64).reshape(-1, 3)
        if len(samples) == 0:
            raise ValueError("cannot fit a mixture to zero samples")
        k = min(self.components, len(samples))
        order = np.argsort(samples.sum(axis=1), kind="stable")
        picks = order[((2 * np.arange(k) + 1) * len(samples)) // (2 * k)]
        means = samples[picks].copy()
        variances = np.full((k, 3), max(samples.var(axis=0).mean(), self.variance_floor))
        weights = np.full(k, 1.0 / k)

        for _ in range(self.iterations):
            log_resp = self._log_prob(samples, means, variances, weights)
            log_norm = _logsumexp(log_resp, axis=1)
            resp = np.exp(log_resp - log_norm[:, None])
            total = resp.sum(axis=0)
            nonempty = total > 1e-12
            weights = np.where(nonempty, total / len(samples), weights)
            weights = weights / weights.sum()
            for j in range(k):
                if not nonempty[j]:
                    continue
                means[j] = resp[:, j] @ samples / total[j]
                variances[j] = resp[:, j] @ (samples - means[j]) ** 2 / total[j]
            variances = np.maximum(variances, self.variance_floor)
        self.means, self.variances, self.weights = means, variances, weights
        return self

    @staticmethod
    def _log_prob(samples, means, variances, weights) -> np.ndarray:
        diff = samples[:, None, :] - means[None, :, :]
        log_pdf = -0.5 * (
            (diff ** 2 / variances[None]).sum(axis=2)
            + np.log(2.0 * np.pi * variances).sum(axis=1)[None]
        )
        return log_pdf + np.log(weights)[None]

    def mean_negative_log_likelihood(self, samples: np.ndarray) -> float:
        """Average cost of generating the samples from this mixture."""
        if self.means is None:
            raise RuntimeError("mixture is not fitted")
        samples = np.asarray(samples, dtype=np.float64).reshape(-1, 3)
        log_resp = self._log_prob(samples, self.means, self.variances, self.weights)
        return float(-_logsumexp(log_resp, axis=1).mean())


def _logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    peak = a.max(axis=axis, keepdims=True)
    return (peak + np.log(np.exp(a - peak).sum(axis=axis, keepdims=True))).squeeze(axis)


@dataclass
class Tracklet:
    """A short track: time-ordered points plus a color model of recent samples."""

    track_id: int
    points: list[tuple[int, DetectionCandidate]] = field(default_factory=list)
    color_model: GaussianMixture | None = None

    def append(self, frame_index: int, candidate: DetectionCandidate, config: AirborneConfig) -> None:
        if self.points and frame_index <= self.points[-1][0]:
            raise ValueError("tracklet frames must strictly increase")
        self.points.append((frame_index, candidate))
        recent = [c.colors for _, c in self.points[-config.color_history_points:]]
        self.color_model = GaussianMixture(
            config.gmm_components, config.gmm_iterations, config.gmm_variance_floor
        ).fit(np.concatenate(recent, axis=0))

    @property
    def last(self) -> DetectionCandidate:
        return self.points[-1][1]

    @property
    def last_frame(self) -> int:
        return self.points[-1][0]

    def predicted_position(self) -> np.ndarray:
        """Next position from the last three points under constant
        acceleration; with fewer points, the current position."""
        if len(self.points) < 3:
            return self.last.position
        p1 = self.points[-3][1].position
        p2 = self.points[-2][1].position
        p3 = self.points[-1][1].position
        return 3.0 * p3 - 3.0 * p2 + p1

    def displacements(self) -> list[tuple[int, float, float, float, float]]:
        """(frame, x, y, dx, dy) per point with a successor; displacement is
        normalized to pixels per frame."""
        rows = []
        for (fa, ca), (fb, cb) in zip(self.points, self.points[1:]):
            gap = fb - fa
            d = (cb.position - ca.position) / gap
            rows.append((fa, float(ca.position[0]), float(ca.position[1]),
                         float(d[0]), float(d[1])))
        return rows


def shape_distance(a: DetectionCandidate, b: DetectionCandidate) -> float:
    """Mean absolute error between the two masks aligned at their centroids,
    taken over the union bounding box."""
    canvases = []
    side = 2 * max(*a.mask.shape, *b.mask.shape) + 3
    center = side // 2
    for cand in (a, b):
        rows, cols = np.nonzero(cand.mask)
        canvas = np.zeros((side, side), dtype=np.float64)
        r_off = int(round(center - rows.mean()))
        c_off = int(round(center - cols.mean()))
        canvas[rows + r_off, cols + c_off] = 1.0
        canvases.append(canvas)
    both = canvases[0] + canvases[1] > 0
    if not both.any():
        return 0.0
    rows, cols = np.nonzero(both)
    box = (slice(rows.min(), rows.max() + 1), slice(cols.min(), cols.max() + 1))
    return float(np.abs(canvases[0][box] - canvases[1][box]).mean())


def match_cost(
    tracklet: Tracklet, candidate: DetectionCandidate, config: AirborneConfig
) -> float:
    """Cost of extending a tracklet with a candidate: weighted sum of
    position gap, size change, shape change, color-model surprise and
    deviation from the predicted position."""
    l1, l2, l3, l4, l5 = config.cost_weights
    if min(config.cost_weights) < 0:
        raise ValueError("cost weights must be non-negative")
    last = tracklet.last
    pos = float(np.linalg.norm(last.position - candidate.position))
    size = abs(last.size - candidate.size)
    shape = shape_distance(last, candidate)
    color = tracklet.color_model.mean_negative_log_likelihood(candidate.colors)
    predicted = float(np.linalg.norm(tracklet.predicted_position() - candidate.position))
    return l1 * pos + l2 * size + l3 * shape + l4 * color + l5 * predicted


def greedy_assign(
    costs: np.ndarray, gate: float = float("inf")
) -> list[tuple[int, int]]:
    """One-to-one assignment by repeatedly taking the cheapest remaining
    (row, column) pair below the gate. Ties break on the smaller row, then
    column, so the result is deterministic."""
    costs = np.asarray(costs, dtype=np.float64)
    if costs.size == 0:
        return []
    order = sorted(
        ((costs[i, j], i, j) for i in range(costs.shape[0]) for j in range(costs.shape[1])),
        key=lambda t: (t[0], t[1], t[2]),
    )
    used_rows: set[int] = set()
    used_cols: set[int] = set()
    pairs = []
    for cost, i, j in order:
        if cost > gate:
            break
        if i in used_rows or j in used_cols:
            continue
        pairs.append((i, j))
        used_rows.add(i)
        used_cols.add(j)
    return pairs


class TrackletBuilder:
    """Sequential frame-to-frame association into tracklets.

    Feed each frame's candidates in order. Unmatched tracklets terminate
    immediately (no coasting); unmatched candidates seed new tracklets.
    """

    def __init__(self, config: AirborneConfig):
        self.config = config
        self.live: list[Tracklet] = []
        self.finished: list[Tracklet] = []
        self._next_id = 1

    def step(self, frame_index: int, candidates: list[DetectionCandidate]) -> None:
        if self.live and candidates:
            costs = np.array(
                [[match_cost(t, c, self.config) for c in candidates] for t in self.live]
            )
            pairs = greedy_assign(costs, self.config.assignment_gate)
        else:
            pairs = []
        matched_tracks = {i for i, _ in pairs}
        matched_cands = {j for _, j in pairs}
        for i, j in pairs:
            self.live[i].append(frame_index, candidates[j], self.config)
        survivors = []
        for i, t in enumerate(self.live):
            (survivors if i in matched_tracks else self.finished).append(t)
        self.live = survivors
        for j, cand in enumerate(candidates):
            if j in matched_cands:
                continue
            t = Tracklet(track_id=self._next_id)
            self._next_id += 1
            t.append(frame_index, cand, self.config)
            self.live.append(t)

    def all_tracklets(self) -> list[Tracklet]:
        return self.finished + self.live


def tracklet_features(
    tracklets: list[Tracklet], geometry: GridGeometry, document: int
) -> list[FeatureTree]:
    """1-level displacement trees for one document.

    Each tracklet contributes one tree per atom it visited during the
    document, valued at the mean per-frame displacement of its points there
    and tagged with the track id.
    """
    if geometry.tree_depth != 1:
        raise ValueError("displacement trees are 1-level; geometry.tree_depth must be 1")
    lo = document * geometry.frames_per_document
    hi = lo + geometry.frames_per_document
    out = []
    for t in tracklets:
        per_atom: dict[tuple[int, int], list[np.ndarray]] = {}
        for frame, x, y, dx, dy in t.displacements():
            if not (lo <= frame < hi):
                continue
            atom = geometry.atom_of_pixel(x, y)
            per_atom.setdefault(atom, []).append(np.array([dx, dy]))
        for (u, v), vecs in sorted(per_atom.items()):
            out.append(
                FeatureTree(
                    feature=DISPLACEMENT,
                    depth=1,
                    nodes=np.mean(vecs, axis=0)[None, :],
                    anchor=AtomCoord(u=u, v=v, t=document),
                    track_id=t.track_id,
                )
            )
    return out


def dump_tracklets(tracklets: list[Tracklet], path) -> int:
    """Write one CSV row per tracklet point: track_id, frame, x, y, dx, dy.
    Returns the row count."""
    rows = 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["track_id", "frame", "x", "y", "dx", "dy"])
        for t in tracklets:
            for frame, x, y, dx, dy in t.displacements():
                writer.writerow([t.track_id, frame, f"{x:.3f}", f"{y:.3f}",
                                 f"{dx:.3f}", f"{dy:.3f}"])
                rows += 1
    return rows
