"""Query documents: ordered action components with ROIs and feature targets.

A query is what the user draws: a sequence of regions, each with one or more
feature constraints (direction of motion, a color swatch, a blob size, a
persistence level, a displacement vector). Each constrained feature of a
component is turned into a synthetic feature tree whose leaves all carry the
target value; those trees are hashed against the archive exactly like
indexed content.

The JSON wire schema is versioned; see docs/formats.md.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import trees
from .config import DpWeights, SearchConfig
from .grid import GridGeometry

QUERY_SCHEMA_VERSION = 1


class QueryValidationError(ValueError):
    """Schema violation; ``path`` points at the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


@dataclass(frozen=True)
class Roi:
    """Axis-aligned rectangle in native frame pixels."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise QueryValidationError("roi", "width and height must be positive")

    def clamped(self, frame_width: int, frame_height: int) -> "Roi":
        x0 = min(max(self.x, 0.0), frame_width - 1.0)
        y0 = min(max(self.y, 0.0), frame_height - 1.0)
        x1 = min(max(self.x + self.w, x0 + 1.0), float(frame_width))
        y1 = min(max(self.y + self.h, y0 + 1.0), float(frame_height))
        return Roi(x0, y0, x1 - x0, y1 - y0)


_DIRECTION_INDEX = {name: i for i, name in enumerate(trees.MOTION_DIRECTIONS)}


def _motion_target(spec: dict, path: str) -> np.ndarray:
    directions = spec.get("directions")
    if not directions or not isinstance(directions, list):
        raise QueryValidationError(f"{path}.directions", "need a non-empty list of directions")
    idle_share = spec.get("idle_share", 0.5)
    if not (0.0 <= idle_share < 1.0):
        raise QueryValidationError(f"{path}.idle_share", "must lie in [0, 1)")
    hist = np.zeros(trees.FEATURE_DIM[trees.MOTION])
    for d in directions:
        if d not in _DIRECTION_INDEX:
            raise QueryValidationError(
                f"{path}.directions", f"unknown direction {d!r}; "
                f"expected one of {', '.join(trees.MOTION_DIRECTIONS)}"
            )
        hist[_DIRECTION_INDEX[d]] = (1.0 - idle_share) / len(directions)
    hist[trees.MOTION_IDLE_BIN] = idle_share
    return hist


def _color_target(spec: dict, path: str) -> np.ndarray:
    rgb = spec.get("rgb")
    if (not isinstance(rgb, list)) or len(rgb) != 3:
        raise QueryValidationError(f"{path}.rgb", "need [r, g, b] with 0..255 channels")
    if not all(isinstance(c, (int, float)) and 0 <= c <= 255 for c in rgb):
        raise QueryValidationError(f"{path}.rgb", "channels must lie in 0..255")
    from .cctv import hsl_bins

    hb, sb, lb = hsl_bins(np.asarray([rgb], dtype=np.float64))
    hist = np.zeros(trees.FEATURE_DIM[trees.COLOR])
    hist[int(hb[0])] = 1.0
    hist[8 + int(sb[0])] = 1.0
    hist[12 + int(lb[0])] = 1.0
    return hist


def _scalar_target(spec: dict, path: str, key: str, lo: float, hi: float) -> np.ndarray:
    value = spec.get(key)
    if not isinstance(value, (int, float)):
        raise QueryValidationError(f"{path}.{key}", f"need a number for {key!r}")
    if not (lo <= value <= hi):
        raise QueryValidationError(f"{path}.{key}", f"must lie in [{lo}, {hi}]")
    return np.array([float(value)])


def _displacement_target(spec: dict, path: str) -> np.ndarray:
    out = []
    for key in ("dx", "dy"):
        value = spec.get(key)
        if not isinstance(value, (int, float)):
            raise QueryValidationError(f"{path}.{key}", f"need a number for {key!r}")
        out.append(float(value))
    return np.array(out)


def constraint_target(feature: str, spec: dict, path: str) -> np.ndarray:
    """Atom-level target vector encoded by one constraint."""
    if feature == trees.MOTION:
        return _motion_target(spec, path)
    if feature == trees.COLOR:
        return _color_target(spec, path)
    if feature == trees.ACTIVITY:
        return _scalar_target(spec, path, "level", 0.0, 1.0)
    if feature == trees.SIZE:
        return _scalar_target(spec, path, "pixels", 0.0, float("inf"))
    if feature == trees.PERSISTENCE:
        return _scalar_target(spec, path, "frames", 0.0, float("inf"))
    if feature == trees.DISPLACEMENT:
        return _displacement_target(spec, path)
    raise QueryValidationError(path, f"unknown feature {feature!r}")


@dataclass(frozen=True)
class ActionComponent:
    """One drawn region plus its feature targets."""

    roi: Roi
    constraints: dict[str, dict]

    def __post_init__(self):
        if not self.constraints:
            raise QueryValidationError("constraints", "a component needs at least one constraint")

    def features(self) -> tuple[str, ...]:
        return tuple(self.constraints)

    def query_vectors(self, feature: str, depth: int) -> list[np.ndarray]:
        """Hash vectors of the synthetic trees for one constraint.

        Every leaf atom carries the target value, aggregated upward and
        flattened exactly like archived content. A motion constraint listing
        several admissible directions yields one probe tree per direction
        (hashing quantizes a tree to a single dominant class, so directions
        must be probed separately); other constraints yield a single tree.
        """
        spec = self.constraints[feature]
        if feature == trees.MOTION:
            specs = [dict(spec, directions=[d]) for d in spec.get("directions", [])]
        else:
            specs = [spec]
        out = []
        for s in specs:
            target = constraint_target(feature, s, "constraints")
            leaves = np.tile(target, (depth, depth, 1))
            out.append(trees.anchor_hash_matrix(feature, leaves, depth)[0, 0])
        return out

    def anchors(self, geometry: GridGeometry) -> list[tuple[int, int]]:
        """Tree anchors queried for this component.

        Prefers anchors whose whole k x k block lies inside the (clamped)
        ROI; when the ROI is smaller than one block, falls back to anchors
        whose block intersects it.
        """
        g = geometry
        roi = self.roi.clamped(g.frame_width, g.frame_height)
        b, k = g.tile_size, g.tree_depth

        def clamp_u(u):
            return min(max(u, 0), g.anchor_cols - 1)

        def clamp_v(v):
            return min(max(v, 0), g.anchor_rows - 1)

        u_lo = int(np.ceil(roi.x / b))
        u_hi = int(np.floor((roi.x + roi.w) / b)) - k
        v_lo = int(np.ceil(roi.y / b))
        v_hi = int(np.floor((roi.y + roi.h) / b)) - k
        if u_hi < u_lo or v_hi < v_lo or u_hi < 0 or v_hi < 0:
            u_lo = clamp_u(int(roi.x // b) - k + 1)
            u_hi = clamp_u(int((roi.x + roi.w - 1) // b))
            v_lo = clamp_v(int(roi.y // b) - k + 1)
            v_hi = clamp_v(int((roi.y + roi.h - 1) // b))
        else:
            u_lo, u_hi = clamp_u(u_lo), clamp_u(u_hi)
            v_lo, v_hi = clamp_v(v_lo), clamp_v(v_hi)
        return [(u, v) for v in range(v_lo, v_hi + 1) for u in range(u_lo, u_hi + 1)]


@dataclass(frozen=True)
class Query:
    """Ordered action components plus search parameters."""

    components: tuple[ActionComponent, ...]
    weights: DpWeights = field(default_factory=DpWeights)
    threshold: float = 6.0
    time_scale: float = 0.5
    horizon: int = 32
    greedy_min_log_value: float | None = None
    frame_size: tuple[int, int] | None = None  # (width, height) sanity check

    def __post_init__(self):
        if not self.components:
            raise QueryValidationError("components", "a query needs at least one component")
        if self.threshold <= 0:
            raise QueryValidationError("threshold", "must be positive")
        if self.time_scale < 0:
            raise QueryValidationError("lambda", "time scale must be non-negative")
        if self.horizon < 1:
            raise QueryValidationError("horizon", "must be at least 1")

    @classmethod
    def with_defaults(cls, components, search: SearchConfig, **overrides) -> "Query":
        return cls(
            components=tuple(components),
            weights=search.weights,
            threshold=search.score_threshold,
            time_scale=search.time_scale,
            horizon=search.horizon,
            greedy_min_log_value=search.greedy_min_log_value,
            **overrides,
        )


_WEIGHT_KEYS = {
    "match", "continuation", "unmatched_document", "skipped_component", "same_track_bonus",
}


def parse_query(doc: dict, search: SearchConfig | None = None) -> Query:
    """Validate and build a Query from its JSON document."""
    search = search or SearchConfig()
    if not isinstance(doc, dict):
        raise QueryValidationError("$", "query document must be an object")
    version = doc.get("version", QUERY_SCHEMA_VERSION)
    if version != QUERY_SCHEMA_VERSION:
        raise QueryValidationError("version", f"unsupported query schema version {version}")

    raw_components = doc.get("components")
    if not isinstance(raw_components, list) or not raw_components:
        raise QueryValidationError("components", "need a non-empty list")
    components = []
    for i, raw in enumerate(raw_components):
        path = f"components[{i}]"
        if not isinstance(raw, dict):
            raise QueryValidationError(path, "component must be an object")
        roi_raw = raw.get("roi")
        if not isinstance(roi_raw, dict):
            raise QueryValidationError(f"{path}.roi", "need an object with x, y, w, h")
        try:
            roi = Roi(**{k: float(roi_raw[k]) for k in ("x", "y", "w", "h")})
        except KeyError as exc:
            raise QueryValidationError(f"{path}.roi", f"missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            raise QueryValidationError(f"{path}.roi", str(exc)) from None
        constraints = raw.get("constraints")
        if not isinstance(constraints, dict) or not constraints:
            raise QueryValidationError(f"{path}.constraints", "need at least one constraint")
        for feature, spec in constraints.items():
            if feature not in trees.FEATURES:
                raise QueryValidationError(
                    f"{path}.constraints.{feature}", "unknown feature"
                )
            if not isinstance(spec, dict):
                raise QueryValidationError(
                    f"{path}.constraints.{feature}", "constraint must be an object"
                )
            constraint_target(feature, spec, f"{path}.constraints.{feature}")
        components.append(ActionComponent(roi=roi, constraints=dict(constraints)))

    weights = search.weights
    if "weights" in doc:
        raw_w = doc["weights"]
        if not isinstance(raw_w, dict):
            raise QueryValidationError("weights", "must be an object")
        unknown = set(raw_w) - _WEIGHT_KEYS
        if unknown:
            raise QueryValidationError("weights", f"unknown keys: {sorted(unknown)}")
        try:
            weights = replace(weights, **{k: float(v) for k, v in raw_w.items()})
        except (TypeError, ValueError) as exc:
            raise QueryValidationError("weights", str(exc)) from None

    def number(key, default, lo=None):
        value = doc.get(key, default)
        if not isinstance(value, (int, float)):
            raise QueryValidationError(key, "must be a number")
        if lo is not None and value < lo:
            raise QueryValidationError(key, f"must be >= {lo}")
        return float(value)

    frame_size = None
    if "frame_size" in doc:
        fs = doc["frame_size"]
        if (not isinstance(fs, dict)) or not all(
            isinstance(fs.get(k), int) and fs[k] > 0 for k in ("w", "h")
        ):
            raise QueryValidationError("frame_size", "need positive integer w and h")
        frame_size = (fs["w"], fs["h"])

    return Query(
        components=tuple(components),
        weights=weights,
        threshold=number("threshold", search.score_threshold, lo=1e-12),
        time_scale=number("lambda", search.time_scale, lo=0.0),
        horizon=int(number("horizon", search.horizon, lo=1)),
        greedy_min_log_value=(
            number("greedy_min_log_value", search.greedy_min_log_value)
            if "greedy_min_log_value" in doc else search.greedy_min_log_value
        ),
        frame_size=frame_size,
    )


def query_to_dict(query: Query) -> dict:
    doc = {
        "version": QUERY_SCHEMA_VERSION,
        "components": [
            {
                "roi": {"x": c.roi.x, "y": c.roi.y, "w": c.roi.w, "h": c.roi.h},
                "constraints": c.constraints,
            }
            for c in query.components
        ],
        "weights": {
            "match": query.weights.match,
            "continuation": query.weights.continuation,
            "unmatched_document": query.weights.unmatched_document,
            "skipped_component": query.weights.skipped_component,
            "same_track_bonus": query.weights.same_track_bonus,
        },
        "threshold": query.threshold,
        "lambda": query.time_scale,
        "horizon": query.horizon,
    }
    if query.greedy_min_log_value is not None:
        doc["greedy_min_log_value"] = query.greedy_min_log_value
    if query.frame_size is not None:
        doc["frame_size"] = {"w": query.frame_size[0], "h": query.frame_size[1]}
    return doc
