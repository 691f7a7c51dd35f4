"""Per-atom feature vectors and their pyramidal aggregation into trees.

Six feature kinds are supported. For every anchor position a depth-k tree is
built over the k x k atom block at that anchor; level l of the tree holds
l x l nodes and node (r, c) of level l summarizes the (k-l+1) x (k-l+1) atom
sub-block at offset (r, c). Non-leaf values are produced by a per-feature
combination rule applied to the four child nodes one level down.

Node order inside a tree is fixed: root first, then level by level, row-major
within a level. Flattening for hashing follows that order, with histogram
features L1-normalized per node first.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import AtomCoord, GridGeometry, nodes_per_tree

ACTIVITY = "activity"
SIZE = "size"
COLOR = "color"
PERSISTENCE = "persistence"
MOTION = "motion"
DISPLACEMENT = "displacement"

FEATURES = (ACTIVITY, SIZE, COLOR, PERSISTENCE, MOTION, DISPLACEMENT)
CCTV_FEATURES = (ACTIVITY, SIZE, COLOR, PERSISTENCE, MOTION)
AIRBORNE_FEATURES = (DISPLACEMENT,)

FEATURE_DIM = {
    ACTIVITY: 1,
    SIZE: 1,
    COLOR: 16,  # 8 hue + 4 saturation + 4 luminance counts
    PERSISTENCE: 1,
    MOTION: 9,  # 8 direction sectors + 1 idle bin
    DISPLACEMENT: 2,  # (dx, dy) pixels per frame
}

# Features whose values are unnormalized histograms; they are summed during
# aggregation and only L1-normalized per node at hash time.
HISTOGRAM_FEATURES = frozenset({COLOR, MOTION})

# Motion direction bins 0..7: E, NE, N, NW, W, SW, S, SE (north = image up);
# bin 8 counts flow samples below the idle magnitude threshold.
MOTION_DIRECTIONS = ("E", "NE", "N", "NW", "W", "SW", "S", "SE")
MOTION_IDLE_BIN = 8


@dataclass(frozen=True)
class FeatureVector:
    """One atom's value for a single feature kind.

    ``track_id`` is only meaningful for displacement vectors, where it ties
    the measurement back to the tracklet that produced it.
    """

    feature: str
    value: np.ndarray
    track_id: int | None = None

    def __post_init__(self):
        if self.feature not in FEATURE_DIM:
            raise ValueError(f"unknown feature {self.feature!r}")
        arr = np.asarray(self.value, dtype=np.float64).reshape(-1)
        if arr.shape[0] != FEATURE_DIM[self.feature]:
            raise ValueError(
                f"{self.feature} vector must have {FEATURE_DIM[self.feature]} "
                f"components, got {arr.shape[0]}"
            )
        if self.feature == ACTIVITY and not (0.0 <= arr[0] <= 1.0):
            raise ValueError(f"activity must lie in [0, 1], got {arr[0]}")
        if self.feature in (SIZE, PERSISTENCE, COLOR, MOTION) and np.any(arr < 0):
            raise ValueError(f"{self.feature} values must be non-negative")
        object.__setattr__(self, "value", arr)

    @property
    def scalar(self) -> float:
        return float(self.value[0])


def _median_of_nonzero(stacked: np.ndarray) -> np.ndarray:
    """Blob-size rule: median over the non-zero children, 0 when all are zero.

    ``stacked`` has the four children along axis 0; values are >= 0 so an
    ascending sort pushes zeros to the front.
    """
    s = np.sort(stacked, axis=0)
    nz = np.count_nonzero(stacked, axis=0)
    return np.select(
        [nz == 0, nz == 1, nz == 2, nz == 3],
        [np.zeros_like(s[0]), s[3], (s[2] + s[3]) / 2.0, s[2]],
        default=(s[1] + s[2]) / 2.0,
    )


def _combine4(feature: str, a, b, c, d) -> np.ndarray:
    stacked = np.stack([a, b, c, d], axis=0)
    if feature == ACTIVITY or feature == DISPLACEMENT:
        return stacked.mean(axis=0)
    if feature == SIZE:
        return _median_of_nonzero(stacked)
    if feature == PERSISTENCE:
        return stacked.max(axis=0)
    if feature in HISTOGRAM_FEATURES:
        return stacked.sum(axis=0)
    raise ValueError(f"unknown feature {feature!r}")


def aggregate(feature: str, children: list[FeatureVector]) -> FeatureVector:
    """Combine four child vectors into their parent node value.

    Rules: activity takes the mean, blob size the median of the non-zero
    children (0 if all four are zero), color and motion the bin-wise sum,
    persistence the maximum, displacement the mean vector.
    """
    if len(children) != 4:
        raise ValueError(f"a parent node has exactly 4 children, got {len(children)}")
    tags = {ch.feature for ch in children}
    if tags != {feature}:
        raise ValueError(f"mixed feature tags {sorted(tags)} for {feature!r} aggregation")
    vals = [ch.value for ch in children]
    return FeatureVector(feature, _combine4(feature, *vals))


@dataclass
class FeatureTree:
    """Pyramidal aggregate over a k x k atom block.

    ``nodes`` holds the M = sum(l*l) node vectors in canonical order (root
    first, level by level, row-major within a level). ``anchor`` is the
    coordinate of the top-left leaf atom.
    """

    feature: str
    depth: int
    nodes: np.ndarray  # (M, dim)
    anchor: AtomCoord
    track_id: int | None = field(default=None)

    def __post_init__(self):
        m = nodes_per_tree(self.depth)
        self.nodes = np.asarray(self.nodes, dtype=np.float64)
        if self.nodes.shape != (m, FEATURE_DIM[self.feature]):
            raise ValueError(
                f"depth-{self.depth} {self.feature} tree needs node array "
                f"{(m, FEATURE_DIM[self.feature])}, got {self.nodes.shape}"
            )

    def node(self, level: int, row: int, col: int) -> np.ndarray:
        """Node value at 1-based level ``level``, offset (row, col)."""
        if not (1 <= level <= self.depth and 0 <= row < level and 0 <= col < level):
            raise IndexError(f"no node ({level}, {row}, {col}) in depth-{self.depth} tree")
        base = nodes_per_tree(level - 1)
        return self.nodes[base + row * level + col]

    @property
    def root(self) -> np.ndarray:
        return self.nodes[0]

    def leaves(self) -> np.ndarray:
        """Leaf values as a (depth, depth, dim) grid."""
        k = self.depth
        return self.nodes[nodes_per_tree(k - 1):].reshape(k, k, FEATURE_DIM[self.feature])

    def hash_vector(self) -> np.ndarray:
        """Flatten for hashing, canonical node order.

        Histogram nodes are quantized to their dominant bins with empty
        nodes inheriting the root's class (see ``anchor_hash_matrix``);
        other features flatten raw values. Non-leaf values are recomputed
        from the leaves, which the aggregation invariant makes exact.
        """
        return anchor_hash_matrix(self.feature, self.leaves(), self.depth)[0, 0]


def normalize_nodes(feature: str, nodes: np.ndarray) -> np.ndarray:
    """Per-node L1 normalization for histogram features; identity otherwise.

    All-zero histogram nodes stay zero so that empty content never aliases
    any particular distribution.
    """
    if feature not in HISTOGRAM_FEATURES:
        return nodes
    totals = nodes.sum(axis=-1, keepdims=True)
    return np.divide(nodes, totals, out=np.zeros_like(nodes), where=totals > 0)


# A node's direction distribution enters the hash only when at least this
# fraction of its flow samples moved; below it, stray flow would otherwise be
# amplified into a full-strength direction vector.
MOTION_DIRECTION_SHARE_FLOOR = 0.02


def _one_hot_argmax(block: np.ndarray) -> np.ndarray:
    out = np.zeros_like(block)
    idx = block.argmax(axis=-1)
    np.put_along_axis(out, idx[..., None], 1.0, axis=-1)
    return out


def _quantize_grid(feature: str, grid: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Dominant-bin one-hot encoding of one pyramid level.

    Motion keeps its 9 components with the idle coordinate always zero and
    quantizes the dominant direction; color quantizes each HSL marginal to
    its dominant bin at weight 1/3. Returns (quantized grid, empty mask);
    a node is empty when it has no usable mass.

    Raw normalized histograms put equivalent content a sizable fraction of a
    bucket width apart, and the union over tables and ROI anchors turns that
    into constant false matches; quantized classes collide exactly instead.
    """
    if feature == MOTION:
        dirs = grid[..., :8]
        mass = dirs.sum(axis=-1)
        total = grid.sum(axis=-1)
        with np.errstate(invalid="ignore", divide="ignore"):
            share = np.where(total > 0, mass / np.where(total > 0, total, 1.0), 0.0)
        empty = (mass <= 0) | (share < MOTION_DIRECTION_SHARE_FLOOR)
        quantized = np.zeros_like(grid)
        quantized[..., :8] = _one_hot_argmax(dirs)
        quantized[empty] = 0.0
        return quantized, empty
    if feature == COLOR:
        empty = grid.sum(axis=-1) <= 0
        quantized = np.concatenate(
            [
                _one_hot_argmax(grid[..., :8]) / 3.0,
                _one_hot_argmax(grid[..., 8:12]) / 3.0,
                _one_hot_argmax(grid[..., 12:16]) / 3.0,
            ],
            axis=-1,
        )
        quantized[empty] = 0.0
        return quantized, empty
    raise ValueError(f"{feature!r} is not a histogram feature")


def pyramid_levels(feature: str, atoms: np.ndarray, depth: int) -> list[np.ndarray]:
    """Aggregation pyramid over a whole atom grid, shared by every anchor.

    ``atoms`` is (V, U, dim). Returns ``levels[l]`` for l = 1..depth (index 0
    unused) where ``levels[l][v, u]`` is the level-l node value whose subtree
    starts at atom (u, v); ``levels[depth]`` is the atom grid itself.
    """
    atoms = np.asarray(atoms, dtype=np.float64)
    if atoms.ndim != 3 or atoms.shape[2] != FEATURE_DIM[feature]:
        raise ValueError(f"atom grid must be (V, U, {FEATURE_DIM[feature]}), got {atoms.shape}")
    v, u = atoms.shape[:2]
    if v < depth or u < depth:
        raise ValueError(f"{v}x{u} atom grid too small for depth {depth}")
    levels: list[np.ndarray] = [None] * (depth + 1)  # type: ignore[list-item]
    levels[depth] = atoms
    for l in range(depth - 1, 0, -1):
        child = levels[l + 1]
        levels[l] = _combine4(
            feature, child[:-1, :-1], child[:-1, 1:], child[1:, :-1], child[1:, 1:]
        )
    return levels


def anchor_hash_matrix(feature: str, atoms: np.ndarray, depth: int) -> np.ndarray:
    """Hash vectors for every anchor at once.

    Returns (V-k+1, U-k+1, M*dim): row ``[v0, u0]`` is the flattened tree
    anchored at atom (u0, v0), ready for hashing. Histogram features are
    quantized per node to their dominant bins, and nodes without content
    inherit the root's class so that the vector reflects what moved in the
    block, not which exact leaves it crossed. Equivalent to building each
    FeatureTree and calling ``hash_vector``, in a handful of numpy passes.
    """
    levels = pyramid_levels(feature, atoms, depth)
    vr = atoms.shape[0] - depth + 1
    ur = atoms.shape[1] - depth + 1
    parts = []
    if feature in HISTOGRAM_FEATURES:
        quantized = {l: _quantize_grid(feature, levels[l]) for l in range(1, depth + 1)}
        root, _ = quantized[1]
        for l in range(1, depth + 1):
            grid, empty = quantized[l]
            for r in range(l):
                for c in range(l):
                    node = grid[r:r + vr, c:c + ur]
                    hole = empty[r:r + vr, c:c + ur]
                    parts.append(np.where(hole[..., None], root, node))
    else:
        for l in range(1, depth + 1):
            grid = levels[l]
            for r in range(l):
                for c in range(l):
                    parts.append(grid[r:r + vr, c:c + ur])
    return np.concatenate(parts, axis=2)


def tree_dim(feature: str, depth: int) -> int:
    """Length of a flattened depth-k tree for this feature."""
    return nodes_per_tree(depth) * FEATURE_DIM[feature]


def build_trees(atom_features, geometry: GridGeometry, document: int = 0) -> list[FeatureTree]:
    """Build all partially overlapping trees over one document's atom grid.

    ``atom_features`` is a V x U nested sequence of FeatureVector, all
    carrying the same tag. Returns (U-k+1)(V-k+1) trees in row-major anchor
    order.
    """
    rows = list(atom_features)
    v, u = len(rows), len(rows[0])
    if v != geometry.atoms_per_col or u != geometry.atoms_per_row:
        raise ValueError(
            f"atom grid {v}x{u} does not match geometry "
            f"{geometry.atoms_per_col}x{geometry.atoms_per_row}"
        )
    tags = {fv.feature for row in rows for fv in row}
    if len(tags) != 1:
        raise ValueError(f"mixed feature tags in atom grid: {sorted(tags)}")
    feature = tags.pop()
    atoms = np.asarray([[fv.value for fv in row] for row in rows], dtype=np.float64)

    k = geometry.tree_depth
    levels = pyramid_levels(feature, atoms, k)
    trees = []
    for v0 in range(geometry.anchor_rows):
        for u0 in range(geometry.anchor_cols):
            nodes = [
                levels[l][v0 + r, u0 + c]
                for l in range(1, k + 1)
                for r in range(l)
                for c in range(l)
            ]
            trees.append(
                FeatureTree(
                    feature=feature,
                    depth=k,
                    nodes=np.asarray(nodes),
                    anchor=AtomCoord(u=u0, v=v0, t=document),
                )
            )
    return trees
