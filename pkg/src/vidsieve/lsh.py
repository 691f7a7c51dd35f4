"""Per-feature inverted index backed by p-stable locality-sensitive hashing.

Each feature owns ``n`` hash tables. A table hashes a flattened feature tree
through a random affine projection, ``floor((a . x + b) / r)``, whose
Gaussian components make the collision probability a decreasing function of
Euclidean distance. Buckets are keyed by (hash code, tile column, tile row)
and store only compact document references, never feature content, so the
archive stays orders of magnitude smaller than the video.

All randomness derives from one recorded seed, so rebuilding an index from
the same video and seed is byte-identical.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field

import numpy as np

from . import trees
from .config import IndexConfig
from .grid import GridGeometry
from .trees import FEATURES, tree_dim

_MASK64 = (1 << 64) - 1


class IndexFormatError(Exception):
    """Raised for malformed, truncated or mismatched index files."""


def _mix_key(bucket: int, u: int, v: int) -> int:
    """64-bit bucket key combining the hash code with the tile position."""
    x = (bucket & _MASK64) * 0x9E3779B97F4A7C15
    x = (x + u * 0xBF58476D1CE4E5B9 + v * 0x94D049BB133111EB) & _MASK64
    x ^= x >> 30
    x = (x * 0xD6E8FEB86659FD93) & _MASK64
    x ^= x >> 27
    return x


def _mix_keys(buckets: np.ndarray, us: np.ndarray, vs: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        x = buckets.astype(np.uint64) * np.uint64(0x9E3779B97F4A7C15)
        x = x + us.astype(np.uint64) * np.uint64(0xBF58476D1CE4E5B9)
        x = x + vs.astype(np.uint64) * np.uint64(0x94D049BB133111EB)
        x ^= x >> np.uint64(30)
        x *= np.uint64(0xD6E8FEB86659FD93)
        x ^= x >> np.uint64(27)
    return x


@dataclass(frozen=True)
class StableHashFunction:
    """Frozen random affine projection ``floor((a . x + b) / r)``."""

    projection: np.ndarray  # (dim,) standard-normal components
    offset: float  # uniform in [0, width)
    width: float

    @classmethod
    def draw(cls, dim: int, width: float, rng: np.random.Generator) -> "StableHashFunction":
        return cls(
            projection=rng.standard_normal(dim),
            offset=float(rng.uniform(0.0, width)),
            width=width,
        )

    def bucket(self, vector: np.ndarray) -> int:
        vector = np.asarray(vector, dtype=np.float64).reshape(-1)
        if vector.shape[0] != self.projection.shape[0]:
            raise ValueError(
                f"vector has {vector.shape[0]} components, "
                f"hash expects {self.projection.shape[0]}"
            )
        return int(np.floor((self.projection @ vector + self.offset) / self.width))

    def bucket_many(self, matrix: np.ndarray) -> np.ndarray:
        if matrix.shape[-1] != self.projection.shape[0]:
            raise ValueError(
                f"vectors have {matrix.shape[-1]} components, "
                f"hash expects {self.projection.shape[0]}"
            )
        return np.floor((matrix @ self.projection + self.offset) / self.width).astype(np.int64)


def hash_tree(fn: StableHashFunction, tree: trees.FeatureTree) -> int:
    """Bucket id for a feature tree (canonical flattening, histogram nodes
    L1-normalized per node)."""
    return fn.bucket(tree.hash_vector())


def collision_probability(distance: float, width: float) -> float:
    """Analytic single-table collision probability for Gaussian projections.

    For two vectors at Euclidean distance ``c`` and bucket width ``r``:
    ``2 * Phi(r/c) - 1 - (2c / (sqrt(2 pi) r)) * (1 - exp(-r^2 / 2c^2))``,
    approaching 1 as the distance goes to 0.
    """
    from scipy.stats import norm

    if distance <= 0:
        return 1.0
    ratio = width / distance
    return float(
        2.0 * norm.cdf(ratio) - 1.0
        - (2.0 / (np.sqrt(2.0 * np.pi) * ratio)) * (1.0 - np.exp(-(ratio ** 2) / 2.0))
    )


@dataclass
class HashTable:
    """One hash function plus its buckets of document references."""

    function: StableHashFunction
    buckets: dict[int, set] = field(default_factory=dict)

    def insert(self, key: int, entry) -> None:
        self.buckets.setdefault(key, set()).add(entry)

    def get(self, key: int) -> set:
        return self.buckets.get(key, set())


@dataclass
class LshIndex:
    """All hash tables for one feature."""

    feature: str
    tables: list[HashTable]
    probe_count: int = 0

    @property
    def width(self) -> float:
        return self.tables[0].function.width

    def insert(self, tree: trees.FeatureTree, track_id: int | None = None) -> None:
        """File one tree under its anchor. Idempotent per (document, tile,
        bucket): re-inserting identical content adds nothing."""
        vec = tree.hash_vector()
        coord = tree.anchor
        entry = coord.t if track_id is None else (coord.t, track_id)
        for table in self.tables:
            key = _mix_key(table.function.bucket(vec), coord.u, coord.v)
            table.insert(key, entry)

    def insert_vector(self, vector: np.ndarray, u: int, v: int, doc: int,
                      track_id: int | None = None) -> None:
        entry = doc if track_id is None else (doc, track_id)
        for table in self.tables:
            key = _mix_key(table.function.bucket(vector), u, v)
            table.insert(key, entry)

    def lookup(self, tree_or_vector, coord: tuple[int, int]) -> set:
        """Union of the bucket contents at (hash(tree), u, v) over all
        tables. Touches exactly one bucket per table however large the
        archive is; ``probe_count`` records the buckets probed."""
        if isinstance(tree_or_vector, trees.FeatureTree):
            vec = tree_or_vector.hash_vector()
        else:
            vec = np.asarray(tree_or_vector, dtype=np.float64).reshape(-1)
        u, v = coord
        found: set = set()
        for table in self.tables:
            key = _mix_key(table.function.bucket(vec), u, v)
            found |= table.get(key)
            self.probe_count += 1
        return found

    def total_entries(self) -> int:
        return sum(len(s) for t in self.tables for s in t.buckets.values())


def _draw_tables(feature: str, dim: int, width: float, n: int, seed: int) -> list[HashTable]:
    feature_id = FEATURES.index(feature)
    tables = []
    for i in range(n):
        rng = np.random.default_rng(np.random.SeedSequence([seed, feature_id, i]))
        tables.append(HashTable(function=StableHashFunction.draw(dim, width, rng)))
    return tables


class ArchiveIndex:
    """The full per-feature index set for one archived video."""

    def __init__(self, geometry: GridGeometry, feature_set: str, config: IndexConfig):
        if feature_set not in ("cctv", "airborne"):
            raise ValueError(f"unknown feature set {feature_set!r}")
        self.geometry = geometry
        self.feature_set = feature_set
        self.config = config
        self.seed = config.seed
        features = trees.CCTV_FEATURES if feature_set == "cctv" else trees.AIRBORNE_FEATURES
        self.indices: dict[str, LshIndex] = {}
        for f in features:
            dim = tree_dim(f, geometry.tree_depth)
            self.indices[f] = LshIndex(
                feature=f,
                tables=_draw_tables(f, dim, config.bucket_widths[f], config.tables, config.seed),
            )

    @property
    def features(self) -> tuple[str, ...]:
        return tuple(self.indices)

    def insert_cctv_document(self, doc: int, atom_features: dict[str, np.ndarray]) -> int:
        """Hash and file every sufficiently active anchor of one document.

        The gate is the root of the activity tree: anchors whose block shows
        activity at or below the significance threshold are skipped for all
        features. Returns the number of anchors filed.
        """
        k = self.geometry.tree_depth
        act = trees.anchor_hash_matrix(trees.ACTIVITY, atom_features[trees.ACTIVITY], k)
        gate = act[:, :, 0] > self.config.significance_threshold
        vs, us = np.nonzero(gate)
        if len(vs) == 0:
            return 0
        for feature, index in self.indices.items():
            mat = (
                act if feature == trees.ACTIVITY
                else trees.anchor_hash_matrix(feature, atom_features[feature], k)
            )
            chosen = mat[vs, us]  # (n_anchors, dim)
            for table in index.tables:
                codes = table.function.bucket_many(chosen)
                keys = _mix_keys(codes, us, vs)
                for key in keys:
                    table.insert(int(key), doc)
        return len(vs)

    def insert_airborne_document(
        self, doc: int, point_trees: list[trees.FeatureTree]
    ) -> int:
        """File displacement trees for one document; every tree carries the
        track id of the tracklet that produced it."""
        index = self.indices[trees.DISPLACEMENT]
        for tree in point_trees:
            index.insert(tree, track_id=tree.track_id)
        return len(point_trees)

    def lookup(self, feature: str, vector: np.ndarray, coord: tuple[int, int]) -> set:
        if feature not in self.indices:
            raise KeyError(f"archive has no {feature!r} index")
        return self.indices[feature].lookup(vector, coord)

    def total_entries(self) -> int:
        return sum(ix.total_entries() for ix in self.indices.values())

    def reset_probe_counts(self) -> None:
        for ix in self.indices.values():
            ix.probe_count = 0

    def probe_counts(self) -> dict[str, int]:
        return {f: ix.probe_count for f, ix in self.indices.items()}

    # ---- serialization ----------------------------------------------------
    #
    # Index file, all little-endian:
    #   magic "SVIX", u16 version, u64 seed, u8 feature set, u16 tables,
    #   u32 frame_width/height/tile/frames_per_document/tree_depth,
    #   f64 significance threshold, u16 feature count, then per feature:
    #   u8 tag, u32 dim, f64 bucket width, u8 entry kind (0 doc, 1 doc+track),
    #   and per table: f64[dim] projection, f64 offset, u32 bucket count,
    #   then buckets sorted by key: u64 key, u32 entry count, sorted u32
    #   document ids (entry kind 1: u32 doc id + u32 track id pairs).

    MAGIC = b"SVIX"
    VERSION = 1

    def save(self) -> bytes:
        g = self.geometry
        out = io.BytesIO()
        out.write(self.MAGIC)
        out.write(struct.pack(
            "<HQBH5Id",
            self.VERSION,
            self.seed,
            0 if self.feature_set == "cctv" else 1,
            self.config.tables,
            g.frame_width, g.frame_height, g.tile_size,
            g.frames_per_document, g.tree_depth,
            self.config.significance_threshold,
        ))
        out.write(struct.pack("<H", len(self.indices)))
        tracked = self.feature_set == "airborne"
        for feature, index in self.indices.items():
            dim = tree_dim(feature, g.tree_depth)
            out.write(struct.pack(
                "<BIdB", FEATURES.index(feature), dim, index.width, int(tracked)
            ))
            for table in index.tables:
                out.write(table.function.projection.astype("<f8").tobytes())
                out.write(struct.pack("<d", table.function.offset))
                out.write(struct.pack("<I", len(table.buckets)))
                for key in sorted(table.buckets):
                    entries = sorted(table.buckets[key])
                    out.write(struct.pack("<QI", key, len(entries)))
                    if tracked:
                        flat = [x for pair in entries for x in pair]
                        out.write(struct.pack(f"<{len(flat)}I", *flat))
                    else:
                        out.write(struct.pack(f"<{len(entries)}I", *entries))
        return out.getvalue()

    def save_to(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.save())

    @classmethod
    def load(cls, blob: bytes) -> "ArchiveIndex":
        from .grid import plan_grid

        reader = _Reader(blob)
        if reader.read(4) != cls.MAGIC:
            raise IndexFormatError("not an index file (bad magic)")
        (version, seed, feature_set_id, n_tables,
         fw, fh, tile, fpd, depth, theta) = reader.unpack("<HQBH5Id")
        if version != cls.VERSION:
            raise IndexFormatError(f"unsupported index version {version}")
        geometry = plan_grid(fw, fh, tile, fpd, depth)
        feature_set = "cctv" if feature_set_id == 0 else "airborne"
        (n_features,) = reader.unpack("<H")

        config = IndexConfig(tables=n_tables, significance_threshold=theta, seed=seed)
        archive = cls.__new__(cls)
        archive.geometry = geometry
        archive.feature_set = feature_set
        archive.config = config
        archive.seed = seed
        archive.indices = {}
        for _ in range(n_features):
            tag_id, dim, width, tracked = reader.unpack("<BIdB")
            if tag_id >= len(FEATURES):
                raise IndexFormatError(f"unknown feature tag {tag_id}")
            feature = FEATURES[tag_id]
            if dim != tree_dim(feature, depth):
                raise IndexFormatError(
                    f"{feature} dimension {dim} does not match depth {depth}"
                )
            tables = []
            for _ in range(n_tables):
                projection = np.frombuffer(reader.read(8 * dim), dtype="<f8").copy()
                (offset,) = reader.unpack("<d")
                (n_buckets,) = reader.unpack("<I")
                fn = StableHashFunction(projection=projection, offset=offset, width=width)
                table = HashTable(function=fn)
                for _ in range(n_buckets):
                    key, n_entries = reader.unpack("<QI")
                    if tracked:
                        flat = reader.unpack(f"<{2 * n_entries}I")
                        table.buckets[key] = {
                            (flat[2 * i], flat[2 * i + 1]) for i in range(n_entries)
                        }
                    else:
                        table.buckets[key] = set(reader.unpack(f"<{n_entries}I"))
                tables.append(table)
            archive.indices[feature] = LshIndex(feature=feature, tables=tables)
        return archive

    @classmethod
    def load_from(cls, path) -> "ArchiveIndex":
        with open(path, "rb") as fh:
            return cls.load(fh.read())


class _Reader:
    def __init__(self, blob: bytes):
        self._blob = blob
        self._pos = 0

    def read(self, n: int) -> bytes:
        if self._pos + n > len(self._blob):
            raise IndexFormatError("truncated index file")
        chunk = self._blob[self._pos:self._pos + n]
        self._pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.read(struct.calcsize(fmt)))
