import numpy as np
import pytest

from _oracles import gaussian_collision_probability
from vidsieve import trees
from vidsieve.config import IndexConfig
from vidsieve.grid import AtomCoord, plan_grid
from vidsieve.lsh import (
    ArchiveIndex,
    IndexFormatError,
    StableHashFunction,
    collision_probability,
    hash_tree,
)
from vidsieve.trees import FeatureTree


def activity_tree(leaves, u=0, v=0, t=0, depth=2):
    """Valid activity tree from depth*depth leaf values."""
    atoms = np.asarray(leaves, dtype=float).reshape(depth, depth, 1)
    levels = trees.pyramid_levels(trees.ACTIVITY, atoms, depth)
    nodes = [
        levels[l][r, c]
        for l in range(1, depth + 1)
        for r in range(l)
        for c in range(l)
    ]
    return FeatureTree(
        feature=trees.ACTIVITY,
        depth=depth,
        nodes=np.asarray(nodes),
        anchor=AtomCoord(u=u, v=v, t=t),
    )


def make_archive(seed=7, tables=8, feature_set="cctv", depth=3):
    geometry = plan_grid(128, 128, 16, 30, depth)
    return ArchiveIndex(geometry, feature_set, IndexConfig(tables=tables, seed=seed))


class TestHashFunction:
    def test_identical_trees_identical_buckets(self):
        rng = np.random.default_rng(0)
        fn = StableHashFunction.draw(5, 0.5, rng)
        tree = activity_tree([0.1, 0.4, 0.2, 0.9])
        assert hash_tree(fn, tree) == hash_tree(fn, tree)

    def test_basis_vector_floor(self):
        fn = StableHashFunction(projection=np.array([1.0, 0.0, 0.0, 0.0, 0.0]),
                                offset=0.0, width=1.0)
        # the first flattened coordinate is the root; all-equal leaves put
        # 0.925 there, and scaling the projection is the identity on it
        tree = activity_tree([0.925, 0.925, 0.925, 0.925])
        fn4 = StableHashFunction(projection=np.array([4.0, 0.0, 0.0, 0.0, 0.0]),
                                 offset=0.0, width=1.0)
        assert hash_tree(fn4, tree) == 3  # floor(4 * 0.925) = floor(3.7)

    def test_dimension_mismatch(self):
        fn = StableHashFunction(projection=np.zeros(4), offset=0.0, width=1.0)
        with pytest.raises(ValueError):
            fn.bucket(np.zeros(5))

    def test_bucket_many_matches_scalar(self):
        rng = np.random.default_rng(1)
        fn = StableHashFunction.draw(8, 0.7, rng)
        mat = rng.standard_normal((20, 8))
        many = fn.bucket_many(mat)
        assert list(many) == [fn.bucket(row) for row in mat]

    def test_collision_rate_matches_analytic_probability(self):
        rng = np.random.default_rng(2)
        dim, width, n_fns = 12, 1.0, 4000
        base = rng.standard_normal(dim)
        a = rng.standard_normal((n_fns, dim))
        b = rng.uniform(0, width, size=n_fns)
        for ratio in (0.5, 1.0, 2.0):
            direction = rng.standard_normal(dim)
            other = base + (width * ratio) * direction / np.linalg.norm(direction)
            h1 = np.floor((a @ base + b) / width)
            h2 = np.floor((a @ other + b) / width)
            empirical = float((h1 == h2).mean())
            analytic = gaussian_collision_probability(width * ratio, width)
            assert abs(empirical - analytic) < 0.03
            assert analytic == pytest.approx(
                collision_probability(width * ratio, width), rel=1e-9
            )


class TestInsertLookup:
    def test_insert_then_lookup_retrieves_document(self):
        archive = make_archive()
        tree = activity_tree([0.5, 0.2, 0.8, 0.4, 0.1, 0.9, 0.3, 0.7, 0.6],
                             u=2, v=3, t=17, depth=3)
        archive.indices[trees.ACTIVITY].insert(tree)
        hits = archive.lookup(trees.ACTIVITY, tree.hash_vector(), (2, 3))
        assert 17 in hits

    def test_identical_content_two_documents(self):
        archive = make_archive()
        nodes = np.linspace(0.1, 0.9, 9)
        t1 = activity_tree(nodes, u=1, v=1, t=4, depth=3)
        t2 = activity_tree(nodes, u=1, v=1, t=9, depth=3)
        index = archive.indices[trees.ACTIVITY]
        index.insert(t1)
        index.insert(t2)
        hits = index.lookup(t1, (1, 1))
        assert hits >= {4, 9}

    def test_lookup_other_position_is_empty(self):
        archive = make_archive()
        nodes = np.linspace(0.1, 0.9, 9)
        index = archive.indices[trees.ACTIVITY]
        index.insert(activity_tree(nodes, u=1, v=1, t=4, depth=3))
        assert index.lookup(activity_tree(nodes, u=1, v=1, t=4, depth=3), (5, 5)) == set()

    def test_lookup_empty_index(self):
        archive = make_archive()
        assert archive.lookup(trees.ACTIVITY, np.zeros(14), (0, 0)) == set()

    def test_insertion_is_idempotent(self):
        archive = make_archive()
        tree = activity_tree(np.linspace(0, 1, 9), u=0, v=0, t=3, depth=3)
        index = archive.indices[trees.ACTIVITY]
        index.insert(tree)
        before = index.total_entries()
        index.insert(tree)
        assert index.total_entries() == before

    def test_lookup_probes_exactly_n_buckets(self):
        archive = make_archive(tables=8)
        index = archive.indices[trees.ACTIVITY]
        for t in range(50):
            index.insert(activity_tree(np.random.default_rng(t).uniform(0, 1, 9),
                                       u=0, v=0, t=t, depth=3))
        index.probe_count = 0
        index.lookup(np.zeros(14), (0, 0))
        assert index.probe_count == 8

    def test_random_insertions_all_retrievable(self):
        rng = np.random.default_rng(5)
        archive = make_archive()
        index = archive.indices[trees.ACTIVITY]
        inserted = []
        for t in range(1000):
            nodes = rng.uniform(0, 1, 9)
            u, v = int(rng.integers(0, 6)), int(rng.integers(0, 6))
            tree = activity_tree(nodes, u=u, v=v, t=t, depth=3)
            index.insert(tree)
            inserted.append((tree, (u, v), t))
        assert index.total_entries() <= 8 * 1000
        for tree, coord, t in inserted:
            assert t in index.lookup(tree, coord)

    def test_near_tree_retrieved_with_high_probability(self):
        rng = np.random.default_rng(6)
        archive = make_archive(tables=8)
        index = archive.indices[trees.ACTIVITY]
        width = index.width
        hits = 0
        trials = 200
        for t in range(trials):
            tree = activity_tree(rng.uniform(0.2, 0.8, 9), u=0, v=0, t=t, depth=3)
            index.insert(tree)
            direction = rng.standard_normal(14)
            probe = tree.hash_vector() + (width / 4) * direction / np.linalg.norm(direction)
            found = index.lookup(probe, (0, 0))
            hits += t in found
        assert hits / trials >= 0.95

    def test_insertion_order_does_not_change_lookups(self):
        rng = np.random.default_rng(8)
        entries = [
            (rng.uniform(0, 1, 9), int(rng.integers(0, 4)), int(rng.integers(0, 4)), t)
            for t in range(60)
        ]
        a1 = make_archive()
        for nodes, u, v, t in entries:
            a1.indices[trees.ACTIVITY].insert(activity_tree(nodes, u=u, v=v, t=t, depth=3))
        a2 = make_archive()
        for nodes, u, v, t in reversed(entries):
            a2.indices[trees.ACTIVITY].insert(activity_tree(nodes, u=u, v=v, t=t, depth=3))
        for nodes, u, v, t in entries:
            vec = activity_tree(nodes, u=u, v=v, t=t, depth=3).hash_vector()
            assert a1.lookup(trees.ACTIVITY, vec, (u, v)) == a2.lookup(trees.ACTIVITY, vec, (u, v))

    def test_collision_rate_monotone_in_distance(self):
        rng = np.random.default_rng(9)
        dim, width = 14, 1.0
        a = rng.standard_normal((3000, dim))
        b = rng.uniform(0, width, size=3000)
        base = rng.uniform(0, 1, dim)
        rates = []
        for mult in (0.0, 0.5, 1.0, 2.0, 4.0):
            direction = rng.standard_normal(dim)
            other = base + width * mult * direction / np.linalg.norm(direction)
            h1 = np.floor((a @ base + b) / width)
            h2 = np.floor((a @ other + b) / width)
            rates.append(float((h1 == h2).mean()))
        assert all(r1 >= r2 - 0.02 for r1, r2 in zip(rates, rates[1:]))
        assert rates[0] == 1.0


class TestSerialization:
    def fill(self, archive, n=200):
        rng = np.random.default_rng(10)
        for t in range(n):
            atoms = rng.uniform(0, 1, size=(8, 8, 1)) * (rng.random((8, 8, 1)) < 0.3)
            archive.insert_cctv_document(t, {
                trees.ACTIVITY: atoms,
                trees.SIZE: rng.uniform(0, 50, size=(8, 8, 1)),
                trees.COLOR: rng.uniform(0, 20, size=(8, 8, 16)),
                trees.PERSISTENCE: rng.uniform(0, 90, size=(8, 8, 1)),
                trees.MOTION: rng.uniform(0, 30, size=(8, 8, 9)),
            })

    def test_round_trip_identity(self):
        archive = make_archive()
        self.fill(archive)
        blob = archive.save()
        loaded = ArchiveIndex.load(blob)
        assert loaded.save() == blob
        assert loaded.total_entries() == archive.total_entries()
        assert loaded.seed == archive.seed
        assert loaded.feature_set == archive.feature_set
        for f, ix in archive.indices.items():
            for ta, tb in zip(ix.tables, loaded.indices[f].tables):
                assert np.array_equal(ta.function.projection, tb.function.projection)
                assert ta.buckets == tb.buckets

    def test_empty_index_is_header_only(self):
        archive = make_archive()
        blob = archive.save()
        loaded = ArchiveIndex.load(blob)
        assert loaded.total_entries() == 0
        # no buckets: the payload is just headers and hash functions
        n_projection_bytes = sum(
            8 * (ix.tables[0].function.projection.size + 1) * len(ix.tables)
            for ix in archive.indices.values()
        )
        assert len(blob) < 200 + 18 * 5 + n_projection_bytes + 4 * 5 * 8

    def test_bad_magic_rejected(self):
        archive = make_archive()
        blob = bytearray(archive.save())
        blob[:4] = b"NOPE"
        with pytest.raises(IndexFormatError, match="magic"):
            ArchiveIndex.load(bytes(blob))

    def test_truncation_rejected(self):
        archive = make_archive()
        self.fill(archive, n=20)
        blob = archive.save()
        with pytest.raises(IndexFormatError, match="truncated"):
            ArchiveIndex.load(blob[: len(blob) // 2])

    def test_version_mismatch_rejected(self):
        import struct

        archive = make_archive()
        blob = bytearray(archive.save())
        blob[4:6] = struct.pack("<H", 99)
        with pytest.raises(IndexFormatError, match="version"):
            ArchiveIndex.load(bytes(blob))

    def test_airborne_entries_round_trip(self):
        geometry = plan_grid(128, 128, 16, 15, 1)
        archive = ArchiveIndex(geometry, "airborne", IndexConfig(tables=4, seed=3))
        tree = FeatureTree(
            feature=trees.DISPLACEMENT, depth=1, nodes=np.array([[3.0, -0.5]]),
            anchor=AtomCoord(u=2, v=5, t=7), track_id=42,
        )
        archive.insert_airborne_document(7, [tree])
        loaded = ArchiveIndex.load(archive.save())
        hits = loaded.lookup(trees.DISPLACEMENT, tree.hash_vector(), (2, 5))
        assert (7, 42) in hits

    def test_storage_holds_ids_not_features(self):
        archive = make_archive()
        self.fill(archive, n=50)
        for ix in archive.indices.values():
            for table in ix.tables:
                for entries in table.buckets.values():
                    for entry in entries:
                        assert isinstance(entry, int)  # document ids only
