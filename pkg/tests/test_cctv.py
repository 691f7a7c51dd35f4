import numpy as np
import pytest

from _oracles import flood_fill_components, rgb_to_hsl_reference
from vidsieve import trees
from vidsieve.cctv import (
    BackgroundModel,
    CctvFeatureStream,
    connected_components,
    extract_atom_features,
    horn_schunck,
    hsl_bins,
    init_background,
    luma,
    motion_bins,
    subtract_background,
)
from vidsieve.config import CctvConfig
from vidsieve.grid import plan_grid


def flat_frames(value, n, h=8, w=8):
    return [np.full((h, w, 3), value, dtype=np.uint8) for _ in range(n)]


class TestBackground:
    def test_median_of_identical_frames(self):
        model = init_background(flat_frames(77, 20))
        assert np.all(model.background == 77.0)

    def test_median_of_three(self):
        frames = flat_frames(10, 1) + flat_frames(200, 1) + flat_frames(12, 1)
        model = init_background(frames)
        assert np.all(model.background == 12.0)

    def test_median_of_five_against_sorted_reference(self):
        values = [0, 0, 255, 255, 255]
        model = init_background([np.full((4, 4, 3), v, np.uint8) for v in values])
        assert np.all(model.background == sorted(values)[2])

    def test_empty_sequence_rejected(self):
        with pytest.raises(ValueError):
            init_background([])

    def test_identical_frame_is_inactive(self):
        model = init_background(flat_frames(100, 5))
        mask = subtract_background(model, flat_frames(100, 1)[0])
        assert not mask.any()

    def test_threshold_crossing_activates_exactly_one_pixel(self):
        model = init_background(flat_frames(100, 5))
        frame = flat_frames(100, 1)[0].copy()
        frame[3, 5] = 100 + 2 * 20  # twice the threshold
        mask = subtract_background(model, frame)
        assert mask[3, 5] == 1
        assert mask.sum() == 1

    def test_running_average_absorbs_slow_illumination_drift(self):
        # +1 gray level per frame never crosses the 20-level threshold
        model = init_background(flat_frames(50, 5), learning_rate=0.05)
        level = 50.0
        for _ in range(100):
            level += 1.0
            frame = np.full((8, 8, 3), round(level), dtype=np.uint8)
            mask = subtract_background(model, frame)
            assert not mask.any()

    def test_inactive_pixels_update_active_pixels_freeze(self):
        model = init_background(flat_frames(100, 5), learning_rate=0.5)
        frame = flat_frames(100, 1)[0].copy()
        frame[0, 0] = 250
        frame[4, 4] = 110
        subtract_background(model, frame)
        assert model.background[0, 0, 0] == 100.0  # active: frozen
        assert model.background[4, 4, 0] == pytest.approx(105.0)  # inactive: blended

    def test_dimension_mismatch(self):
        model = init_background(flat_frames(1, 3))
        with pytest.raises(ValueError):
            subtract_background(model, np.zeros((9, 9, 3), np.uint8))

    def test_learning_rate_validated(self):
        with pytest.raises(ValueError):
            BackgroundModel(np.zeros((2, 2, 3)), learning_rate=1.5, activity_threshold=20)


class TestConnectedComponents:
    def test_single_pixel(self):
        mask = np.zeros((5, 5), np.uint8)
        mask[2, 2] = 1
        blobs = connected_components(mask)
        assert len(blobs) == 1 and blobs[0].size == 1

    def test_diagonal_pixels_form_one_blob(self):
        mask = np.zeros((5, 5), np.uint8)
        mask[1, 1] = mask[2, 2] = 1
        blobs = connected_components(mask)
        assert len(blobs) == 1 and blobs[0].size == 2

    def test_random_mask_matches_flood_fill(self):
        rng = np.random.default_rng(9)
        mask = (rng.random((32, 32)) < 0.35).astype(np.uint8)
        blobs = connected_components(mask)
        oracle = flood_fill_components(mask)
        assert len(blobs) == len(oracle)
        for blob, comp in zip(blobs, oracle):
            assert {tuple(p) for p in blob.pixels} == comp
            assert blob.size == len(comp)


def textured_patch(rng, size):
    return rng.integers(60, 200, size=(size, size, 3), dtype=np.uint8)


class TestHornSchunck:
    def test_identical_frames_zero_flow(self):
        rng = np.random.default_rng(4)
        frame = luma(textured_patch(rng, 32))
        u, v = horn_schunck(frame, frame, 1.0, 50)
        assert np.allclose(u, 0.0) and np.allclose(v, 0.0)

    def test_translation_recovered(self):
        rng = np.random.default_rng(5)
        scene = np.full((40, 40), 100.0)
        patch = luma(textured_patch(rng, 16))
        a = scene.copy()
        a[12:28, 10:26] = patch
        b = scene.copy()
        b[12:28, 11:27] = patch  # one pixel right
        u, v = horn_schunck(a, b, 1.0, 400)
        interior_u = u[16:24, 14:22]
        interior_v = v[16:24, 14:22]
        assert 0.5 <= interior_u.mean() <= 1.5
        assert abs(interior_v.mean()) < 0.3

    def test_self_consistent_convergence(self):
        # texture everywhere so the data term pins the solution; flat regions
        # are governed by diffusion alone and converge far more slowly
        rng = np.random.default_rng(6)
        tex = rng.integers(40, 220, size=(30, 30)).astype(float)
        a = tex
        b = np.roll(tex, 1, axis=1)
        u500, v500 = horn_schunck(a, b, 1.0, 500)
        u1000, v1000 = horn_schunck(a, b, 1.0, 1000)
        assert np.abs(u500 - u1000).max() < 1e-3
        assert np.abs(v500 - v1000).max() < 1e-3

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            horn_schunck(np.zeros((4, 4)), np.zeros((5, 5)))

    def test_iterations_validated(self):
        with pytest.raises(ValueError):
            horn_schunck(np.zeros((4, 4)), np.zeros((4, 4)), iterations=0)


class TestColorQuantization:
    def test_pure_red_lands_in_first_hue_bin(self):
        hb, sb, lb = hsl_bins(np.array([[255, 0, 0]]))
        assert hb[0] == 0
        assert sb[0] == 3  # fully saturated
        assert lb[0] == 2  # mid luminance

    @pytest.mark.parametrize("rgb", [(255, 0, 0), (0, 255, 0), (0, 0, 255), (10, 200, 90)])
    def test_bins_agree_with_reference_conversion(self, rgb):
        hue, sat, lum = rgb_to_hsl_reference(*rgb)
        hb, sb, lb = hsl_bins(np.array([rgb]))
        assert hb[0] == min(int(hue / 45.0), 7)
        assert sb[0] == min(int(sat * 4.0), 3)
        assert lb[0] == min(int(lum * 4.0), 3)


class TestMotionBins:
    def test_idle_below_threshold(self):
        bins = motion_bins(np.full((2, 2), 0.2), np.zeros((2, 2)), 0.5)
        assert np.all(bins == trees.MOTION_IDLE_BIN)

    def test_cardinal_directions(self):
        # east, north (up = negative image y), west, south
        u = np.array([[2.0, 0.0, -2.0, 0.0]])
        v = np.array([[0.0, -2.0, 0.0, 2.0]])
        bins = motion_bins(u, v, 0.5)
        assert list(bins[0]) == [0, 2, 4, 6]

    def test_diagonal_sector_boundaries(self):
        # 30 degrees above east falls in the NE sector (22.5..67.5)
        bins = motion_bins(np.array([[np.cos(np.pi / 6)]]), np.array([[-np.sin(np.pi / 6)]]), 0.1)
        assert bins[0, 0] == 1


def document_products(frames, config, model=None):
    """Run the per-frame chain the way the stream does, returning the parts."""
    from vidsieve import kernels

    masks, labelings, persistences, flows = [], [], [], []
    if model is None:
        model = init_background([frames[0]], config.learning_rate, config.activity_threshold)
    acc = np.zeros(frames[0].shape[:2], dtype=np.int32)
    prev_gray = None
    for frame in frames:
        mask = subtract_background(model, frame)
        kernels.update_persistence(mask, acc)
        labels, count = kernels.label_components(mask)
        masks.append(mask)
        labelings.append((labels, count))
        persistences.append(acc.copy())
        gray = luma(frame)
        if prev_gray is not None:
            flows.append(horn_schunck(prev_gray, gray, config.flow_smoothness,
                                      config.flow_iterations))
        prev_gray = gray
    return masks, labelings, persistences, flows, model


class TestAtomFeatures:
    GEOM = plan_grid(64, 64, 16, 6, 2)
    CFG = CctvConfig(background_frames=1, flow_iterations=60)

    def test_static_document_yields_idle_features(self):
        frames = flat_frames(120, 6, 64, 64)
        masks, labelings, persistences, flows, _ = document_products(frames, self.CFG)
        feats = extract_atom_features(frames, masks, labelings, flows, persistences,
                                      self.GEOM, self.CFG)
        assert np.all(feats[trees.ACTIVITY] == 0)
        assert np.all(feats[trees.SIZE] == 0)
        assert np.all(feats[trees.COLOR] == 0)
        motion = feats[trees.MOTION]
        assert np.all(motion[..., :8] == 0)
        samples_per_atom = (len(frames) - 1) * 16 * 16
        assert np.all(motion[..., 8] == samples_per_atom)  # all mass idle

    def _moving_square_frames(self, color=(255, 40, 40), step=2):
        frames = []
        for i in range(6):
            f = np.full((64, 64, 3), 120, dtype=np.uint8)
            x = 16 + step * i
            f[18:30, x:x + 12] = color
            frames.append(f)
        return frames

    def test_red_square_fills_first_hue_bin(self):
        frames = self._moving_square_frames(color=(255, 0, 0))
        masks, labelings, persistences, flows, _ = document_products(frames, self.CFG)
        feats = extract_atom_features(frames, masks, labelings, flows, persistences,
                                      self.GEOM, self.CFG)
        color = feats[trees.COLOR].sum(axis=(0, 1))
        assert color[0] == color[:8].sum() > 0  # all hue mass in bin 0

    def test_color_conservation_per_marginal(self):
        frames = self._moving_square_frames()
        masks, labelings, persistences, flows, _ = document_products(frames, self.CFG)
        feats = extract_atom_features(frames, masks, labelings, flows, persistences,
                                      self.GEOM, self.CFG)
        active_samples = sum(int(m.sum()) for m in masks)
        color = feats[trees.COLOR].sum(axis=(0, 1))
        assert color[:8].sum() == active_samples
        assert color[8:12].sum() == active_samples
        assert color[12:].sum() == active_samples

    def test_motion_conservation_and_dominant_direction(self):
        frames = self._moving_square_frames(step=3)
        masks, labelings, persistences, flows, _ = document_products(frames, self.CFG)
        feats = extract_atom_features(frames, masks, labelings, flows, persistences,
                                      self.GEOM, self.CFG)
        motion = feats[trees.MOTION]
        samples_per_atom = (len(frames) - 1) * 16 * 16
        assert np.all(motion.sum(axis=2) == samples_per_atom)
        directional = motion.sum(axis=(0, 1))[:8]
        assert directional.argmax() == 0  # east

    def test_largest_blob_overlapping_tile(self):
        frames = self._moving_square_frames()
        masks, labelings, persistences, flows, _ = document_products(frames, self.CFG)
        feats = extract_atom_features(frames, masks, labelings, flows, persistences,
                                      self.GEOM, self.CFG)
        assert feats[trees.SIZE].max() == max(
            max((np.bincount(l.ravel())[1:].max() if c else 0) for l, c in labelings), 0
        )

    def test_activity_fraction_bounded(self):
        frames = self._moving_square_frames()
        masks, labelings, persistences, flows, _ = document_products(frames, self.CFG)
        feats = extract_atom_features(frames, masks, labelings, flows, persistences,
                                      self.GEOM, self.CFG)
        act = feats[trees.ACTIVITY]
        assert np.all((act >= 0) & (act <= 1))
        total_active = sum(int(m.sum()) for m in masks)
        assert act.sum() * 6 * 16 * 16 == pytest.approx(total_active)


class TestStream:
    def test_stream_is_deterministic(self):
        rng = np.random.default_rng(12)
        frames = [rng.integers(0, 255, (32, 32, 3), dtype=np.uint8) for _ in range(14)]
        geom = plan_grid(32, 32, 16, 4, 2)
        cfg = CctvConfig(background_frames=4, flow_iterations=20)

        def run():
            stream = CctvFeatureStream(geom, cfg)
            docs = []
            for f in frames:
                docs.extend(stream.push(f))
            docs.extend(stream.finish())
            return docs

        first, second = run(), run()
        assert [d for d, _ in first] == [d for d, _ in second] == [0, 1, 2]
        for (_, a), (_, b) in zip(first, second):
            for feature in a:
                assert np.array_equal(a[feature], b[feature])

    def test_trailing_partial_document_dropped(self):
        geom = plan_grid(32, 32, 16, 5, 2)
        cfg = CctvConfig(background_frames=2, flow_iterations=10)
        stream = CctvFeatureStream(geom, cfg)
        docs = []
        for f in flat_frames(90, 12, 32, 32):
            docs.extend(stream.push(f))
        docs.extend(stream.finish())
        assert [d for d, _ in docs] == [0, 1]  # 12 frames, A=5: 2 full documents

    def test_causality_documents_do_not_depend_on_later_frames(self):
        rng = np.random.default_rng(13)
        frames = [rng.integers(0, 255, (32, 32, 3), dtype=np.uint8) for _ in range(10)]
        geom = plan_grid(32, 32, 16, 4, 2)
        cfg = CctvConfig(background_frames=2, flow_iterations=10)

        def first_doc(frame_list):
            stream = CctvFeatureStream(geom, cfg)
            for f in frame_list:
                for doc, feats in stream.push(f):
                    if doc == 0:
                        return feats
            return None

        a = first_doc(frames)
        tampered = frames[:4] + [np.zeros((32, 32, 3), np.uint8) for _ in range(6)]
        b = first_doc(tampered)
        for feature in a:
            assert np.array_equal(a[feature], b[feature])
