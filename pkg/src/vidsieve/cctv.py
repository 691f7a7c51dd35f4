"""Streaming extraction of the five per-atom features from fixed-camera video.

Per frame: a running-average background model yields a binary activity mask,
connected components give moving blobs, a per-pixel counter tracks how long
pixels stay active, and dense optical flow between consecutive frames feeds a
quantized direction histogram. Per document the per-frame products are
reduced to one value per tile:

    activity     fraction of active pixel samples in the tile
    size         largest blob touching the tile across the document
    color        HSL histogram (8 hue / 4 saturation / 4 luminance bins)
                 over active pixels
    persistence  highest consecutive-active count seen in the tile
    motion       9-bin flow histogram (8 directions plus idle)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np
from scipy import ndimage

from . import kernels, trees
from .config import CctvConfig
from .grid import GridGeometry


@dataclass
class BackgroundModel:
    """Per-pixel RGB background estimate with fixed update parameters."""

    background: np.ndarray  # (H, W, 3) float64
    learning_rate: float
    activity_threshold: float

    def __post_init__(self):
        if not (0.0 < self.learning_rate < 1.0):
            raise ValueError("learning rate must lie in (0, 1)")


@dataclass(frozen=True)
class Blob:
    """One 8-connected foreground component."""

    label: int
    size: int
    pixels: np.ndarray  # (n, 2) array of (row, col), scan order


def init_background(
    frames: Iterable[np.ndarray],
    learning_rate: float = 0.05,
    activity_threshold: float = 20.0,
) -> BackgroundModel:
    """Estimate the initial background as the per-pixel, per-channel median."""
    stack = np.stack([np.asarray(f, dtype=np.uint8) for f in frames], axis=0)
    if stack.shape[0] == 0:
        raise ValueError("cannot initialize a background from zero frames")
    return BackgroundModel(
        background=np.median(stack, axis=0).astype(np.float64),
        learning_rate=learning_rate,
        activity_threshold=activity_threshold,
    )


def subtract_background(model: BackgroundModel, frame: np.ndarray) -> np.ndarray:
    """Activity mask for one frame; updates the model in place.

    A pixel is active when any channel differs from the background by more
    than the threshold. The running average absorbs the frame only at
    inactive pixels, so a newly static object keeps registering as active and
    its persistence can grow.
    """
    frame = np.ascontiguousarray(frame, dtype=np.uint8)
    if frame.shape != model.background.shape:
        raise ValueError(
            f"frame shape {frame.shape} does not match background {model.background.shape}"
        )
    return kernels.subtract_and_update(
        model.background, frame, model.activity_threshold, model.learning_rate
    )


def connected_components(mask: np.ndarray) -> list[Blob]:
    """8-connected foreground blobs, ordered by their first pixel in scan order."""
    mask = np.ascontiguousarray(mask, dtype=np.uint8)
    labels, count = kernels.label_components(mask)
    blobs = []
    for lbl in range(1, count + 1):
        rows, cols = np.nonzero(labels == lbl)
        blobs.append(Blob(label=lbl, size=len(rows), pixels=np.column_stack([rows, cols])))
    return blobs


def luma(frame: np.ndarray) -> np.ndarray:
    """ITU-R 601 luma of an RGB frame, float64 gray levels."""
    f = np.asarray(frame, dtype=np.float64)
    return 0.299 * f[..., 0] + 0.587 * f[..., 1] + 0.114 * f[..., 2]


def _flow_derivatives(prev: np.ndarray, nxt: np.ndarray):
    """Spatial and temporal intensity derivatives over the 2x2x2 cube."""
    p = np.pad(prev, ((0, 1), (0, 1)), mode="edge")
    n = np.pad(nxt, ((0, 1), (0, 1)), mode="edge")
    ix = 0.25 * (
        p[:-1, 1:] - p[:-1, :-1] + p[1:, 1:] - p[1:, :-1]
        + n[:-1, 1:] - n[:-1, :-1] + n[1:, 1:] - n[1:, :-1]
    )
    iy = 0.25 * (
        p[1:, :-1] - p[:-1, :-1] + p[1:, 1:] - p[:-1, 1:]
        + n[1:, :-1] - n[:-1, :-1] + n[1:, 1:] - n[:-1, 1:]
    )
    it = 0.25 * (
        n[:-1, :-1] + n[:-1, 1:] + n[1:, :-1] + n[1:, 1:]
        - p[:-1, :-1] - p[:-1, 1:] - p[1:, :-1] - p[1:, 1:]
    )
    return ix, iy, it


def horn_schunck(
    prev_gray: np.ndarray,
    next_gray: np.ndarray,
    smoothness: float = 1.0,
    iterations: int = 100,
) -> tuple[np.ndarray, np.ndarray]:
    """Dense (dx, dy) flow between two grayscale frames by Jacobi relaxation
    of the smoothness-regularized brightness-constancy equations."""
    prev_gray = np.ascontiguousarray(prev_gray, dtype=np.float64)
    next_gray = np.ascontiguousarray(next_gray, dtype=np.float64)
    if prev_gray.shape != next_gray.shape:
        raise ValueError("frame shapes differ")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    ix, iy, it = _flow_derivatives(prev_gray, next_gray)
    u = np.zeros_like(prev_gray)
    v = np.zeros_like(prev_gray)
    kernels.horn_schunck_iterate(
        np.ascontiguousarray(ix), np.ascontiguousarray(iy), np.ascontiguousarray(it),
        u, v, smoothness * smoothness, iterations,
    )
    return u, v


def rgb_to_hsl(rgb: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized RGB (0..255) to HSL: hue in degrees, S and L in [0, 1]."""
    f = np.asarray(rgb, dtype=np.float64) / 255.0
    r, g, b = f[..., 0], f[..., 1], f[..., 2]
    cmax = f.max(axis=-1)
    cmin = f.min(axis=-1)
    delta = cmax - cmin
    lum = (cmax + cmin) / 2.0
    with np.errstate(divide="ignore", invalid="ignore"):
        sat = np.where(delta > 0, delta / (1.0 - np.abs(2.0 * lum - 1.0)), 0.0)
        hue = np.where(
            delta > 0,
            np.select(
                [cmax == r, cmax == g],
                [(g - b) / np.where(delta > 0, delta, 1.0) % 6.0,
                 (b - r) / np.where(delta > 0, delta, 1.0) + 2.0],
                default=(r - g) / np.where(delta > 0, delta, 1.0) + 4.0,
            )
            * 60.0,
            0.0,
        )
    return hue % 360.0, np.clip(sat, 0.0, 1.0), lum


def hsl_bins(rgb: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Quantized HSL bin indices: hue 0..7, saturation 0..3, luminance 0..3."""
    hue, sat, lum = rgb_to_hsl(rgb)
    hb = np.minimum((hue / 45.0).astype(np.int64), 7)
    sb = np.minimum((sat * 4.0).astype(np.int64), 3)
    lb = np.minimum((lum * 4.0).astype(np.int64), 3)
    return hb, sb, lb


def motion_bins(u: np.ndarray, v: np.ndarray, idle_threshold: float) -> np.ndarray:
    """Direction bin per pixel: 0..7 for 45-degree sectors centered on the
    axes and diagonals (0 = east, counter-clockwise with north up), 8 idle."""
    mag = np.hypot(u, v)
    ang = np.degrees(np.arctan2(-v, u))  # image y grows downwards
    bins = (((ang + 22.5) % 360.0) / 45.0).astype(np.int64)
    bins[mag < idle_threshold] = trees.MOTION_IDLE_BIN
    return bins


def _tile_reduce_sum(arr: np.ndarray, geometry: GridGeometry) -> np.ndarray:
    g = geometry
    crop = arr[: g.atoms_per_col * g.tile_size, : g.atoms_per_row * g.tile_size]
    return crop.reshape(g.atoms_per_col, g.tile_size, g.atoms_per_row, g.tile_size).sum(axis=(1, 3))


def _tile_reduce_max(arr: np.ndarray, geometry: GridGeometry) -> np.ndarray:
    g = geometry
    crop = arr[: g.atoms_per_col * g.tile_size, : g.atoms_per_row * g.tile_size]
    return crop.reshape(g.atoms_per_col, g.tile_size, g.atoms_per_row, g.tile_size).max(axis=(1, 3))


class DocumentAccumulator:
    """Reduces one document's per-frame products into the five atom grids."""

    def __init__(self, geometry: GridGeometry, config: CctvConfig):
        self.geometry = geometry
        self.config = config
        v, u = geometry.atoms_per_col, geometry.atoms_per_row
        self._frames = 0
        self._active = np.zeros((v, u), dtype=np.float64)
        self._largest_blob = np.zeros((v, u), dtype=np.float64)
        self._color = np.zeros((v, u, trees.FEATURE_DIM[trees.COLOR]), dtype=np.float64)
        self._persistence = np.zeros((v, u), dtype=np.float64)
        self._motion = np.zeros((v, u, trees.FEATURE_DIM[trees.MOTION]), dtype=np.float64)

    def add_frame(
        self,
        frame: np.ndarray,
        mask: np.ndarray,
        labels: np.ndarray,
        blob_count: int,
        persistence: np.ndarray,
    ) -> None:
        g = self.geometry
        self._frames += 1
        self._active += _tile_reduce_sum(mask.astype(np.float64), g)
        self._persistence = np.maximum(
            self._persistence, _tile_reduce_max(persistence.astype(np.float64), g)
        )

        if blob_count:
            sizes = np.bincount(labels.ravel(), minlength=blob_count + 1).astype(np.float64)
            sizes[0] = 0.0
            self._largest_blob = np.maximum(
                self._largest_blob, _tile_reduce_max(sizes[labels], g)
            )

        active = mask != 0
        active[g.atoms_per_col * g.tile_size:, :] = False
        active[:, g.atoms_per_row * g.tile_size:] = False
        if active.any():
            ys, xs = np.nonzero(active)
            tiles = (ys // g.tile_size) * g.atoms_per_row + (xs // g.tile_size)
            hb, sb, lb = hsl_bins(frame[ys, xs])
            width = trees.FEATURE_DIM[trees.COLOR]
            idx = np.concatenate([tiles * width + hb, tiles * width + 8 + sb,
                                  tiles * width + 12 + lb])
            counts = np.bincount(idx, minlength=self._color.size)
            self._color += counts.reshape(self._color.shape)

    def add_flow(self, u: np.ndarray, v: np.ndarray) -> None:
        g = self.geometry
        bins = motion_bins(u, v, self.config.idle_flow_threshold)
        crop = bins[: g.atoms_per_col * g.tile_size, : g.atoms_per_row * g.tile_size]
        ys, xs = np.indices(crop.shape)
        tiles = (ys // g.tile_size) * g.atoms_per_row + (xs // g.tile_size)
        width = trees.FEATURE_DIM[trees.MOTION]
        counts = np.bincount((tiles * width + crop).ravel(), minlength=self._motion.size)
        self._motion += counts.reshape(self._motion.shape)

    def finalize(self) -> dict[str, np.ndarray]:
        g = self.geometry
        samples = self._frames * g.tile_size * g.tile_size
        return {
            trees.ACTIVITY: (self._active / samples)[..., None],
            trees.SIZE: self._largest_blob[..., None],
            trees.COLOR: self._color,
            trees.PERSISTENCE: self._persistence[..., None],
            trees.MOTION: self._motion,
        }


def extract_atom_features(
    frames: list[np.ndarray],
    masks: list[np.ndarray],
    labelings: list[tuple[np.ndarray, int]],
    flows: list[tuple[np.ndarray, np.ndarray]],
    persistence: list[np.ndarray],
    geometry: GridGeometry,
    config: CctvConfig,
) -> dict[str, np.ndarray]:
    """Atom feature grids for one document from its per-frame products.

    ``flows`` holds the consecutive-pair flow fields (one fewer than frames);
    ``persistence`` the per-pixel counter state after each frame.
    """
    if not (len(frames) == len(masks) == len(labelings) == len(persistence)):
        raise ValueError("per-frame product lists must have equal length")
    if len(flows) != len(frames) - 1:
        raise ValueError("expected one flow field per consecutive frame pair")
    acc = DocumentAccumulator(geometry, config)
    for frame, mask, (labels, count), persist in zip(frames, masks, labelings, persistence):
        acc.add_frame(frame, mask, labels, count, persist)
    for u, v in flows:
        acc.add_flow(u, v)
    return acc.finalize()


class CctvFeatureStream:
    """Push frames in order, receive finished documents' feature grids.

    The first ``background_frames`` frames are buffered to seed the
    background median and are then replayed through the extractor, so every
    frame contributes to its document. Call ``finish()`` after the last frame
    to flush a pending warmup shorter than the buffer (any trailing partial
    document is dropped).
    """

    def __init__(self, geometry: GridGeometry, config: CctvConfig):
        self.geometry = geometry
        self.config = config
        self._warmup: list[np.ndarray] | None = []
        self._model: BackgroundModel | None = None
        self._persistence = np.zeros(
            (geometry.frame_height, geometry.frame_width), dtype=np.int32
        )
        self._prev_gray: np.ndarray | None = None
        self._in_doc = 0
        self._doc_index = 0
        self._acc = DocumentAccumulator(geometry, config)

    def push(self, frame: np.ndarray) -> Iterator[tuple[int, dict[str, np.ndarray]]]:
        frame = np.ascontiguousarray(frame, dtype=np.uint8)
        expected = (self.geometry.frame_height, self.geometry.frame_width, 3)
        if frame.shape != expected:
            raise ValueError(f"frame shape {frame.shape}, expected {expected}")
        if self._warmup is not None:
            self._warmup.append(frame)
            if len(self._warmup) < self.config.background_frames:
                return
            yield from self._drain_warmup()
            return
        yield from self._process(frame)

    def finish(self) -> Iterator[tuple[int, dict[str, np.ndarray]]]:
        if self._warmup is not None and self._warmup:
            yield from self._drain_warmup()

    def _drain_warmup(self) -> Iterator[tuple[int, dict[str, np.ndarray]]]:
        buffered, self._warmup = self._warmup, None
        self._model = init_background(
            buffered, self.config.learning_rate, self.config.activity_threshold
        )
        for f in buffered:
            yield from self._process(f)

    def _process(self, frame: np.ndarray) -> Iterator[tuple[int, dict[str, np.ndarray]]]:
        assert self._model is not None
        mask = subtract_background(self._model, frame)
        kernels.update_persistence(mask, self._persistence)
        labels, count = kernels.label_components(mask)
        self._acc.add_frame(frame, mask, labels, count, self._persistence)

        gray = luma(frame)
        if self.config.flow_presmooth > 0:
            # large per-frame displacements break the brightness-constancy
            # linearization on fine texture; smoothing restores valid gradients
            gray = ndimage.gaussian_filter(gray, self.config.flow_presmooth)
        if self._in_doc > 0 and self._prev_gray is not None:
            u, v = horn_schunck(
                self._prev_gray, gray,
                self.config.flow_smoothness, self.config.flow_iterations,
            )
            self._acc.add_flow(u, v)
        self._prev_gray = gray

        self._in_doc += 1
        if self._in_doc == self.geometry.frames_per_document:
            features = self._acc.finalize()
            doc = self._doc_index
            self._doc_index += 1
            self._in_doc = 0
            self._acc = DocumentAccumulator(self.geometry, self.config)
            self._prev_gray = None
            yield doc, features
