"""Single-pass archiving: frames in, index file and manifest out.

Frames are streamed exactly once. CCTV ingestion pipes them through the
feature stream and files every finished document's trees; airborne ingestion
runs detection and tracklet association, then files per-document
displacement trees. The index is written to a temporary file and renamed
before the manifest appears, so an interrupted run never leaves a manifest
pointing at a partial index.

Memory stays bounded by the background warmup buffer (a config constant)
plus a couple of frames, independent of archive length.
"""

from __future__ import annotations

from collections import deque
from pathlib import Path

import numpy as np

from .airborne import TrackletBuilder, detect_candidates, tracklet_features
from .cctv import CctvFeatureStream, luma
from .config import PipelineConfig
from .frames import FrameSource, open_frame_source
from .grid import plan_grid
from .lsh import ArchiveIndex
from .manifest import ArchiveManifest, now_utc


class IngestStats:
    def __init__(self):
        self.frames = 0
        self.documents = 0
        self.anchors_indexed = 0
        self.tracklets = 0


def ingest(
    source_path: str | Path,
    out_dir: str | Path,
    config: PipelineConfig,
    video_id: str | None = None,
    source: FrameSource | None = None,
) -> tuple[ArchiveManifest, Path]:
    """Archive one video. Returns the manifest and its path."""
    source_path = Path(source_path)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if source is None:
        source = open_frame_source(source_path)
    video_id = video_id or source_path.stem

    geometry = plan_grid(
        source.width, source.height,
        config.grid.tile_size, config.grid.frames_per_document, config.grid.tree_depth,
    )
    archive = ArchiveIndex(geometry, config.feature_set, config.index)
    stats = IngestStats()

    if config.feature_set == "cctv":
        _ingest_cctv(source, geometry, config, archive, stats)
    else:
        _ingest_airborne(source, geometry, config, archive, stats)

    index_path = out_dir / f"{video_id}.svix"
    tmp = index_path.with_suffix(".svix.tmp")
    tmp.write_bytes(archive.save())
    tmp.replace(index_path)

    manifest = ArchiveManifest(
        video_id=video_id,
        feature_set=config.feature_set,
        frame_source=str(source_path),
        frame_count=stats.frames,
        document_count=stats.documents,
        index_path=index_path.name,
        seed=config.index.seed,
        created_utc=now_utc(),
        frame_width=geometry.frame_width,
        frame_height=geometry.frame_height,
        tile_size=geometry.tile_size,
        frames_per_document=geometry.frames_per_document,
        tree_depth=geometry.tree_depth,
    )
    manifest_path = out_dir / f"{video_id}.manifest.json"
    manifest.save(manifest_path)
    return manifest, manifest_path


def _ingest_cctv(source, geometry, config, archive, stats) -> None:
    stream = CctvFeatureStream(geometry, config.cctv)
    for frame in source:
        stats.frames += 1
        for doc, features in stream.push(frame):
            stats.anchors_indexed += archive.insert_cctv_document(doc, features)
            stats.documents += 1
    for doc, features in stream.finish():
        stats.anchors_indexed += archive.insert_cctv_document(doc, features)
        stats.documents += 1


def _ingest_airborne(source, geometry, config, archive, stats) -> None:
    spacing = max(1, config.airborne.frame_spacing)
    builder = TrackletBuilder(config.airborne)
    window: deque[tuple[np.ndarray, np.ndarray]] = deque(maxlen=spacing + 1)

    for frame in source:
        stats.frames += 1
        gray = luma(frame)
        window.append((gray, frame))
        if len(window) <= spacing:
            continue
        old_gray, _ = window[0]
        candidates = detect_candidates(
            old_gray, gray,
            config.airborne.detection_threshold,
            config.airborne.size_filter_max,
            color_frame=frame,
        )
        builder.step(stats.frames - 1, candidates)

    stats.documents = stats.frames // geometry.frames_per_document
    tracklets = builder.all_tracklets()
    stats.tracklets = len(tracklets)
    for doc in range(stats.documents):
        trees = tracklet_features(tracklets, geometry, doc)
        archive.insert_airborne_document(doc, trees)
