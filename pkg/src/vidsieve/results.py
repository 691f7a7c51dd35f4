"""Versioned result documents for search output (see docs/formats.md)."""

from __future__ import annotations

from .manifest import ArchiveManifest
from .search import FullMatch

RESULT_SCHEMA_VERSION = 1


def result_document(
    matches: list[FullMatch], manifest: ArchiveManifest, algorithm: str
) -> dict:
    fpd = manifest.frames_per_document
    out_matches = []
    for rank, m in enumerate(matches, start=1):
        start_frame, end_frame = m.frame_interval(fpd)
        out_matches.append({
            "rank": rank,
            "score": m.score,
            "start_document": m.start_document,
            "end_document": m.end_document,
            "start_frame": start_frame,
            "end_frame": min(end_frame, manifest.frame_count - 1),
            "distortions": dict(m.distortions),
            "path": [
                {
                    "document": step.document,
                    "component": step.component,
                    "kind": step.kind,
                    "tiles": [list(t) for t in step.tiles],
                }
                for step in m.path
            ],
        })
    return {
        "version": RESULT_SCHEMA_VERSION,
        "algorithm": algorithm,
        "archive": manifest.video_id,
        "frames_per_document": fpd,
        "tile_size": manifest.tile_size,
        "matches": out_matches,
    }


def evidence_overlay(match: dict, tile_size: int) -> dict:
    """Pixel rectangles for one result match, ready to draw over a frame."""
    boxes = []
    for step in match["path"]:
        for u, v in step["tiles"]:
            boxes.append({
                "document": step["document"],
                "component": step["component"],
                "x": u * tile_size,
                "y": v * tile_size,
                "w": tile_size,
                "h": tile_size,
            })
    return {"rank": match["rank"], "boxes": boxes}
