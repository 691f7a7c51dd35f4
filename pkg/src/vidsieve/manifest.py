"""Archive manifests: the durable record tying a video to its index file."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from pathlib import Path

from .grid import GridGeometry, plan_grid
from .lsh import ArchiveIndex


class ManifestError(Exception):
    pass


@dataclass
class ArchiveManifest:
    video_id: str
    feature_set: str  # cctv | airborne
    frame_source: str
    frame_count: int
    document_count: int
    index_path: str
    seed: int
    created_utc: str
    frame_width: int
    frame_height: int
    tile_size: int
    frames_per_document: int
    tree_depth: int

    @property
    def geometry(self) -> GridGeometry:
        return plan_grid(
            self.frame_width, self.frame_height, self.tile_size,
            self.frames_per_document, self.tree_depth,
        )

    def to_dict(self) -> dict:
        return {"version": 1, **asdict(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "ArchiveManifest":
        if data.get("version") != 1:
            raise ManifestError(f"unsupported manifest version {data.get('version')}")
        fields = {k: v for k, v in data.items() if k != "version"}
        try:
            return cls(**fields)
        except TypeError as exc:
            raise ManifestError(f"malformed manifest: {exc}") from None

    @classmethod
    def load(cls, path: str | Path) -> "ArchiveManifest":
        path = Path(path)
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ManifestError(f"cannot read manifest {path}: {exc}") from None
        manifest = cls.from_dict(data)
        return manifest

    def save(self, path: str | Path) -> None:
        path = Path(path)
        tmp = path.with_suffix(path.suffix + ".tmp")
        tmp.write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")
        tmp.replace(path)

    def resolve_index_path(self, manifest_path: str | Path) -> Path:
        p = Path(self.index_path)
        return p if p.is_absolute() else Path(manifest_path).parent / p

    def resolve_frame_source(self, manifest_path: str | Path) -> Path:
        p = Path(self.frame_source)
        return p if p.is_absolute() else Path(manifest_path).parent / p

    def load_index(self, manifest_path: str | Path) -> ArchiveIndex:
        """Load the referenced index and verify it matches this manifest."""
        archive = ArchiveIndex.load_from(self.resolve_index_path(manifest_path))
        g = archive.geometry
        ours = self.geometry
        if (g.frame_width, g.frame_height, g.tile_size, g.frames_per_document,
                g.tree_depth) != (ours.frame_width, ours.frame_height, ours.tile_size,
                                  ours.frames_per_document, ours.tree_depth):
            raise ManifestError("index geometry disagrees with manifest")
        if archive.seed != self.seed:
            raise ManifestError("index seed disagrees with manifest")
        if archive.feature_set != self.feature_set:
            raise ManifestError("index feature set disagrees with manifest")
        return archive


def now_utc() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
