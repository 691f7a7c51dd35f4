"""Pipeline configuration: geometry, extraction thresholds, index and search
parameters. Everything the engine tunes lives here and can be loaded from a
JSON file; unspecified fields keep their defaults.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from . import trees

# Per-feature bucket widths for the locality-sensitive hash. Scalar widths
# live on the feature's own scale (pixels, frames). Histogram features are
# quantized to dominant-bin classes before hashing, so equal content collides
# at any width; their widths are kept small because the union over tables and
# ROI anchors amplifies even weak cross-class collision rates into noise.
DEFAULT_BUCKET_WIDTHS = {
    trees.ACTIVITY: 0.25,
    trees.SIZE: 30.0,
    trees.COLOR: 0.05,
    trees.PERSISTENCE: 30.0,
    trees.MOTION: 0.05,
    trees.DISPLACEMENT: 3.0,
}


@dataclass(frozen=True)
class DpWeights:
    """Scoring weights for the dynamic-programming assembler.

    ``unmatched_document`` is charged when a document inside a match has no
    partial match (an insertion); ``skipped_component`` when a query
    component is passed over (a deletion); ``continuation`` when a component
    keeps matching across consecutive documents; ``same_track_bonus`` when an
    airborne match shares its track id with the diagonal predecessor.
    """

    match: float = 3.0
    continuation: float = 1.0
    unmatched_document: float = -2.0
    skipped_component: float = -1.0
    same_track_bonus: float = 5.0

    def __post_init__(self):
        if self.match <= 0:
            raise ValueError("match bonus must be positive")


@dataclass(frozen=True)
class GridConfig:
    tile_size: int = 16
    frames_per_document: int = 30
    tree_depth: int = 3


# Airborne archives store 1-level displacement trees only.
AIRBORNE_GRID = GridConfig(tile_size=16, frames_per_document=15, tree_depth=1)


@dataclass(frozen=True)
class CctvConfig:
    background_frames: int = 500
    activity_threshold: float = 20.0  # gray levels
    learning_rate: float = 0.05
    idle_flow_threshold: float = 0.5  # px/frame
    flow_smoothness: float = 1.0
    flow_iterations: int = 100
    flow_presmooth: float = 1.5  # gaussian sigma before derivatives; 0 disables


@dataclass(frozen=True)
class AirborneConfig:
    detection_threshold: float = 15.0  # gray levels; use 10 for low-contrast walkers
    frame_spacing: int = 1  # differencing span; 10 for slow walkers
    size_filter_max: int = 150  # bodies above this pixel count are discarded
    cost_weights: tuple[float, float, float, float, float] = (1.0, 0.1, 50.0, 1.0, 1.0)
    assignment_gate: float = 100.0
    gmm_components: int = 3
    gmm_iterations: int = 10
    gmm_variance_floor: float = 4.0
    color_history_points: int = 5


@dataclass(frozen=True)
class IndexConfig:
    tables: int = 8
    bucket_widths: dict[str, float] = field(
        default_factory=lambda: dict(DEFAULT_BUCKET_WIDTHS)
    )
    significance_threshold: float = 0.01  # minimum root activity to index
    seed: int = 0x5EED_50F7


@dataclass(frozen=True)
class SearchConfig:
    weights: DpWeights = field(default_factory=DpWeights)
    score_threshold: float = 6.0  # 2x the match bonus
    time_scale: float = 0.5  # discount per document in the greedy value
    horizon: int = 32  # longest greedy segment, in documents
    greedy_min_log_value: float = 15.0
    max_paths: int = 100


@dataclass(frozen=True)
class PipelineConfig:
    feature_set: str = "cctv"  # "cctv" | "airborne"
    grid: GridConfig = field(default_factory=GridConfig)
    cctv: CctvConfig = field(default_factory=CctvConfig)
    airborne: AirborneConfig = field(default_factory=AirborneConfig)
    index: IndexConfig = field(default_factory=IndexConfig)
    search: SearchConfig = field(default_factory=SearchConfig)

    def __post_init__(self):
        if self.feature_set not in ("cctv", "airborne"):
            raise ValueError(f"unknown feature set {self.feature_set!r}")

    @property
    def features(self) -> tuple[str, ...]:
        return trees.CCTV_FEATURES if self.feature_set == "cctv" else trees.AIRBORNE_FEATURES

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        def build(klass, payload):
            fields = {f.name: f for f in dataclasses.fields(klass)}
            unknown = set(payload) - set(fields)
            if unknown:
                raise ValueError(f"unknown {klass.__name__} keys: {sorted(unknown)}")
            kwargs = {}
            for name, value in payload.items():
                if isinstance(value, dict) and name in _NESTED:
                    kwargs[name] = build(_NESTED[name], value)
                elif isinstance(value, list):
                    kwargs[name] = tuple(value)
                else:
                    kwargs[name] = value
            return klass(**kwargs)

        _NESTED = {
            "grid": GridConfig,
            "cctv": CctvConfig,
            "airborne": AirborneConfig,
            "index": IndexConfig,
            "search": SearchConfig,
            "weights": DpWeights,
        }
        return build(cls, data)

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)

    def default_airborne(self) -> "PipelineConfig":
        """Copy of this config switched to the airborne feature set."""
        return dataclasses.replace(self, feature_set="airborne", grid=AIRBORNE_GRID)
