import dataclasses
import json
from types import SimpleNamespace

import pytest

from vidsieve.config import CctvConfig, IndexConfig, PipelineConfig
from vidsieve.ingest import ingest
from vidsieve.synth import build_airborne_corpus, build_cctv_corpus

SMALL_CCTV_CONFIG = PipelineConfig(
    cctv=CctvConfig(background_frames=60),
    index=IndexConfig(seed=1234),
)


def small_cctv_query(width=128, n_components=3):
    third = width // 3
    return {
        "version": 1,
        "frame_size": {"w": width, "h": width},
        "components": [
            {
                "roi": {"x": i * third, "y": 24, "w": third, "h": width - 48},
                "constraints": {"motion": {"directions": ["E"]}},
            }
            for i in range(n_components)
        ],
    }


@pytest.fixture(scope="session")
def small_cctv(tmp_path_factory):
    """A 420-frame 128x128 corpus with two route events, archived once."""
    root = tmp_path_factory.mktemp("small-cctv")
    corpus = build_cctv_corpus(
        root / "clip.svfr", width=128, height=128, frame_count=420, seed=5,
        n_routes=2, clutter_mix={"west": 1, "partial_east": 1},
    )
    manifest, manifest_path = ingest(corpus.path, root / "archive", SMALL_CCTV_CONFIG)
    return SimpleNamespace(
        corpus=corpus,
        config=SMALL_CCTV_CONFIG,
        manifest=manifest,
        manifest_path=manifest_path,
        archive_dir=manifest_path.parent,
    )


@pytest.fixture(scope="session")
def small_airborne(tmp_path_factory):
    root = tmp_path_factory.mktemp("small-airborne")
    corpus = build_airborne_corpus(
        root / "aerial.svfr", width=128, height=128, frame_count=240, seed=7,
        noise_patches=3,
    )
    config = dataclasses.replace(
        PipelineConfig().default_airborne(), index=IndexConfig(seed=4321)
    )
    manifest, manifest_path = ingest(corpus.path, root / "archive", config)
    return SimpleNamespace(
        corpus=corpus,
        config=config,
        manifest=manifest,
        manifest_path=manifest_path,
        archive_dir=manifest_path.parent,
    )


def write_query(path, doc):
    path.write_text(json.dumps(doc, indent=2), encoding="utf-8")
    return path
