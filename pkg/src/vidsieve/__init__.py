"""vidsieve: content-based retrieval for long fixed-camera and aerial video.

Frames are distilled into per-atom motion and object features, archived into
a locality-sensitive inverted index, and searched with ordered route queries
whose partial matches are assembled into ranked full matches by a greedy
value optimizer or a causal dynamic program.
"""

from .config import DpWeights, PipelineConfig
from .grid import AtomCoord, GridGeometry, plan_grid
from .lsh import ArchiveIndex, LshIndex, StableHashFunction
from .query import ActionComponent, Query, Roi, parse_query, query_to_dict
from .search import (
    FullMatch,
    PartialMatchSet,
    dp_full_matches,
    greedy_full_matches,
    partial_matches,
    random_match_bound,
)
from .trees import FeatureTree, FeatureVector, aggregate, build_trees

__version__ = "0.1.0"

__all__ = [
    "ActionComponent",
    "ArchiveIndex",
    "AtomCoord",
    "DpWeights",
    "FeatureTree",
    "FeatureVector",
    "FullMatch",
    "GridGeometry",
    "LshIndex",
    "PartialMatchSet",
    "PipelineConfig",
    "Query",
    "Roi",
    "StableHashFunction",
    "aggregate",
    "build_trees",
    "dp_full_matches",
    "greedy_full_matches",
    "parse_query",
    "partial_matches",
    "plan_grid",
    "query_to_dict",
    "random_match_bound",
    "__version__",
]
