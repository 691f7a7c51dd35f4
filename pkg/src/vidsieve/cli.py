"""Command-line entry points: ingest, search, serve, analyze, dump-tracklets,
plus a synthetic-corpus generator for demos and tests."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .config import PipelineConfig


def _load_config(args) -> PipelineConfig:
    config = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    feature_set = getattr(args, "feature_set", None)
    if feature_set == "airborne" and config.feature_set != "airborne":
        config = config.default_airborne()
    elif feature_set == "cctv" and config.feature_set != "cctv":
        config = dataclasses.replace(config, feature_set="cctv")
    if getattr(args, "seed", None) is not None:
        config = dataclasses.replace(
            config, index=dataclasses.replace(config.index, seed=args.seed)
        )
    return config


def cmd_ingest(args) -> int:
    from .ingest import ingest

    config = _load_config(args)
    manifest, path = ingest(args.source, args.out, config, video_id=args.video_id)
    print(f"archived {manifest.video_id}: {manifest.frame_count} frames, "
          f"{manifest.document_count} documents")
    print(f"manifest: {path}")
    return 0


def cmd_search(args) -> int:
    from .manifest import ArchiveManifest
    from .service import run_search

    config = _load_config(args)
    try:
        manifest = ArchiveManifest.load(args.manifest)
        archive = manifest.load_index(args.manifest)
        query_doc = json.loads(Path(args.query).read_text(encoding="utf-8"))
        result = run_search(query_doc, manifest, archive, args.algorithm, config)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.json:
        Path(args.json).write_text(json.dumps(result, indent=2) + "\n", encoding="utf-8")
    matches = result["matches"]
    if not matches:
        print("no matches above threshold")
        return 1
    for m in matches:
        distortions = m["distortions"]
        extra = (
            f"  distortions i/d/c: {distortions.get('insertions', 0)}/"
            f"{distortions.get('deletions', 0)}/{distortions.get('continuations', 0)}"
            if distortions else ""
        )
        print(f"#{m['rank']:<3} score {m['score']:<10.3f} "
              f"frames [{m['start_frame']}, {m['end_frame']}] "
              f"documents [{m['start_document']}, {m['end_document']}]{extra}")
    return 0


def cmd_serve(args) -> int:
    from .service import serve

    config = _load_config(args)
    serve(args.archive_dir, host=args.host, port=args.port, config=config)
    return 0


def cmd_analyze(args) -> int:
    from .search import random_match_bound, random_match_bound_asymptotic

    exact = random_match_bound(args.dictionary_size, args.components,
                               args.window, args.ordered)
    approx = random_match_bound_asymptotic(args.dictionary_size, args.components,
                                           args.window, args.ordered)
    kind = "ordered" if args.ordered else "unordered"
    print(f"random {kind} match probability, |D|={args.dictionary_size} "
          f"N={args.components} window={args.window}")
    print(f"  exact:      {float(exact):.6g}  ({exact.numerator}/{exact.denominator})")
    print(f"  asymptotic: {approx:.6g}")
    return 0


def cmd_dump_tracklets(args) -> int:
    from .airborne import TrackletBuilder, detect_candidates, dump_tracklets
    from .cctv import luma
    from .frames import open_frame_source

    config = _load_config(args)
    source = open_frame_source(args.source)
    spacing = max(1, config.airborne.frame_spacing)
    builder = TrackletBuilder(config.airborne)
    grays = []
    for n, frame in enumerate(source):
        grays.append(luma(frame))
        if n < spacing:
            continue
        candidates = detect_candidates(
            grays[-spacing - 1], grays[-1], config.airborne.detection_threshold,
            config.airborne.size_filter_max, color_frame=frame,
        )
        builder.step(n, candidates)
        grays = grays[-spacing - 1:]
    rows = dump_tracklets(builder.all_tracklets(), args.out)
    print(f"wrote {rows} tracklet points to {args.out}")
    return 0


def cmd_synth(args) -> int:
    from .synth import build_airborne_corpus, build_cctv_corpus, scaled_clutter_mix

    if args.kind == "cctv":
        frames = args.frames or 2000
        corpus = build_cctv_corpus(
            args.out, frame_count=frames, seed=args.seed, n_routes=args.routes,
            clutter_mix=scaled_clutter_mix(args.routes),
        )
    else:
        frames = args.frames or 600
        corpus = build_airborne_corpus(args.out, frame_count=frames, seed=args.seed)
    print(f"wrote {corpus.frame_count} frames to {corpus.path}")
    for e in corpus.events:
        tag = "route " if e.is_route else "clutter"
        print(f"  {tag} {e.kind:<18} frames [{e.start_frame}, {e.end_frame}] row {e.row}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vidsieve",
        description="Index surveillance video into a compact searchable archive "
                    "and retrieve segments matching drawn route queries.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="archive a frame source into an index")
    p.add_argument("source", help="SVFR container or directory of numbered PPM/PGM frames")
    p.add_argument("--out", required=True, help="output directory for index and manifest")
    p.add_argument("--config", help="pipeline config JSON")
    p.add_argument("--feature-set", choices=["cctv", "airborne"])
    p.add_argument("--video-id")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("search", help="run a query file against an archive")
    p.add_argument("manifest", help="archive manifest path")
    p.add_argument("query", help="query document JSON")
    p.add_argument("--algorithm", choices=["dp", "greedy"], default="dp")
    p.add_argument("--config", help="pipeline config JSON")
    p.add_argument("--json", help="also write the result document here")
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("serve", help="HTTP service over a directory of archives")
    p.add_argument("archive_dir")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8800)
    p.add_argument("--config", help="pipeline config JSON")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("analyze", help="false-positive bound for a query shape")
    p.add_argument("--dictionary-size", type=int, required=True)
    p.add_argument("--components", type=int, required=True)
    p.add_argument("--window", type=int, required=True)
    p.add_argument("--ordered", action="store_true")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("dump-tracklets", help="write tracklet points as CSV")
    p.add_argument("source")
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="pipeline config JSON")
    p.set_defaults(func=cmd_dump_tracklets, feature_set="airborne")

    p = sub.add_parser("synth", help="generate a synthetic test corpus")
    p.add_argument("kind", choices=["cctv", "airborne"])
    p.add_argument("out")
    p.add_argument("--frames", type=int, help="default 2000 (cctv) / 600 (airborne)")
    p.add_argument("--seed", type=int, default=99)
    p.add_argument("--routes", type=int, default=10,
                   help="route events to plant (cctv; clutter scales along)")
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
