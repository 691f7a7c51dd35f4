"""HTTP service hosting archived videos for the query UI.

Read-only over the archives; queries run as asynchronous jobs that clients
poll. One worker thread executes jobs in submission order (indices are
immutable after load, so readers need no locking); job records live in
memory and vanish on restart, manifests are the only durable state.
"""

from __future__ import annotations

import io
import itertools
import queue
import threading
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException, Response
from fastapi.middleware.cors import CORSMiddleware

from .config import PipelineConfig
from .frames import FrameSource, open_frame_source
from .lsh import ArchiveIndex
from .manifest import ArchiveManifest, ManifestError
from .query import QueryValidationError, parse_query
from .results import evidence_overlay, result_document
from .search import (
    QueryArchiveMismatch,
    dp_full_matches,
    greedy_full_matches,
    partial_matches,
)


@dataclass
class LoadedArchive:
    manifest: ArchiveManifest
    manifest_path: Path
    index: ArchiveIndex | None = None
    source: FrameSource | None = None

    def get_index(self) -> ArchiveIndex:
        if self.index is None:
            self.index = self.manifest.load_index(self.manifest_path)
        return self.index

    def get_source(self) -> FrameSource:
        if self.source is None:
            self.source = open_frame_source(
                self.manifest.resolve_frame_source(self.manifest_path)
            )
        return self.source


@dataclass
class JobRecord:
    job_id: str
    archive_id: str
    algorithm: str
    query_doc: dict
    state: str = "queued"  # queued | running | done | failed
    error: str | None = None
    result: dict | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)

    def view(self) -> dict:
        with self.lock:
            out = {"job_id": self.job_id, "archive": self.archive_id,
                   "algorithm": self.algorithm, "state": self.state}
            if self.error is not None:
                out["error"] = self.error
            return out


def run_search(
    query_doc: dict, manifest: ArchiveManifest, archive: ArchiveIndex,
    algorithm: str, config: PipelineConfig | None = None,
) -> dict:
    """Parse, retrieve, assemble and serialize one search; shared by the
    CLI and the job worker."""
    cfg = config or PipelineConfig()
    query = parse_query(query_doc, cfg.search)
    pm = partial_matches(query, archive, manifest.document_count)
    if algorithm == "dp":
        found = dp_full_matches(pm, query.weights, query.threshold, cfg.search.max_paths)
    elif algorithm == "greedy":
        found = greedy_full_matches(
            pm, query.time_scale, query.horizon, query.greedy_min_log_value
        )
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}; expected dp or greedy")
    return result_document(found, manifest, algorithm)


def create_app(archive_dir: str | Path, config: PipelineConfig | None = None) -> FastAPI:
    archive_dir = Path(archive_dir)
    config = config or PipelineConfig()
    app = FastAPI(title="vidsieve", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"],
    )

    archives: dict[str, LoadedArchive] = {}
    for manifest_path in sorted(archive_dir.glob("*.manifest.json")):
        try:
            manifest = ArchiveManifest.load(manifest_path)
        except ManifestError:
            continue
        archives[manifest.video_id] = LoadedArchive(manifest, manifest_path)

    jobs: dict[str, JobRecord] = {}
    jobs_lock = threading.Lock()
    job_counter = itertools.count(1)
    work: queue.Queue[JobRecord | None] = queue.Queue()

    def worker():
        while True:
            job = work.get()
            if job is None:
                return
            with job.lock:
                job.state = "running"
            try:
                loaded = archives[job.archive_id]
                result = run_search(
                    job.query_doc, loaded.manifest, loaded.get_index(),
                    job.algorithm, config,
                )
                with job.lock:
                    job.result = result
                    job.state = "done"
            except Exception as exc:
                with job.lock:
                    job.error = str(exc)
                    job.state = "failed"

    threading.Thread(target=worker, daemon=True, name="vidsieve-jobs").start()

    def get_archive(archive_id: str) -> LoadedArchive:
        if archive_id not in archives:
            raise HTTPException(status_code=404, detail=f"unknown archive {archive_id!r}")
        return archives[archive_id]

    @app.get("/api/archives")
    def list_archives():
        return [
            {
                "id": a.manifest.video_id,
                "feature_set": a.manifest.feature_set,
                "frame_count": a.manifest.frame_count,
                "document_count": a.manifest.document_count,
            }
            for a in archives.values()
        ]

    @app.get("/api/archives/{archive_id}")
    def archive_detail(archive_id: str):
        return get_archive(archive_id).manifest.to_dict()

    @app.get("/api/archives/{archive_id}/geometry")
    def archive_geometry(archive_id: str):
        m = get_archive(archive_id).manifest
        g = m.geometry
        return {
            "frame_width": g.frame_width,
            "frame_height": g.frame_height,
            "tile_size": g.tile_size,
            "frames_per_document": g.frames_per_document,
            "tree_depth": g.tree_depth,
            "atoms_per_row": g.atoms_per_row,
            "atoms_per_col": g.atoms_per_col,
        }

    @app.get("/api/archives/{archive_id}/frames/{index}")
    def archive_frame(archive_id: str, index: int):
        from PIL import Image

        loaded = get_archive(archive_id)
        source = loaded.get_source()
        if not (0 <= index < len(source)):
            raise HTTPException(status_code=404, detail=f"frame {index} out of range")
        buf = io.BytesIO()
        Image.fromarray(source.get(index)).save(buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    @app.post("/api/archives/{archive_id}/queries", status_code=202)
    def submit_query(archive_id: str, payload: dict, algorithm: str = "dp"):
        loaded = get_archive(archive_id)
        if algorithm not in ("dp", "greedy"):
            raise HTTPException(status_code=400, detail="algorithm must be dp or greedy")
        try:
            query = parse_query(payload, (config or PipelineConfig()).search)
        except QueryValidationError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        if query.frame_size is not None:
            expected = (loaded.manifest.frame_width, loaded.manifest.frame_height)
            if tuple(query.frame_size) != expected:
                raise HTTPException(
                    status_code=409,
                    detail=f"query drawn on {query.frame_size} frames, "
                           f"archive is {expected}",
                )
        job = JobRecord(
            job_id=f"job-{next(job_counter)}",
            archive_id=archive_id,
            algorithm=algorithm,
            query_doc=payload,
        )
        with jobs_lock:
            jobs[job.job_id] = job
        work.put(job)
        return {"job_id": job.job_id}

    def get_job(job_id: str) -> JobRecord:
        with jobs_lock:
            if job_id not in jobs:
                raise HTTPException(status_code=404, detail=f"unknown job {job_id!r}")
            return jobs[job_id]

    @app.get("/api/jobs/{job_id}")
    def job_status(job_id: str):
        return get_job(job_id).view()

    @app.get("/api/jobs/{job_id}/results")
    def job_results(job_id: str):
        job = get_job(job_id)
        with job.lock:
            if job.state == "failed":
                raise HTTPException(status_code=409, detail=job.error or "job failed")
            if job.state != "done" or job.result is None:
                raise HTTPException(status_code=409, detail=f"job is {job.state}")
            return job.result

    @app.get("/api/jobs/{job_id}/results/{rank}/evidence")
    def job_evidence(job_id: str, rank: int):
        job = get_job(job_id)
        with job.lock:
            if job.state != "done" or job.result is None:
                raise HTTPException(status_code=409, detail=f"job is {job.state}")
            result = job.result
        for match in result["matches"]:
            if match["rank"] == rank:
                return evidence_overlay(match, result["tile_size"])
        raise HTTPException(status_code=404, detail=f"no match ranked {rank}")

    @app.exception_handler(QueryArchiveMismatch)
    def mismatch_handler(request, exc):
        from fastapi.responses import JSONResponse

        return JSONResponse(status_code=409, content={"detail": str(exc)})

    return app


def serve(archive_dir: str | Path, host: str = "127.0.0.1", port: int = 8800,
          config: PipelineConfig | None = None) -> None:
    import uvicorn

    uvicorn.run(create_app(archive_dir, config), host=host, port=port, log_level="info")
