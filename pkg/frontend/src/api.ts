/** Thin client over the archive service; read-only plus job submission. */

import type {
  ArchiveSummary,
  EvidenceOverlay,
  Geometry,
  JobStatus,
  QueryDocument,
  ResultDocument,
} from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, detail: string) {
    super(detail);
  }
}

async function asJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = await response.json();
      if (body && typeof body.detail === "string") detail = body.detail;
    } catch {
      // non-json error body; keep the status text
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export class Client {
  constructor(
    private baseUrl: string,
    private fetchImpl: typeof fetch = fetch,
  ) {}

  listArchives(): Promise<ArchiveSummary[]> {
    return this.get("/api/archives");
  }

  geometry(archiveId: string): Promise<Geometry> {
    return this.get(`/api/archives/${encodeURIComponent(archiveId)}/geometry`);
  }

  frameUrl(archiveId: string, index: number): string {
    return `${this.baseUrl}/api/archives/${encodeURIComponent(archiveId)}/frames/${index}`;
  }

  async submitQuery(
    archiveId: string,
    query: QueryDocument,
    algorithm: "dp" | "greedy",
  ): Promise<string> {
    const response = await this.fetchImpl(
      `${this.baseUrl}/api/archives/${encodeURIComponent(archiveId)}/queries` +
        `?algorithm=${algorithm}`,
      {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(query),
      },
    );
    const body = await asJson<{ job_id: string }>(response);
    return body.job_id;
  }

  jobStatus(jobId: string): Promise<JobStatus> {
    return this.get(`/api/jobs/${encodeURIComponent(jobId)}`);
  }

  results(jobId: string): Promise<ResultDocument> {
    return this.get(`/api/jobs/${encodeURIComponent(jobId)}/results`);
  }

  evidence(jobId: string, rank: number): Promise<EvidenceOverlay> {
    return this.get(`/api/jobs/${encodeURIComponent(jobId)}/results/${rank}/evidence`);
  }

  /** Poll a job until it finishes; resolves with the final status. */
  async waitForJob(
    jobId: string,
    { intervalMs = 250, timeoutMs = 60_000 }: { intervalMs?: number; timeoutMs?: number } = {},
  ): Promise<JobStatus> {
    const deadline = Date.now() + timeoutMs;
    for (;;) {
      const status = await this.jobStatus(jobId);
      if (status.state === "done" || status.state === "failed") {
        return status;
      }
      if (Date.now() > deadline) {
        throw new ApiError(408, `job ${jobId} still ${status.state} after ${timeoutMs} ms`);
      }
      await new Promise((resolve) => setTimeout(resolve, intervalMs));
    }
  }

  private async get<T>(path: string): Promise<T> {
    return asJson<T>(await this.fetchImpl(`${this.baseUrl}${path}`));
  }
}
