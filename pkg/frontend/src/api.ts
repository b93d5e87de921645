import type { CandidateCard, MeshPayload, MutableStatus } from "./types.js";

export type FetchLike = (
  url: string,
  init?: { method?: string; body?: string; headers?: Record<string, string> },
) => Promise<{ status: number; json(): Promise<unknown> }>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
  }
}

/** Typed client for the three serve-mode endpoints. */
export class CurationApi {
  constructor(
    private readonly base: string = "",
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request(path: string, init?: Parameters<FetchLike>[1]) {
    const resp = await this.fetchImpl(this.base + path, init);
    const body = (await resp.json()) as Record<string, unknown>;
    if (resp.status !== 200) {
      const detail = typeof body.error === "string" ? body.error : path;
      throw new ApiError(resp.status, detail);
    }
    return body;
  }

  async listCandidates(): Promise<CandidateCard[]> {
    const body = await this.request("/candidates");
    return body.candidates as CandidateCard[];
  }

  async candidateMesh(id: string): Promise<MeshPayload> {
    return (await this.request(
      `/candidates/${encodeURIComponent(id)}/mesh`,
    )) as unknown as MeshPayload;
  }

  /** POST a status change; resolves with the server-acknowledged status. */
  async setStatus(id: string, status: MutableStatus): Promise<CandidateCard> {
    const body = await this.request(
      `/candidates/${encodeURIComponent(id)}/status`,
      {
        method: "POST",
        body: JSON.stringify({ status }),
        headers: { "Content-Type": "application/json" },
      },
    );
    return body as unknown as CandidateCard;
  }
}
