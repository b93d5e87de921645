import { ApiError, CurationApi } from "./api.js";
import type { CandidateCard, CandidateStatus, MutableStatus } from "./types.js";

export type SortKey = "penetrationVolumeCm3" | "contactVertexCount" | "id";

export interface ListQuery {
  sortKey: SortKey;
  ascending: boolean;
  statusFilter: CandidateStatus | "all";
  page: number;
  pageSize: number;
}

export const DEFAULT_QUERY: ListQuery = {
  sortKey: "id",
  ascending: true,
  statusFilter: "all",
  page: 0,
  pageSize: 24,
};

export interface ListPage {
  cards: CandidateCard[];
  page: number;
  pageCount: number;
  total: number;
}

function compare(
  a: CandidateCard,
  b: CandidateCard,
  key: SortKey,
  ascending: boolean,
): number {
  const direction = ascending ? 1 : -1;
  if (key !== "id") {
    const diff = a.scores[key] - b.scores[key];
    if (diff !== 0) return direction * diff;
  }
  // tiebreak on id, always ascending, so pagination never shuffles ties
  return key === "id" && !ascending
    ? a.id < b.id
      ? 1
      : -1
    : a.id < b.id
      ? -1
      : 1;
}

/** Pure view selection: filter -> sort -> paginate. */
export function selectPage(
  cards: readonly CandidateCard[],
  query: ListQuery,
): ListPage {
  const filtered = cards.filter(
    (c) => query.statusFilter === "all" || c.status === query.statusFilter,
  );
  const sorted = [...filtered].sort((a, b) =>
    compare(a, b, query.sortKey, query.ascending),
  );
  const pageCount = Math.max(1, Math.ceil(sorted.length / query.pageSize));
  const page = Math.min(Math.max(query.page, 0), pageCount - 1);
  return {
    cards: sorted.slice(page * query.pageSize, (page + 1) * query.pageSize),
    page,
    pageCount,
    total: sorted.length,
  };
}

export type DecideOutcome =
  | { kind: "ok"; card: CandidateCard }
  | { kind: "conflict"; refreshed: CandidateCard | null }
  | { kind: "gone" };

/** Holds the server-acknowledged candidate list; never optimistic. */
export class CandidateModel {
  private cards = new Map<string, CandidateCard>();

  constructor(private readonly api: CurationApi) {}

  all(): CandidateCard[] {
    return [...this.cards.values()];
  }

  get(id: string): CandidateCard | null {
    return this.cards.get(id) ?? null;
  }

  async refresh(): Promise<CandidateCard[]> {
    const list = await this.api.listCandidates();
    this.cards = new Map(list.map((c) => [c.id, c]));
    return this.all();
  }

  /** POST a decision; the local card changes only on a 200 acknowledgment.
   *  On 409 the card is re-fetched from server truth; on 404 it is removed. */
  async decide(id: string, status: MutableStatus): Promise<DecideOutcome> {
    const existing = this.cards.get(id);
    if (!existing) return { kind: "gone" };
    try {
      const ack = await this.api.setStatus(id, status);
      const card: CandidateCard = {
        ...existing,
        status: ack.status ?? status,
      };
      this.cards.set(id, card);
      return { kind: "ok", card };
    } catch (err) {
      if (err instanceof ApiError && err.status === 404) {
        this.cards.delete(id);
        return { kind: "gone" };
      }
      if (err instanceof ApiError && err.status === 409) {
        await this.refresh();
        return { kind: "conflict", refreshed: this.get(id) };
      }
      throw err;
    }
  }
}
