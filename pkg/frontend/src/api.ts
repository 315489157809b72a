/** Thin typed client for the consultation service.
 *
 * Every number shown anywhere in the UI originates from one of these
 * calls; nothing downstream recomputes probabilities.
 */

import type {
  EvidenceBody,
  EvidenceResponse,
  GraphDocument,
  GraphKind,
  KbInfo,
  LearnBody,
  LearnResponse,
  LedgerSnapshot,
  Marginals,
  QueryBody,
  QueryResponse,
  SessionState,
} from "./types.js";

export class ApiError extends Error {
  readonly status: number;
  readonly detail: unknown;

  constructor(status: number, detail: unknown) {
    super(typeof detail === "string" ? detail : JSON.stringify(detail));
    this.status = status;
    this.detail = detail;
  }
}

export interface ClientOptions {
  baseUrl?: string;
  fetchImpl?: typeof fetch;
}

export class ServiceClient {
  private readonly baseUrl: string;
  private readonly fetchImpl: typeof fetch;

  constructor(options: ClientOptions = {}) {
    this.baseUrl = (options.baseUrl ?? "").replace(/\/$/, "");
    this.fetchImpl = options.fetchImpl ?? fetch;
  }

  private async request<T>(method: "GET" | "POST", path: string, body?: unknown): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers: body === undefined ? undefined : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await response.json();
    if (!response.ok) {
      throw new ApiError(response.status, (payload as { detail?: unknown }).detail ?? payload);
    }
    return payload as T;
  }

  kb(): Promise<KbInfo> {
    return this.request("GET", "/kb");
  }

  graph(kind: GraphKind): Promise<GraphDocument> {
    return this.request("GET", `/kb/graph?kind=${kind}`);
  }

  marginals(): Promise<Marginals> {
    return this.request("GET", "/kb/marginals");
  }

  ledger(): Promise<LedgerSnapshot> {
    return this.request("GET", "/kb/ledger");
  }

  openSession(): Promise<SessionState> {
    return this.request("POST", "/sessions", {});
  }

  setEvidence(sessionId: string, body: EvidenceBody): Promise<EvidenceResponse> {
    return this.request("POST", `/sessions/${sessionId}/evidence`, body);
  }

  query(sessionId: string, body: QueryBody): Promise<QueryResponse> {
    return this.request("POST", `/sessions/${sessionId}/query`, body);
  }

  learn(body: LearnBody): Promise<LearnResponse> {
    return this.request("POST", "/kb/learn", body);
  }
}
