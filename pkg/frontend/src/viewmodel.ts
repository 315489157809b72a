/** View state for the consultation page.
 *
 * The view model is a cache of server responses plus selection state.
 * It never derives probabilities: evidence changes and queries replace
 * whole blocks of state with whatever the service returned.
 */

import { ApiError, ServiceClient } from "./api.js";
import { forceLayout, type LayoutOptions, type Point } from "./layout.js";
import type {
  EvidenceBody,
  GraphDocument,
  GraphEdge,
  KbInfo,
  Marginals,
  QueryBody,
  QueryResponse,
} from "./types.js";

export interface MarginalBar {
  value: string;
  probability: number; // server value, displayed verbatim
}

export interface ViewNode {
  id: string;
  kind: "variable" | "hyperedge";
  position: Point;
  bars: MarginalBar[]; // empty for hyperedge nodes
  variables?: string[];
}

export interface GraphViewModel {
  kind: GraphDocument["kind"];
  nodes: ViewNode[];
  edges: GraphEdge[];
  selected: string | null;
}

export function buildGraphView(
  graph: GraphDocument,
  marginals: Marginals,
  layout?: LayoutOptions,
): GraphViewModel {
  const positions = forceLayout(graph, layout);
  const nodes: ViewNode[] = graph.nodes.map((node) => {
    const byValue = marginals[node.id];
    return {
      id: node.id,
      kind: byValue ? "variable" : "hyperedge",
      position: positions.get(node.id) ?? { x: 0, y: 0 },
      bars: byValue
        ? Object.entries(byValue).map(([value, probability]) => ({ value, probability }))
        : [],
      variables: node.variables,
    };
  });
  return { kind: graph.kind, nodes, edges: graph.edges, selected: null };
}

/** Bar heights are server probabilities and must sum to 1 per variable. */
export function assertBarsNormalized(view: GraphViewModel, tolerance = 1e-9): void {
  for (const node of view.nodes) {
    if (node.kind !== "variable") continue;
    const total = node.bars.reduce((sum, bar) => sum + bar.probability, 0);
    if (Math.abs(total - 1) > tolerance) {
      throw new Error(`bars of ${node.id} sum to ${total}`);
    }
  }
}

export interface InlineError {
  text: string;
  variable?: string;
  value?: string;
}

export class ConsultationViewModel {
  readonly client: ServiceClient;
  kb: KbInfo | null = null;
  sessionId: string | null = null;
  evidence: Record<string, string> = {};
  marginals: Marginals = {};
  baseMarginals: Marginals = {};
  lastQuery: QueryResponse | null = null;
  errorBanner: string | null = null;
  evidenceError: InlineError | null = null;
  stale = false;

  constructor(client: ServiceClient) {
    this.client = client;
  }

  async init(): Promise<void> {
    this.kb = await this.client.kb();
    this.baseMarginals = await this.client.marginals();
    const session = await this.client.openSession();
    this.sessionId = session.id;
    this.evidence = session.evidence;
    this.marginals = session.marginals;
  }

  private requireSession(): string {
    if (this.sessionId === null) throw new Error("session not opened");
    return this.sessionId;
  }

  private async applyEvidence(body: EvidenceBody): Promise<void> {
    try {
      const response = await this.client.setEvidence(this.requireSession(), body);
      this.evidence = response.evidence;
      this.marginals = response.marginals;
      this.evidenceError = null;
      this.errorBanner = null;
      this.stale = false;
    } catch (error) {
      if (error instanceof ApiError && isImpossibleEvidence(error.detail)) {
        // server state unchanged; surface the offending conjunct inline
        this.evidenceError = {
          text: `impossible evidence: ${error.detail.variable} = ${error.detail.value}`,
          variable: error.detail.variable,
          value: error.detail.value,
        };
        return;
      }
      this.errorBanner = error instanceof Error ? error.message : String(error);
      this.stale = true; // displayed numbers may no longer match the server
    }
  }

  setEvidence(variable: string, value: string): Promise<void> {
    return this.applyEvidence({ set: [{ variable, value }], clear: [], reset: false });
  }

  clearEvidence(variable: string): Promise<void> {
    return this.applyEvidence({ set: [], clear: [variable], reset: false });
  }

  clearAllEvidence(): Promise<void> {
    return this.applyEvidence({ set: [], clear: [], reset: true });
  }

  async runQuery(body: QueryBody): Promise<QueryResponse> {
    const response = await this.client.query(this.requireSession(), body);
    this.lastQuery = response;
    return response;
  }
}

function isImpossibleEvidence(
  detail: unknown,
): detail is { error: string; variable: string; value: string } {
  return (
    typeof detail === "object" &&
    detail !== null &&
    (detail as { error?: unknown }).error === "impossible evidence"
  );
}
