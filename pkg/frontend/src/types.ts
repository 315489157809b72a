/** Payload types mirroring the consultation service's JSON bodies. */

export type VariableKind = "boolean" | "nominal" | "ordinal";
export type RuleMode = "float" | "ground";
export type SolveStatus = "converged" | "inconsistent" | "sweep-limit";

export interface KbVariable {
  name: string;
  kind: VariableKind;
  values: string[];
}

export interface KbRule {
  id: string;
  premise: string;
  conclusion: string;
  target: number;
  mode: RuleMode;
}

export interface KbOptions {
  tolerance: number;
  max_sweeps: number;
  heuristic: string;
}

export interface RuleResidual {
  rule_id: string;
  achieved: number;
  target: number;
  residual: number;
}

export interface LedgerEntry {
  sweep: number;
  rule_id: string;
  increment_bits: number;
  cumulative_bits: number;
  absolute_entropy_bits: number;
  uniform_minus_cumulative: number;
}

export interface LedgerSnapshot {
  status: SolveStatus;
  sweeps: number;
  message: string;
  offenders: string[];
  residuals: RuleResidual[];
  uniform_entropy_bits: number;
  cumulative_bits: number;
  entries: LedgerEntry[];
}

export interface KbInfo {
  variables: KbVariable[];
  rules: KbRule[];
  options: KbOptions;
  report: LedgerSnapshot;
}

/** name -> value -> probability, straight from the server */
export type Marginals = Record<string, Record<string, number>>;

export type GraphKind = "dependency" | "mixed" | "structure";

export interface GraphNode {
  id: string;
  variables?: string[];
}

export interface GraphEdge {
  source: string;
  target: string;
  directed?: boolean;
  separator?: string[];
}

export interface GraphDocument {
  kind: GraphKind;
  nodes: GraphNode[];
  edges: GraphEdge[];
}

export interface SessionState {
  id: string;
  created: number;
  evidence: Record<string, string>;
  marginals: Marginals;
}

export interface EvidenceItem {
  variable: string;
  value: string;
}

export interface EvidenceBody {
  set: EvidenceItem[];
  clear: string[];
  reset: boolean;
}

export interface EvidenceResponse {
  id: string;
  evidence: Record<string, string>;
  marginals: Marginals;
}

export interface HypotheticalBody {
  conclusion: string;
  premise: string;
  probability: number;
  mode: RuleMode;
}

export interface ImperativeBody {
  conclusion: string;
  premise: string | null;
}

export interface QueryBody {
  hypotheticals: HypotheticalBody[];
  imperatives: ImperativeBody[];
}

export interface QueryValue {
  probability: number | null;
  note: string;
}

export interface QueryResponse {
  values: QueryValue[];
  projection: LedgerSnapshot | null;
}

export interface LearnBody {
  alpha: number;
  csv: string;
}

export interface LearnResponse {
  report: LedgerSnapshot;
  warnings: string[];
  applied: boolean;
}

/** structured detail of an impossible-evidence 422 */
export interface ImpossibleEvidenceDetail {
  error: "impossible evidence";
  variable: string;
  value: string;
}
