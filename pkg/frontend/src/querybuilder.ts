/** Query builder state and pre-submission validation.
 *
 * Validation is a light syntactic screen against the server-provided
 * schema (known names, balanced parens, probability bounds) so typos
 * fail fast; the server's parser remains the authority.
 */

import type { KbInfo, QueryBody, QueryResponse, RuleMode } from "./types.js";

export interface HypotheticalRow {
  conclusion: string;
  premise: string; // "*" for unconditioned facts
  probability: number;
  mode: RuleMode;
}

export interface ImperativeRow {
  conclusion: string;
  premise: string; // empty string means unconditional
}

export interface QueryBuilderState {
  hypotheticals: HypotheticalRow[];
  imperatives: ImperativeRow[];
  lastResult: QueryResponse | null;
  messages: string[];
}

export function emptyQueryBuilder(): QueryBuilderState {
  return { hypotheticals: [], imperatives: [], lastResult: null, messages: [] };
}

const OPERATOR_WORDS = new Set(["in", "notin"]);

export function sentenceProblems(text: string, kb: KbInfo, label: string): string[] {
  const problems: string[] = [];
  const trimmed = text.trim();
  if (trimmed === "") {
    return [`${label}: empty sentence`];
  }
  let depth = 0;
  for (const ch of trimmed) {
    if (ch === "(") depth += 1;
    if (ch === ")") depth -= 1;
    if (depth < 0) break;
  }
  if (depth !== 0) problems.push(`${label}: unbalanced parentheses`);

  const known = new Set<string>();
  for (const variable of kb.variables) {
    known.add(variable.name);
    for (const value of variable.values) known.add(value);
  }
  for (const word of trimmed.match(/[A-Za-z_][A-Za-z0-9_]*/g) ?? []) {
    if (!known.has(word) && !OPERATOR_WORDS.has(word)) {
      problems.push(`${label}: unknown name '${word}'`);
    }
  }
  return problems;
}

export function validateQueryBuilder(state: QueryBuilderState, kb: KbInfo): string[] {
  const messages: string[] = [];
  state.hypotheticals.forEach((row, i) => {
    const label = `hypothetical ${i + 1}`;
    messages.push(...sentenceProblems(row.conclusion, kb, `${label} conclusion`));
    if (row.premise.trim() !== "*") {
      messages.push(...sentenceProblems(row.premise, kb, `${label} premise`));
    }
    if (!(row.probability >= 0 && row.probability <= 1)) {
      messages.push(`${label}: probability ${row.probability} outside [0, 1]`);
    }
    if (row.mode !== "float" && row.mode !== "ground") {
      messages.push(`${label}: unknown mode '${row.mode}'`);
    }
  });
  if (state.imperatives.length === 0) {
    messages.push("at least one evaluation line is required");
  }
  state.imperatives.forEach((row, i) => {
    const label = `evaluation ${i + 1}`;
    messages.push(...sentenceProblems(row.conclusion, kb, label));
    if (row.premise.trim() !== "") {
      messages.push(...sentenceProblems(row.premise, kb, `${label} premise`));
    }
  });
  return messages;
}

export function toQueryBody(state: QueryBuilderState): QueryBody {
  return {
    hypotheticals: state.hypotheticals.map((row) => ({
      conclusion: row.conclusion.trim(),
      premise: row.premise.trim() || "*",
      probability: row.probability,
      mode: row.mode,
    })),
    imperatives: state.imperatives.map((row) => ({
      conclusion: row.conclusion.trim(),
      premise: row.premise.trim() === "" ? null : row.premise.trim(),
    })),
  };
}
