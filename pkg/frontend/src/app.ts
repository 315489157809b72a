/** Browser entry point: one session per tab, no optimistic updates. */

import { ServiceClient } from "./api.js";
import {
  emptyQueryBuilder,
  toQueryBody,
  validateQueryBuilder,
  type QueryBuilderState,
} from "./querybuilder.js";
import { renderGraphSVG, renderQueryResult, renderReport } from "./render.js";
import {
  assertBarsNormalized,
  buildGraphView,
  ConsultationViewModel,
} from "./viewmodel.js";
import type { GraphKind } from "./types.js";

const LAYOUT_SEED = 7;

export async function mount(root: HTMLElement, client: ServiceClient): Promise<void> {
  const vm = new ConsultationViewModel(client);
  await vm.init();
  let graphKind: GraphKind = "dependency";
  const builder: QueryBuilderState = emptyQueryBuilder();
  builder.imperatives.push({ conclusion: "", premise: "" });

  async function redraw(): Promise<void> {
    const graph = await client.graph(graphKind);
    const view = buildGraphView(graph, vm.marginals, { seed: LAYOUT_SEED });
    assertBarsNormalized(view, 1e-6);
    const kb = vm.kb;
    root.innerHTML = `
      <header>
        <h1>consultation</h1>
        ${vm.errorBanner ? `<div class="banner error">${vm.errorBanner}${vm.stale ? " (displayed data may be stale)" : ""}</div>` : ""}
        ${vm.evidenceError ? `<div class="banner evidence">${vm.evidenceError.text}</div>` : ""}
      </header>
      <nav>
        ${(["dependency", "mixed", "structure"] as GraphKind[])
          .map((kind) => `<button data-kind="${kind}"${kind === graphKind ? " disabled" : ""}>${kind}</button>`)
          .join("")}
        <button data-action="clear-evidence">clear evidence</button>
        <span class="evidence-list">${Object.entries(vm.evidence)
          .map(([variable, value]) => `${variable}=${value}`)
          .join(", ")}</span>
      </nav>
      <main>${renderGraphSVG(view)}</main>
      <section class="query">
        <textarea id="hypotheticals" placeholder="0.9 float * => Bronchitis | Cancer (one per line)"></textarea>
        <textarea id="imperatives" placeholder="Smoking or Smoking | VisitAsia (one per line)"></textarea>
        <button data-action="run-query">run query</button>
        <div id="messages">${builder.messages.join("<br>")}</div>
        <div id="result">
          ${vm.lastQuery ? renderQueryResult(toQueryBody(builder), vm.lastQuery) : ""}
          ${vm.lastQuery?.projection ? renderReport(vm.lastQuery.projection) : ""}
        </div>
      </section>
      <footer>${kb ? renderReport(kb.report) : ""}</footer>`;
  }

  root.addEventListener("click", (event) => {
    const target = event.target as HTMLElement;
    const kind = target.dataset.kind as GraphKind | undefined;
    if (kind) {
      graphKind = kind;
      void redraw();
      return;
    }
    if (target.dataset.action === "clear-evidence") {
      void vm.clearAllEvidence().then(redraw);
      return;
    }
    if (target.dataset.action === "run-query") {
      void submitQuery();
      return;
    }
    const variable = target.dataset.variable;
    const value = target.dataset.value;
    if (variable && value) {
      // clicking a bar toggles that value as evidence
      const change =
        vm.evidence[variable] === value
          ? vm.clearEvidence(variable)
          : vm.setEvidence(variable, value);
      void change.then(redraw);
    }
  });

  async function submitQuery(): Promise<void> {
    const hypText = (root.querySelector("#hypotheticals") as HTMLTextAreaElement).value;
    const impText = (root.querySelector("#imperatives") as HTMLTextAreaElement).value;
    builder.hypotheticals = hypText
      .split("\n")
      .map((line) => line.trim())
      .filter((line) => line !== "")
      .map((line) => {
        // "<probability> <mode> <premise> => <conclusion>" or "<probability> <mode> <fact>"
        const match = line.match(/^([01]?\.?\d*)\s+(float|ground)\s+(.*)$/);
        const rest = match ? match[3]! : line;
        const parts = rest.split("=>");
        return {
          probability: match ? Number(match[1]) : 1.0,
          mode: match ? (match[2] as "float" | "ground") : "float",
          premise: parts.length > 1 ? parts[0]!.trim() : "*",
          conclusion: (parts.length > 1 ? parts[1]! : parts[0]!).trim(),
        };
      });
    builder.imperatives = impText
      .split("\n")
      .map((line) => line.trim())
      .filter((line) => line !== "")
      .map((line) => {
        const split = splitTopLevelBar(line);
        return { conclusion: split.conclusion, premise: split.premise ?? "" };
      });
    if (vm.kb) {
      builder.messages = validateQueryBuilder(builder, vm.kb);
      if (builder.messages.length > 0) {
        await redraw();
        return;
      }
    }
    try {
      await vm.runQuery(toQueryBody(builder));
    } catch (error) {
      builder.messages = [error instanceof Error ? error.message : String(error)];
    }
    await redraw();
  }

  await redraw();
}

/** split "B | A" into conclusion/premise at the top-level bar, if any */
export function splitTopLevelBar(line: string): { conclusion: string; premise: string | null } {
  let depth = 0;
  for (let i = 0; i < line.length; i++) {
    const ch = line[i];
    if (ch === "(") depth += 1;
    else if (ch === ")") depth -= 1;
    else if (ch === "|" && depth === 0) {
      return { conclusion: line.slice(0, i).trim(), premise: line.slice(i + 1).trim() };
    }
  }
  return { conclusion: line.trim(), premise: null };
}

if (typeof document !== "undefined") {
  const root = document.getElementById("app");
  if (root) {
    void mount(root, new ServiceClient({ baseUrl: "" }));
  }
}
