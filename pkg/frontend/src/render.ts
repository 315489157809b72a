/** SVG/HTML rendering as plain strings.
 *
 * Numbers are rendered with String(n), never rounded: what the server
 * said is what the page shows. Pure functions so tests can assert on
 * the exact markup without a DOM.
 */

import type { GraphViewModel, ViewNode } from "./viewmodel.js";
import type { LedgerSnapshot, QueryBody, QueryResponse } from "./types.js";

const BAR_WIDTH = 18;
const BAR_MAX = 60;
const NODE_HALF = 34;

export function escapeXml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function renderBars(node: ViewNode): string {
  const parts: string[] = [];
  node.bars.forEach((bar, i) => {
    const height = bar.probability * BAR_MAX;
    const x = node.position.x - (node.bars.length * BAR_WIDTH) / 2 + i * BAR_WIDTH;
    const y = node.position.y + NODE_HALF - height;
    parts.push(
      `<rect class="bar" data-variable="${escapeXml(node.id)}" ` +
        `data-value="${escapeXml(bar.value)}" x="${x}" y="${y}" ` +
        `width="${BAR_WIDTH - 2}" height="${height}">` +
        `<title>${escapeXml(`${node.id} = ${bar.value}: ${String(bar.probability)}`)}</title>` +
        `</rect>`,
      `<text class="bar-label" x="${x + (BAR_WIDTH - 2) / 2}" ` +
        `y="${node.position.y + NODE_HALF + 12}">${escapeXml(bar.value)}</text>`,
    );
  });
  return parts.join("");
}

function renderNode(node: ViewNode, selected: boolean): string {
  const cls = selected ? "node selected" : "node";
  if (node.kind === "hyperedge") {
    const label = node.variables ? `{${node.variables.join(", ")}}` : node.id;
    return (
      `<g class="${cls}" data-node="${escapeXml(node.id)}">` +
      `<ellipse cx="${node.position.x}" cy="${node.position.y}" rx="${NODE_HALF + 12}" ry="${NODE_HALF - 10}"/>` +
      `<text x="${node.position.x}" y="${node.position.y + 4}">${escapeXml(label)}</text>` +
      `</g>`
    );
  }
  return (
    `<g class="${cls}" data-node="${escapeXml(node.id)}">` +
    `<text class="node-name" x="${node.position.x}" y="${node.position.y - NODE_HALF - 6}">` +
    `${escapeXml(node.id)}</text>` +
    renderBars(node) +
    `</g>`
  );
}

export function renderGraphSVG(view: GraphViewModel, width = 800, height = 600): string {
  const byId = new Map(view.nodes.map((node) => [node.id, node]));
  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${width} ${height}" class="graph graph-${view.kind}">`,
    `<defs><marker id="arrow" viewBox="0 0 8 8" refX="8" refY="4" markerWidth="6" markerHeight="6" orient="auto"><path d="M0,0 L8,4 L0,8 z"/></marker></defs>`,
  ];
  for (const edge of view.edges) {
    const a = byId.get(edge.source);
    const b = byId.get(edge.target);
    if (!a || !b) continue;
    const marker = edge.directed ? ` marker-end="url(#arrow)"` : "";
    parts.push(
      `<line class="edge" x1="${a.position.x}" y1="${a.position.y}" ` +
        `x2="${b.position.x}" y2="${b.position.y}"${marker}/>`,
    );
    if (edge.separator && edge.separator.length > 0) {
      const mx = (a.position.x + b.position.x) / 2;
      const my = (a.position.y + b.position.y) / 2;
      parts.push(
        `<text class="separator" x="${mx}" y="${my}">` +
          `${escapeXml(edge.separator.join(", "))}</text>`,
      );
    }
  }
  for (const node of view.nodes) {
    parts.push(renderNode(node, view.selected === node.id));
  }
  parts.push("</svg>");
  return parts.join("\n");
}

export function renderQueryResult(body: QueryBody, response: QueryResponse): string {
  const lines = response.values.map((value, i) => {
    const imperative = body.imperatives[i];
    const head = imperative
      ? imperative.premise === null
        ? `P(${imperative.conclusion})`
        : `P(${imperative.conclusion} | ${imperative.premise})`
      : `P(?)`;
    const shown =
      value.probability === null
        ? `undefined (${value.note})`
        : String(value.probability);
    return `<li class="query-value">${escapeXml(`${head} = ${shown}`)}</li>`;
  });
  return `<ul class="query-result">${lines.join("")}</ul>`;
}

export function renderReport(snapshot: LedgerSnapshot): string {
  const rows = snapshot.residuals
    .map(
      (r) =>
        `<tr><td>${escapeXml(r.rule_id)}</td><td>${String(r.target)}</td>` +
        `<td>${Number.isNaN(r.achieved) ? "undefined" : String(r.achieved)}</td>` +
        `<td>${String(r.residual)}</td></tr>`,
    )
    .join("");
  const offenders =
    snapshot.offenders.length > 0
      ? `<p class="offenders">offending rules: ${escapeXml(snapshot.offenders.join(", "))}</p>`
      : "";
  return (
    `<div class="report report-${snapshot.status}">` +
    `<p>status: ${escapeXml(snapshot.status)}; sweeps: ${snapshot.sweeps}</p>` +
    offenders +
    (snapshot.message ? `<p>${escapeXml(snapshot.message)}</p>` : "") +
    `<table class="residuals"><thead><tr><th>rule</th><th>target</th>` +
    `<th>achieved</th><th>residual</th></tr></thead><tbody>${rows}</tbody></table>` +
    `<p>uniform entropy: ${String(snapshot.uniform_entropy_bits)} bits; ` +
    `information gained: ${String(snapshot.cumulative_bits)} bits</p>` +
    `</div>`
  );
}
