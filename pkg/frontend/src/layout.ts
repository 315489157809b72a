/** Seeded force-directed layout.
 *
 * Deterministic: positions depend only on the graph document and the
 * seed, so rendering snapshots are stable across runs and machines.
 */

import type { GraphDocument } from "./types.js";

export interface Point {
  x: number;
  y: number;
}

export interface LayoutOptions {
  seed?: number;
  width?: number;
  height?: number;
  iterations?: number;
}

/** mulberry32: tiny reproducible PRNG, plenty for scattering nodes */
export function mulberry32(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function forceLayout(
  graph: GraphDocument,
  options: LayoutOptions = {},
): Map<string, Point> {
  const width = options.width ?? 800;
  const height = options.height ?? 600;
  const iterations = options.iterations ?? 150;
  const rng = mulberry32(options.seed ?? 1);

  const ids = graph.nodes.map((n) => n.id);
  const index = new Map(ids.map((id, i) => [id, i]));
  const x = ids.map(() => (0.1 + 0.8 * rng()) * width);
  const y = ids.map(() => (0.1 + 0.8 * rng()) * height);
  const n = ids.length;
  if (n === 0) return new Map();

  const edges: Array<[number, number]> = [];
  for (const edge of graph.edges) {
    const a = index.get(edge.source);
    const b = index.get(edge.target);
    if (a !== undefined && b !== undefined && a !== b) edges.push([a, b]);
  }

  const k = Math.sqrt((width * height) / n);
  for (let step = 0; step < iterations; step++) {
    const dx = new Array<number>(n).fill(0);
    const dy = new Array<number>(n).fill(0);
    for (let i = 0; i < n; i++) {
      for (let j = i + 1; j < n; j++) {
        let ux = x[i]! - x[j]!;
        let uy = y[i]! - y[j]!;
        let d2 = ux * ux + uy * uy;
        if (d2 === 0) {
          // coincident points: nudge apart deterministically
          ux = 1e-3 * (i - j);
          uy = 1e-3;
          d2 = ux * ux + uy * uy;
        }
        const repulse = (k * k) / d2;
        dx[i]! += ux * repulse;
        dy[i]! += uy * repulse;
        dx[j]! -= ux * repulse;
        dy[j]! -= uy * repulse;
      }
    }
    for (const [a, b] of edges) {
      const ux = x[a]! - x[b]!;
      const uy = y[a]! - y[b]!;
      const d = Math.sqrt(ux * ux + uy * uy) || 1e-6;
      const attract = (d * d) / k / d;
      dx[a]! -= ux * attract;
      dy[a]! -= uy * attract;
      dx[b]! += ux * attract;
      dy[b]! += uy * attract;
    }
    const temperature = 0.1 * Math.min(width, height) * (1 - step / iterations);
    for (let i = 0; i < n; i++) {
      const d = Math.sqrt(dx[i]! * dx[i]! + dy[i]! * dy[i]!) || 1e-6;
      const scale = Math.min(d, temperature) / d;
      x[i] = Math.min(width * 0.95, Math.max(width * 0.05, x[i]! + dx[i]! * scale));
      y[i] = Math.min(height * 0.95, Math.max(height * 0.05, y[i]! + dy[i]! * scale));
    }
  }

  return new Map(ids.map((id, i) => [id, { x: x[i]!, y: y[i]! }]));
}
