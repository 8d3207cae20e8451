/** Node-link view of the state machine.
 *
 * The view is a pure projection of the server's FSM document: nodes carry
 * an origin badge and an active flag (driven by the verification stream),
 * edges carry their event label. Layout is a deterministic circle.
 */

import { FsmDoc } from "./types.js";

export interface FsmNodeView {
  state: string;
  origin: string;
  active: boolean;
  selected: boolean;
  x: number;
  y: number;
}

export interface FsmEdgeView {
  from: string;
  to: string;
  event: string;
  invalid: boolean; // flagged by the verification view
  selfLoop: boolean;
}

export interface FsmGraphView {
  nodes: FsmNodeView[];
  edges: FsmEdgeView[];
  initial: string | null;
}

export interface FsmViewOptions {
  active?: string | null;
  selected?: string | null;
  invalidEdges?: ReadonlySet<string>; // "from|event|to"
  radius?: number;
}

export function edgeKey(from: string, event: string, to: string): string {
  return `${from}|${event}|${to}`;
}

export function buildFsmGraph(doc: FsmDoc, options: FsmViewOptions = {}): FsmGraphView {
  const names = doc.states.map((s) => s.name).sort();
  const r = options.radius ?? 140;
  const cx = r + 60;
  const cy = r + 40;
  const position = new Map<string, { x: number; y: number }>();
  names.forEach((name, i) => {
    const angle = (2 * Math.PI * i) / names.length - Math.PI / 2;
    position.set(name, { x: cx + r * Math.cos(angle), y: cy + r * Math.sin(angle) });
  });
  const byName = new Map(doc.states.map((s) => [s.name, s]));
  const nodes = names.map((name) => ({
    state: name,
    origin: byName.get(name)!.origin,
    active: options.active === name,
    selected: options.selected === name,
    ...position.get(name)!,
  }));
  const invalid = options.invalidEdges ?? new Set<string>();
  const edges = [...doc.transitions]
    .sort((a, b) => edgeKey(a.from, a.event, a.to).localeCompare(edgeKey(b.from, b.event, b.to)))
    .map((t) => ({
      from: t.from,
      to: t.to,
      event: t.event,
      invalid: invalid.has(edgeKey(t.from, t.event, t.to)),
      selfLoop: t.from === t.to,
    }));
  return { nodes, edges, initial: doc.initial };
}

const ORIGIN_BADGE: Record<string, string> = {
  human: "H",
  merged: "M",
  collaged: "C",
  ground_truth: "G",
};

export function renderFsmSvg(view: FsmGraphView, width = 420, height = 380): string {
  const pos = new Map(view.nodes.map((n) => [n.state, n]));
  const parts: string[] = [];
  for (const e of view.edges) {
    const a = pos.get(e.from)!;
    const b = pos.get(e.to)!;
    const stroke = e.invalid ? "#d62728" : "#888";
    if (e.selfLoop) {
      parts.push(
        `<path d="M${a.x},${a.y - 18} C ${a.x - 30},${a.y - 60} ${a.x + 30},${a.y - 60} ${a.x},${a.y - 18}"` +
          ` fill="none" stroke="${stroke}" data-edge="${edgeKey(e.from, e.event, e.to)}"/>`,
        `<text x="${a.x}" y="${a.y - 62}" text-anchor="middle" font-size="10">${e.event}</text>`,
      );
    } else {
      const mx = (a.x + b.x) / 2;
      const my = (a.y + b.y) / 2;
      parts.push(
        `<line x1="${a.x}" y1="${a.y}" x2="${b.x}" y2="${b.y}" stroke="${stroke}"` +
          ` marker-end="url(#arrow)" data-edge="${edgeKey(e.from, e.event, e.to)}"/>`,
        `<text x="${mx}" y="${my - 4}" text-anchor="middle" font-size="10">${e.event}</text>`,
      );
    }
  }
  for (const n of view.nodes) {
    const cls = ["fsm-node"];
    if (n.active) cls.push("active");
    if (n.selected) cls.push("selected");
    const fill = n.active ? "#ffd166" : "#ffffff";
    const stroke = n.selected ? "#000" : "#4e79a7";
    parts.push(
      `<g class="${cls.join(" ")}" data-state="${n.state}" draggable="true">` +
        `<circle cx="${n.x}" cy="${n.y}" r="18" fill="${fill}" stroke="${stroke}" stroke-width="2"/>` +
        `<text x="${n.x}" y="${n.y + 4}" text-anchor="middle" font-size="10">${n.state}</text>` +
        `<text x="${n.x + 14}" y="${n.y - 14}" font-size="9" fill="#666">${ORIGIN_BADGE[n.origin] ?? "?"}</text>` +
        `</g>`,
    );
  }
  const defs =
    `<defs><marker id="arrow" viewBox="0 0 8 8" refX="8" refY="4" markerWidth="6" markerHeight="6"` +
    ` orient="auto"><path d="M0,0 L8,4 L0,8 z" fill="#888"/></marker></defs>`;
  return `<svg class="fsm" width="${width}" height="${height}">${defs}\n${parts.join("\n")}\n</svg>`;
}
