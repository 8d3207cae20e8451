/** Scatter view: one marker per window in the 2-D embedding.
 *
 * Cluster id picks the colour, annotation picks the marker shape; both
 * keys come from shared legends so the scatter, heatmap, and FSM views
 * stay consistent with each other.
 */

import { EmbeddingDoc, ScatterPoint } from "./types.js";

export const CLUSTER_COLORS = [
  "#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#b07aa1",
  "#76b7b2", "#edc948", "#ff9da7", "#9c755f", "#bab0ac",
];
export const NOISE_COLOR = "#555555";
export const SHAPES = ["circle", "square", "triangle", "diamond", "cross", "ring"] as const;
export type Shape = (typeof SHAPES)[number];

export interface ScatterPointView {
  windowId: number;
  x: number;
  y: number;
  colorKey: string; // cluster colour
  shapeKey: Shape; // annotation marker
  cluster: number | null;
  annotation: string | null;
  selected: boolean;
}

export interface Legend {
  clusterColor: Map<number, string>;
  annotationShape: Map<string, Shape>;
}

export function buildLegend(points: ScatterPoint[]): Legend {
  const clusters = [...new Set(points.map((p) => p.cluster).filter((c): c is number => c !== null))]
    .sort((a, b) => a - b);
  const clusterColor = new Map<number, string>();
  clusters.forEach((c, i) => {
    clusterColor.set(c, c < 0 ? NOISE_COLOR : CLUSTER_COLORS[i % CLUSTER_COLORS.length]);
  });
  const annotations = [...new Set(
    points.map((p) => p.annotation).filter((a): a is string => a !== null),
  )].sort();
  const annotationShape = new Map<string, Shape>();
  annotations.forEach((a, i) => annotationShape.set(a, SHAPES[i % SHAPES.length]));
  return { clusterColor, annotationShape };
}

export function buildScatter(
  embedding: EmbeddingDoc,
  legend: Legend,
  selection: ReadonlySet<number>,
): ScatterPointView[] {
  return embedding.points.map((p) => ({
    windowId: p.window_id,
    x: p.x,
    y: p.y,
    colorKey: p.cluster === null ? NOISE_COLOR : legend.clusterColor.get(p.cluster) ?? NOISE_COLOR,
    shapeKey: p.annotation === null ? "circle" : legend.annotationShape.get(p.annotation) ?? "circle",
    cluster: p.cluster,
    annotation: p.annotation,
    selected: selection.has(p.window_id),
  }));
}

function marker(shape: Shape, cx: number, cy: number, r: number): string {
  switch (shape) {
    case "square":
      return `<rect x="${cx - r}" y="${cy - r}" width="${2 * r}" height="${2 * r}"`;
    case "triangle":
      return `<polygon points="${cx},${cy - r} ${cx - r},${cy + r} ${cx + r},${cy + r}"`;
    case "diamond":
      return `<polygon points="${cx},${cy - r} ${cx + r},${cy} ${cx},${cy + r} ${cx - r},${cy}"`;
    case "cross":
      return `<path d="M${cx - r},${cy} H${cx + r} M${cx},${cy - r} V${cy + r}" stroke-width="2"`;
    case "ring":
      return `<circle cx="${cx}" cy="${cy}" r="${r}" fill="none" stroke-width="2"`;
    default:
      return `<circle cx="${cx}" cy="${cy}" r="${r}"`;
  }
}

export function renderScatterSvg(
  views: ScatterPointView[],
  width = 420,
  height = 420,
  radius = 4,
): string {
  if (views.length === 0) {
    return `<svg class="scatter" width="${width}" height="${height}"></svg>`;
  }
  const xs = views.map((v) => v.x);
  const ys = views.map((v) => v.y);
  const pad = 16;
  const sx = (x: number) =>
    pad + ((x - Math.min(...xs)) / (Math.max(...xs) - Math.min(...xs) || 1)) * (width - 2 * pad);
  const sy = (y: number) =>
    height - pad - ((y - Math.min(...ys)) / (Math.max(...ys) - Math.min(...ys) || 1)) * (height - 2 * pad);
  const markers = views
    .map((v) => {
      const sel = v.selected ? ` class="selected" stroke="#000"` : "";
      const color = v.shapeKey === "cross" || v.shapeKey === "ring"
        ? ` stroke="${v.colorKey}"`
        : ` fill="${v.colorKey}"`;
      return `${marker(v.shapeKey, sx(v.x), sy(v.y), radius)}${color}${sel} data-window="${v.windowId}"/>`;
    })
    .join("\n");
  return `<svg class="scatter" width="${width}" height="${height}">\n${markers}\n</svg>`;
}
