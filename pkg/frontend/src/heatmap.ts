/** Correlation heatmap: annotation rows vs sensing-cluster columns.
 *
 * Cell intensity is the fraction of an annotation's windows that fell
 * into the cluster; column headers reuse the scatter's cluster colours.
 */

import { Legend } from "./scatter.js";
import { CorrelationDoc } from "./types.js";

export interface HeatmapCellView {
  row: string;
  col: number;
  fraction: number;
  selected: boolean;
}

export interface HeatmapView {
  rows: string[];
  cols: number[];
  cells: HeatmapCellView[][];
}

export function buildHeatmap(
  correlation: CorrelationDoc,
  selectedRow: string | null = null,
): HeatmapView {
  const cells = correlation.rows.map((row, i) =>
    correlation.cols.map((col, j) => ({
      row,
      col,
      fraction: correlation.cells[i][j],
      selected: row === selectedRow,
    })),
  );
  return { rows: [...correlation.rows], cols: [...correlation.cols], cells };
}

function shade(fraction: number): string {
  const level = Math.round(255 - fraction * 180);
  return `rgb(${level},${level},255)`;
}

export function renderHeatmapSvg(view: HeatmapView, legend: Legend, cell = 36): string {
  const left = 120;
  const top = 24;
  const width = left + view.cols.length * cell;
  const height = top + view.rows.length * cell;
  const parts: string[] = [];
  view.cols.forEach((col, j) => {
    const color = legend.clusterColor.get(col) ?? "#555555";
    parts.push(
      `<text x="${left + j * cell + cell / 2}" y="16" text-anchor="middle" fill="${color}">` +
        `${col}</text>`,
    );
  });
  view.rows.forEach((row, i) => {
    parts.push(
      `<text x="${left - 6}" y="${top + i * cell + cell / 2 + 4}" text-anchor="end" data-row="${row}">` +
        `${row}</text>`,
    );
    view.cells[i].forEach((c, j) => {
      const border = c.selected ? ` stroke="#000" stroke-width="2"` : ` stroke="#ddd"`;
      parts.push(
        `<rect x="${left + j * cell}" y="${top + i * cell}" width="${cell}" height="${cell}"` +
          ` fill="${shade(c.fraction)}"${border} data-row="${c.row}" data-col="${c.col}"/>`,
        `<text x="${left + j * cell + cell / 2}" y="${top + i * cell + cell / 2 + 4}"` +
          ` text-anchor="middle" font-size="10">${c.fraction.toFixed(2)}</text>`,
      );
    });
  });
  return `<svg class="heatmap" width="${width}" height="${height}">\n${parts.join("\n")}\n</svg>`;
}
