import { csvField, formatValue } from "./format";
import type { RegistryDoc, SimulateDoc } from "./types";

export interface HeatmapGrid {
  /** row labels, registry region order */
  rows: string[];
  /** column labels, registry product order */
  cols: string[];
  /** rows x cols relative losses straight from the API */
  values: number[][];
}

export function gridFromSimulation(
  registry: RegistryDoc,
  doc: SimulateDoc,
): HeatmapGrid {
  return {
    rows: [...registry.region_names],
    cols: [...registry.products],
    values: doc.rl_regional,
  };
}

/**
 * Color for a relative loss. The ramp is anchored to the fixed [0, 1] range
 * rather than the data's own extent, so two scenarios side by side share a
 * scale, and lightness falls strictly as the loss grows.
 */
export function colorFor(value: number): string {
  const clamped = Math.min(1, Math.max(0, value));
  const lightness = 98 - 58 * clamped;
  return `hsl(8, 76%, ${lightness}%)`;
}

export function gridToCsv(grid: HeatmapGrid): string {
  const header = ["region", ...grid.cols.map(csvField)].join(",");
  const lines = grid.rows.map((label, i) => {
    const row = grid.values[i] ?? [];
    return [csvField(label), ...row.map((v) => formatValue(v))].join(",");
  });
  return [header, ...lines].join("\n") + "\n";
}

/**
 * Region by product loss grid. Every cell gets the exact API value as its
 * tooltip, and the rendered grid can be taken home as CSV. All-zero reports
 * short-circuit to an empty-state note instead of an all-white table.
 */
export function renderLossHeatmap(grid: HeatmapGrid): HTMLElement {
  const root = document.createElement("div");
  root.className = "heatmap";

  const allZero = grid.values.every((row) => row.every((v) => v === 0));
  if (allZero) {
    const note = document.createElement("p");
    note.className = "empty-state";
    note.textContent =
      "No losses anywhere: every region by product cell is zero for this scenario.";
    root.appendChild(note);
    return root;
  }

  const table = document.createElement("table");
  table.className = "heatmap-grid";
  const head = document.createElement("tr");
  head.appendChild(document.createElement("th"));
  for (const col of grid.cols) {
    const th = document.createElement("th");
    th.textContent = col;
    head.appendChild(th);
  }
  table.appendChild(head);

  grid.rows.forEach((label, i) => {
    const tr = document.createElement("tr");
    const th = document.createElement("th");
    th.textContent = label;
    tr.appendChild(th);
    const row = grid.values[i] ?? [];
    row.forEach((value, j) => {
      const td = document.createElement("td");
      td.className = "cell";
      td.title = formatValue(value);
      td.setAttribute("data-region", label);
      td.setAttribute("data-product", grid.cols[j] ?? "");
      td.setAttribute("data-value", formatValue(value));
      td.style.backgroundColor = colorFor(value);
      tr.appendChild(td);
    });
    table.appendChild(tr);
  });
  root.appendChild(table);

  const link = document.createElement("a");
  link.className = "csv-download";
  link.textContent = "Download CSV";
  link.setAttribute("download", "losses.csv");
  link.href = "data:text/csv;charset=utf-8," + encodeURIComponent(gridToCsv(grid));
  root.appendChild(link);
  return root;
}
