import { formatValue } from "./format";
import type { RegistryDoc, ShockTarget, SimulateDoc } from "./types";

const SVG_NS = "http://www.w3.org/2000/svg";
const WIDTH = 640;
const HEIGHT = 260;
const PAD = 32;

const PALETTE = [
  "#c0392b",
  "#2471a3",
  "#1e8449",
  "#b7950b",
  "#7d3c98",
  "#148f77",
];

export interface SeriesLine {
  label: string;
  points: number[];
}

/** Pull the per-step losses for the watched cells out of a simulate response. */
export function extractLines(
  registry: RegistryDoc,
  doc: SimulateDoc,
  watch: ShockTarget[],
): SeriesLine[] | null {
  const series = doc.series;
  if (!series) {
    return null;
  }
  return watch.map((cell) => {
    const c = registry.countries.indexOf(cell.country);
    const p = registry.products.indexOf(cell.product);
    const points = series.map((step) => (step[c] ?? [])[p] ?? 0);
    return { label: `${cell.country} ${cell.product}`, points };
  });
}

/**
 * Step-indexed loss lines for the watched cells. The y axis is pinned to
 * [0, 1] so runs are comparable, and every point carries the exact API value
 * on the marker. Responses computed without the timeseries flag have no
 * series block, in which case the chart is replaced by a prompt to re-run.
 */
export function renderTimeseries(
  registry: RegistryDoc,
  doc: SimulateDoc,
  watch: ShockTarget[],
): HTMLElement {
  const root = document.createElement("div");
  root.className = "timeseries";

  const lines = extractLines(registry, doc, watch);
  if (lines === null) {
    const prompt = document.createElement("p");
    prompt.className = "rerun-prompt";
    prompt.textContent =
      "This report has no time series. Re-run the scenario with the " +
      "time series option enabled to see losses step by step.";
    root.appendChild(prompt);
    return root;
  }

  const steps = doc.series ? doc.series.length : 0;
  const xFor = (step: number): number =>
    PAD + (step * (WIDTH - 2 * PAD)) / Math.max(1, steps - 1);
  const yFor = (value: number): number =>
    HEIGHT - PAD - Math.min(1, Math.max(0, value)) * (HEIGHT - 2 * PAD);

  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
  svg.setAttribute("class", "timeseries-chart");

  const axis = document.createElementNS(SVG_NS, "line");
  axis.setAttribute("x1", String(PAD));
  axis.setAttribute("y1", String(yFor(0)));
  axis.setAttribute("x2", String(WIDTH - PAD));
  axis.setAttribute("y2", String(yFor(0)));
  axis.setAttribute("class", "axis");
  svg.appendChild(axis);

  lines.forEach((line, k) => {
    const color = PALETTE[k % PALETTE.length] ?? "#000000";
    const path = document.createElementNS(SVG_NS, "polyline");
    path.setAttribute(
      "points",
      line.points.map((v, step) => `${xFor(step)},${yFor(v)}`).join(" "),
    );
    path.setAttribute("fill", "none");
    path.setAttribute("stroke", color);
    path.setAttribute("class", "series-line");
    path.setAttribute("data-label", line.label);
    svg.appendChild(path);

    line.points.forEach((value, step) => {
      const dot = document.createElementNS(SVG_NS, "circle");
      dot.setAttribute("cx", String(xFor(step)));
      dot.setAttribute("cy", String(yFor(value)));
      dot.setAttribute("r", "3");
      dot.setAttribute("fill", color);
      dot.setAttribute("class", "series-point");
      dot.setAttribute("data-label", line.label);
      dot.setAttribute("data-step", String(step));
      dot.setAttribute("data-value", formatValue(value));
      const tip = document.createElementNS(SVG_NS, "title");
      tip.textContent = formatValue(value);
      dot.appendChild(tip);
      svg.appendChild(dot);
    });
  });
  root.appendChild(svg);

  const legend = document.createElement("ul");
  legend.className = "legend";
  lines.forEach((line, k) => {
    const item = document.createElement("li");
    item.className = "legend-entry";
    item.textContent = line.label;
    item.style.color = PALETTE[k % PALETTE.length] ?? "#000000";
    legend.appendChild(item);
  });
  root.appendChild(legend);
  return root;
}
