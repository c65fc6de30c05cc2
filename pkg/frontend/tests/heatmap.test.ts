import { describe, expect, it } from "vitest";

import {
  colorFor,
  gridFromSimulation,
  gridToCsv,
  renderLossHeatmap,
} from "../src/heatmap";
import registry from "./fixtures/registry.json";
import chain from "./fixtures/simulate_chain.json";
import empty from "./fixtures/simulate_empty.json";

describe("loss heatmap", () => {
  it("renders one cell per region and product with the exact API tooltip", () => {
    const view = renderLossHeatmap(gridFromSimulation(registry, chain));
    const cells = view.querySelectorAll("td.cell");
    expect(cells.length).toBe(
      registry.region_names.length * registry.products.length,
    );
    registry.region_names.forEach((region, i) => {
      registry.products.forEach((product, j) => {
        const cell = view.querySelector(
          `td.cell[data-region="${region}"][data-product="${product}"]`,
        );
        expect(cell).not.toBeNull();
        expect(cell!.getAttribute("title")).toBe(
          String(chain.rl_regional[i]![j]!),
        );
      });
    });
  });

  it("keeps the color ramp monotone over the fixed [0, 1] bounds", () => {
    const lightness = (value: number): number => {
      const match = /([\d.]+)%\)$/.exec(colorFor(value));
      expect(match).not.toBeNull();
      return Number(match![1]);
    };
    const samples = [0, 0.1, 0.25, 0.333333333, 0.5, 0.666666667, 0.9, 1];
    for (let i = 1; i < samples.length; i += 1) {
      expect(lightness(samples[i]!)).toBeLessThan(lightness(samples[i - 1]!));
    }
    expect(colorFor(1.5)).toBe(colorFor(1));
    expect(colorFor(-0.5)).toBe(colorFor(0));
  });

  it("shows an explicit empty state when every cell is zero", () => {
    const view = renderLossHeatmap(gridFromSimulation(registry, empty));
    expect(view.querySelector(".empty-state")).not.toBeNull();
    expect(view.querySelectorAll("td.cell").length).toBe(0);
  });

  it("exports the visible grid as CSV, one line per region row", () => {
    const grid = gridFromSimulation(registry, chain);
    const csv = gridToCsv(grid);
    const lines = csv.trim().split("\n");
    expect(lines.length).toBe(1 + chain.rl_regional.length);
    expect(lines[0]).toBe("region," + registry.products.join(","));
    chain.rl_regional.forEach((row, i) => {
      const expected = [registry.region_names[i]!, ...row.map(String)].join(",");
      expect(lines[i + 1]).toBe(expected);
    });

    const link = renderLossHeatmap(grid).querySelector("a.csv-download");
    expect(link).not.toBeNull();
    const href = link!.getAttribute("href")!;
    const payload = decodeURIComponent(href.split(",").slice(1).join(","));
    expect(payload).toBe(csv);
  });
});
