import { describe, expect, it } from "vitest";

import { renderExposure } from "../src/exposure";
import doc from "./fixtures/exposure_cor_pig.json";

describe("exposure view", () => {
  it("renders one row per entry with values straight from the payload", () => {
    const view = renderExposure(doc);
    const rows = view.querySelectorAll("tr.exposure-row");
    expect(rows.length).toBe(doc.entries.length);
    rows.forEach((row, i) => {
      const cells = row.querySelectorAll("td");
      const entry = doc.entries[i]!;
      expect(cells[0]!.textContent).toBe(String(doc.offset + i + 1));
      expect(cells[1]!.textContent).toBe(entry.shock_country);
      expect(cells[2]!.textContent).toBe(entry.shock_product);
      expect(cells[3]!.textContent).toBe(String(entry.rl));
      expect(cells[3]!.getAttribute("title")).toBe(String(entry.rl));
    });
  });

  it("keeps the server's ranking untouched", () => {
    const view = renderExposure(doc);
    const values = [...view.querySelectorAll("td.exposure-value")].map(
      (cell) => Number(cell.textContent),
    );
    const sorted = [...values].sort((a, b) => b - a);
    expect(values).toEqual(sorted);
    expect(values[0]).toBe(1);
  });
});
