import { formatValue } from "./format";
import { colorFor } from "./heatmap";
import type { DecomposeDoc } from "./types";

/**
 * Split-cell grid for a loss decomposition. Each region by product cell is
 * halved: the left half carries the losses that arrived over trade links,
 * the right half those that arrived through conversion inside the country.
 * For the shocked input product itself the two halves agree by construction.
 */
export function renderDecomposition(doc: DecomposeDoc): HTMLElement {
  const root = document.createElement("div");
  root.className = "decomposition";

  const sameShape =
    doc.cross.length === doc.within.length &&
    doc.cross.every((row, i) => row.length === (doc.within[i] ?? []).length);
  if (!sameShape) {
    const banner = document.createElement("p");
    banner.className = "error-banner";
    banner.textContent =
      "Decomposition halves have mismatched shapes; refusing to draw the grid.";
    root.appendChild(banner);
    return root;
  }

  const caption = document.createElement("p");
  caption.className = "decomposition-caption";
  caption.textContent =
    `Losses from the ${doc.shock_country} ${doc.input_product} shock, split ` +
    "into trade imports (left half) and home conversion (right half).";
  root.appendChild(caption);

  const table = document.createElement("table");
  table.className = "decomposition-grid";
  const head = document.createElement("tr");
  head.appendChild(document.createElement("th"));
  for (const product of doc.products) {
    const th = document.createElement("th");
    th.textContent = product;
    head.appendChild(th);
  }
  table.appendChild(head);

  doc.regions.forEach((region, i) => {
    const tr = document.createElement("tr");
    const th = document.createElement("th");
    th.textContent = region;
    tr.appendChild(th);
    const crossRow = doc.cross[i] ?? [];
    const withinRow = doc.within[i] ?? [];
    doc.products.forEach((product, j) => {
      const cross = crossRow[j] ?? 0;
      const within = withinRow[j] ?? 0;
      const td = document.createElement("td");
      td.className = "split-cell";
      if (cross === 0 && within === 0) {
        td.classList.add("neutral");
      }
      td.setAttribute("data-region", region);
      td.setAttribute("data-product", product);

      const left = document.createElement("span");
      left.className = "half left";
      left.title = formatValue(cross);
      left.setAttribute("data-value", formatValue(cross));
      left.style.backgroundColor = colorFor(cross);

      const right = document.createElement("span");
      right.className = "half right";
      right.title = formatValue(within);
      right.setAttribute("data-value", formatValue(within));
      right.style.backgroundColor = colorFor(within);

      td.appendChild(left);
      td.appendChild(right);
      tr.appendChild(td);
    });
    table.appendChild(tr);
  });
  root.appendChild(table);
  return root;
}
