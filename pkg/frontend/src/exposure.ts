import { formatValue } from "./format";
import type { ExposureDoc } from "./types";

/**
 * Ranked table of single-cell shocks hitting one country and product, in the
 * server's order (largest losses first). Values land in the cells verbatim.
 */
export function renderExposure(doc: ExposureDoc): HTMLElement {
  const root = document.createElement("div");
  root.className = "exposure";

  const caption = document.createElement("p");
  caption.className = "exposure-caption";
  caption.textContent =
    `Shocks ranked by their impact on ${doc.country} ${doc.product} ` +
    `(${doc.entries.length} of ${doc.total}).`;
  root.appendChild(caption);

  const table = document.createElement("table");
  table.className = "exposure-table";
  const head = document.createElement("tr");
  for (const label of ["rank", "shock country", "shock product", "relative loss"]) {
    const th = document.createElement("th");
    th.textContent = label;
    head.appendChild(th);
  }
  table.appendChild(head);

  doc.entries.forEach((entry, i) => {
    const tr = document.createElement("tr");
    tr.className = "exposure-row";
    const rank = document.createElement("td");
    rank.textContent = String(doc.offset + i + 1);
    const country = document.createElement("td");
    country.textContent = entry.shock_country;
    const product = document.createElement("td");
    product.textContent = entry.shock_product;
    const value = document.createElement("td");
    value.className = "exposure-value";
    value.textContent = formatValue(entry.rl);
    value.title = formatValue(entry.rl);
    value.setAttribute("data-value", formatValue(entry.rl));
    for (const td of [rank, country, product, value]) {
      tr.appendChild(td);
    }
    table.appendChild(tr);
  });
  root.appendChild(table);
  return root;
}
