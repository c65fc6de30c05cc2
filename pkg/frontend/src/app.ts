import { ApiFailure, fetchDecompose, fetchExposure } from "./api";
import { ScenarioDraft, SimulationFeed, VIEW_MODES } from "./draft";
import type { SimulateFn, ViewMode } from "./draft";
import { renderDecomposition } from "./decomposition";
import { renderExposure } from "./exposure";
import { gridFromSimulation, renderLossHeatmap } from "./heatmap";
import { renderTimeseries } from "./timeseries";
import type { RegistryDoc } from "./types";

const VIEW_LABELS: Record<ViewMode, string> = {
  map: "Loss map",
  timeseries: "Time series",
  exposure: "Exposure",
  decomposition: "Decomposition",
};

function option(value: string): HTMLOptionElement {
  const el = document.createElement("option");
  el.value = value;
  el.textContent = value;
  return el;
}

function select(values: string[], className: string): HTMLSelectElement {
  const el = document.createElement("select");
  el.className = className;
  for (const value of values) {
    el.appendChild(option(value));
  }
  return el;
}

function describeError(error: unknown): string {
  if (error instanceof ApiFailure) {
    return `${error.code}: ${error.message}`;
  }
  return String(error);
}

/**
 * Assemble the explorer into `root`: a scenario composer on top, view tabs
 * underneath, and the active view's rendering below that. The draft object
 * holds the selection across tab switches; the feed throttles simulate to
 * one live request and drops superseded responses.
 */
export function mountApp(
  root: HTMLElement,
  registry: RegistryDoc,
  send: SimulateFn,
): void {
  const draft = new ScenarioDraft(registry);
  draft.timeseries = true;
  const feed = new SimulationFeed(send);

  root.innerHTML = "";
  const composer = document.createElement("section");
  composer.className = "composer";
  const viewBar = document.createElement("nav");
  viewBar.className = "view-bar";
  const stage = document.createElement("section");
  stage.className = "stage";
  const status = document.createElement("p");
  status.className = "status";
  root.append(composer, viewBar, status, stage);

  const countryPick = select(registry.countries, "pick-country");
  const productPick = select(registry.products, "pick-product");
  const addButton = document.createElement("button");
  addButton.textContent = "Add shock";
  addButton.className = "add-target";
  const chips = document.createElement("ul");
  chips.className = "target-chips";

  const horizonInput = document.createElement("input");
  horizonInput.type = "number";
  horizonInput.min = "0";
  horizonInput.placeholder = "horizon (model default)";
  horizonInput.className = "horizon";

  const runButton = document.createElement("button");
  runButton.textContent = "Run scenario";
  runButton.className = "run";

  composer.append(countryPick, productPick, addButton, horizonInput, runButton, chips);

  function redrawChips(): void {
    chips.innerHTML = "";
    for (const target of draft.shock) {
      const chip = document.createElement("li");
      chip.className = "chip";
      chip.textContent = `${target.country}: ${target.product}`;
      const drop = document.createElement("button");
      drop.textContent = "x";
      drop.className = "drop";
      drop.addEventListener("click", () => {
        draft.removeTarget(target.country, target.product);
        redrawChips();
      });
      chip.appendChild(drop);
      chips.appendChild(chip);
    }
    runButton.disabled = !draft.submittable;
  }

  addButton.addEventListener("click", () => {
    if (draft.addTarget(countryPick.value, productPick.value)) {
      redrawChips();
    }
  });

  horizonInput.addEventListener("change", () => {
    const raw = horizonInput.value.trim();
    draft.horizon = raw === "" ? null : Math.max(0, Math.floor(Number(raw)));
  });

  const exposureCountry = select(registry.countries, "exposure-country");
  const exposureProduct = select(registry.products, "exposure-product");
  const exposureLoad = document.createElement("button");
  exposureLoad.textContent = "Rank shocks";

  const decomposeCountry = select(registry.countries, "decompose-country");
  const decomposeProduct = select(registry.products, "decompose-product");
  const decomposeLoad = document.createElement("button");
  decomposeLoad.textContent = "Decompose";

  function showView(): void {
    stage.innerHTML = "";
    const doc = feed.latest;
    if (draft.view === "map") {
      if (doc) {
        stage.appendChild(renderLossHeatmap(gridFromSimulation(registry, doc)));
      } else {
        status.textContent = "Compose a shock and run the scenario.";
      }
    } else if (draft.view === "timeseries") {
      if (doc) {
        stage.appendChild(renderTimeseries(registry, doc, draft.shock));
      } else {
        status.textContent = "Run a scenario first to chart its losses.";
      }
    } else if (draft.view === "exposure") {
      const controls = document.createElement("div");
      controls.className = "exposure-controls";
      controls.append(exposureCountry, exposureProduct, exposureLoad);
      stage.appendChild(controls);
    } else {
      const controls = document.createElement("div");
      controls.className = "decompose-controls";
      controls.append(decomposeCountry, decomposeProduct, decomposeLoad);
      stage.appendChild(controls);
    }
  }

  exposureLoad.addEventListener("click", () => {
    fetchExposure(exposureCountry.value, exposureProduct.value)
      .then((doc) => {
        stage.querySelector(".exposure")?.remove();
        stage.appendChild(renderExposure(doc));
      })
      .catch((error) => {
        status.textContent = describeError(error);
      });
  });

  decomposeLoad.addEventListener("click", () => {
    fetchDecompose(decomposeCountry.value, decomposeProduct.value)
      .then((doc) => {
        stage.querySelector(".decomposition")?.remove();
        stage.appendChild(renderDecomposition(doc));
      })
      .catch((error) => {
        status.textContent = describeError(error);
      });
  });

  for (const mode of VIEW_MODES) {
    const tab = document.createElement("button");
    tab.className = "view-tab";
    tab.textContent = VIEW_LABELS[mode];
    tab.setAttribute("data-view", mode);
    tab.addEventListener("click", () => {
      draft.setView(mode);
      showView();
    });
    viewBar.appendChild(tab);
  }

  runButton.addEventListener("click", () => {
    if (!draft.submittable) {
      return;
    }
    status.textContent = "Running scenario...";
    void feed.submit(draft).then((outcome) => {
      if (outcome.stale) {
        return;
      }
      if (outcome.error !== undefined) {
        status.textContent = describeError(outcome.error);
        return;
      }
      status.textContent = `Scenario done (reporting step ${outcome.doc?.t}).`;
      showView();
    });
  });

  redrawChips();
  showView();
}
