import { describe, expect, it } from "vitest";

import { ScenarioDraft, SimulationFeed } from "../src/draft";
import type { SimulateDoc } from "../src/types";
import registry from "./fixtures/registry.json";
import chain from "./fixtures/simulate_chain.json";
import empty from "./fixtures/simulate_empty.json";

const chainDoc = chain as SimulateDoc;
const emptyDoc = empty as SimulateDoc;

describe("scenario draft", () => {
  it("accepts only registry-valid selections", () => {
    const draft = new ScenarioDraft(registry);
    expect(draft.addTarget("ARA", "maize")).toBe(true);
    expect(draft.addTarget("ZZZ", "maize")).toBe(false);
    expect(draft.addTarget("ARA", "gold")).toBe(false);
    expect(draft.addTarget("ARA", "maize")).toBe(false);
    expect(draft.shock).toEqual([{ country: "ARA", product: "maize" }]);
    expect(draft.submittable).toBe(true);
  });

  it("orders the selection by registry order, not click order", () => {
    const draft = new ScenarioDraft(registry);
    draft.addTarget("COR", "pig");
    draft.addTarget("ARA", "pig");
    draft.addTarget("ARA", "maize");
    expect(draft.shock.map((t) => `${t.country}:${t.product}`)).toEqual([
      "ARA:maize",
      "ARA:pig",
      "COR:pig",
    ]);
  });

  it("survives view switches without losing the selection", () => {
    const draft = new ScenarioDraft(registry);
    draft.addTarget("ARA", "maize");
    draft.addTarget("BEL", "pig");
    draft.horizon = 6;
    draft.setView("exposure");
    draft.setView("decomposition");
    draft.setView("timeseries");
    draft.setView("map");
    expect(draft.shock.length).toBe(2);
    expect(draft.horizon).toBe(6);
    expect(draft.view).toBe("map");
    expect(draft.submittable).toBe(true);
  });

  it("drops targets cleanly", () => {
    const draft = new ScenarioDraft(registry);
    draft.addTarget("ARA", "maize");
    draft.addTarget("BEL", "maize");
    draft.removeTarget("ARA", "maize");
    expect(draft.shock).toEqual([{ country: "BEL", product: "maize" }]);
  });
});

describe("simulation feed", () => {
  it("discards stale responses when requests resolve out of order", async () => {
    const pending: Array<(doc: SimulateDoc) => void> = [];
    const feed = new SimulationFeed(
      () => new Promise<SimulateDoc>((resolve) => pending.push(resolve)),
    );
    const draft = new ScenarioDraft(registry);
    draft.addTarget("ARA", "maize");

    const first = feed.submit(draft);
    draft.addTarget("BEL", "maize");
    const second = feed.submit(draft);
    expect(pending.length).toBe(2);

    pending[1]!(chainDoc);
    const secondOutcome = await second;
    expect(secondOutcome.stale).toBe(false);
    expect(secondOutcome.doc).toBe(chainDoc);
    expect(feed.latest).toBe(chainDoc);

    pending[0]!(emptyDoc);
    const firstOutcome = await first;
    expect(firstOutcome.stale).toBe(true);
    expect(firstOutcome.doc).toBeUndefined();
    expect(feed.latest).toBe(chainDoc);
  });

  it("advances the token on every submit so only the newest wins", async () => {
    const pending: Array<(doc: SimulateDoc) => void> = [];
    const feed = new SimulationFeed(
      () => new Promise<SimulateDoc>((resolve) => pending.push(resolve)),
    );
    const draft = new ScenarioDraft(registry);
    draft.addTarget("ARA", "maize");

    const outcomes = [feed.submit(draft), feed.submit(draft), feed.submit(draft)];
    expect(feed.currentToken).toBe(3);
    pending.forEach((resolve) => resolve(chainDoc));
    const settled = await Promise.all(outcomes);
    expect(settled.map((o) => o.stale)).toEqual([true, true, false]);
  });

  it("reports request errors without clobbering the latest result", async () => {
    let fail = false;
    const feed = new SimulationFeed(() =>
      fail
        ? Promise.reject(new Error("boom"))
        : Promise.resolve(chainDoc),
    );
    const draft = new ScenarioDraft(registry);
    draft.addTarget("ARA", "maize");

    const good = await feed.submit(draft);
    expect(good.doc).toBe(chainDoc);
    fail = true;
    const bad = await feed.submit(draft);
    expect(bad.stale).toBe(false);
    expect(bad.error).toBeInstanceOf(Error);
    expect(feed.latest).toBe(chainDoc);
  });
});
