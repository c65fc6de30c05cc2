import type { RegistryDoc, ShockTarget, SimulateDoc } from "./types";

export type ViewMode = "map" | "timeseries" | "exposure" | "decomposition";

export const VIEW_MODES: readonly ViewMode[] = [
  "map",
  "timeseries",
  "exposure",
  "decomposition",
];

/**
 * The scenario being composed: which cells to shock, how long to run, and
 * which view is active. Switching views never touches the shock selection,
 * so a half-built scenario survives a round trip through the other tabs.
 */
export class ScenarioDraft {
  private readonly registry: RegistryDoc;
  private targets: ShockTarget[] = [];
  horizon: number | null = null;
  timeseries = false;
  view: ViewMode = "map";

  constructor(registry: RegistryDoc) {
    this.registry = registry;
  }

  isValidTarget(country: string, product: string): boolean {
    return (
      this.registry.countries.includes(country) &&
      this.registry.products.includes(product)
    );
  }

  /** Add a shock target. Rejects codes missing from the registry. */
  addTarget(country: string, product: string): boolean {
    if (!this.isValidTarget(country, product)) {
      return false;
    }
    if (this.targets.some((t) => t.country === country && t.product === product)) {
      return false;
    }
    this.targets.push({ country, product });
    return true;
  }

  removeTarget(country: string, product: string): void {
    this.targets = this.targets.filter(
      (t) => !(t.country === country && t.product === product),
    );
  }

  /** Selected targets in registry order, however they were clicked in. */
  get shock(): ShockTarget[] {
    const countryRank = new Map(this.registry.countries.map((c, i) => [c, i]));
    const productRank = new Map(this.registry.products.map((p, i) => [p, i]));
    return [...this.targets].sort((a, b) => {
      const byCountry =
        (countryRank.get(a.country) ?? 0) - (countryRank.get(b.country) ?? 0);
      if (byCountry !== 0) {
        return byCountry;
      }
      return (productRank.get(a.product) ?? 0) - (productRank.get(b.product) ?? 0);
    });
  }

  /** Every selected target resolves against the registry. */
  get submittable(): boolean {
    return this.targets.every((t) => this.isValidTarget(t.country, t.product));
  }

  setView(view: ViewMode): void {
    this.view = view;
  }
}

export type SimulateFn = (
  shock: ShockTarget[],
  horizon: number | null,
  timeseries: boolean,
) => Promise<SimulateDoc>;

export interface FeedOutcome {
  token: number;
  /** A newer submit superseded this one before its response landed. */
  stale: boolean;
  doc?: SimulateDoc;
  error?: unknown;
}

/**
 * Funnel for simulate requests. Each submit takes a fresh token; a response
 * is applied only if its token is still the newest, so out-of-order arrivals
 * from superseded drafts are dropped instead of clobbering current results.
 */
export class SimulationFeed {
  private readonly send: SimulateFn;
  private token = 0;
  latest: SimulateDoc | null = null;

  constructor(send: SimulateFn) {
    this.send = send;
  }

  get currentToken(): number {
    return this.token;
  }

  async submit(draft: ScenarioDraft): Promise<FeedOutcome> {
    const token = ++this.token;
    try {
      const doc = await this.send(draft.shock, draft.horizon, draft.timeseries);
      if (token !== this.token) {
        return { token, stale: true };
      }
      this.latest = doc;
      return { token, stale: false, doc };
    } catch (error) {
      if (token !== this.token) {
        return { token, stale: true };
      }
      return { token, stale: false, error };
    }
  }
}
