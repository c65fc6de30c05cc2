import type {
  ApiErrorBody,
  DecomposeDoc,
  ExposureDoc,
  RegistryDoc,
  ShockTarget,
  SimulateDoc,
} from "./types";

/** Error raised for any non-2xx response, carrying the server's error body. */
export class ApiFailure extends Error {
  readonly status: number;
  readonly code: string;
  readonly detail: string;

  constructor(status: number, body: ApiErrorBody) {
    super(body.message);
    this.name = "ApiFailure";
    this.status = status;
    this.code = body.code;
    this.detail = body.detail;
  }
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  const response = await fetch(path, init);
  const text = await response.text();
  if (!response.ok) {
    let body: ApiErrorBody = { code: "unknown", message: text, detail: "" };
    try {
      body = JSON.parse(text) as ApiErrorBody;
    } catch {
      // keep the raw text as the message
    }
    throw new ApiFailure(response.status, body);
  }
  return JSON.parse(text) as T;
}

export function fetchRegistry(): Promise<RegistryDoc> {
  return request("/api/registry");
}

export function simulate(
  shock: ShockTarget[],
  horizon: number | null,
  timeseries: boolean,
): Promise<SimulateDoc> {
  const body: Record<string, unknown> = { shock, timeseries };
  if (horizon !== null) {
    body["horizon"] = horizon;
  }
  return request("/api/simulate", {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify(body),
  });
}

export function fetchExposure(
  country: string,
  product: string,
  limit = 50,
  offset = 0,
): Promise<ExposureDoc> {
  const query = new URLSearchParams({
    country,
    product,
    limit: String(limit),
    offset: String(offset),
  });
  return request(`/api/exposure?${query.toString()}`);
}

export function fetchDecompose(
  shockCountry: string,
  inputProduct: string,
): Promise<DecomposeDoc> {
  const query = new URLSearchParams({
    shock_country: shockCountry,
    input_product: inputProduct,
  });
  return request(`/api/decompose?${query.toString()}`);
}
