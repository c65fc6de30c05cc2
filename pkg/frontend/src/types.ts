/** Shapes of the JSON documents served by the simulation API. */

export interface RegistryDoc {
  countries: string[];
  products: string[];
  processes: string[];
  purposes: string[];
  /** country code -> region name */
  regions: Record<string, string>;
  region_names: string[];
  model_hash: string;
}

export interface ShockTarget {
  country: string;
  product: string;
}

export interface SimulateDoc {
  model_hash: string;
  t: number;
  shock: ShockTarget[];
  /** countries x products relative losses at the reporting step */
  rl: number[][];
  /** regions x products relative losses, amounts pooled before the ratio */
  rl_regional: number[][];
  /** (t+1) x countries x products, present only when requested */
  series?: number[][][];
}

export interface ExposureEntry {
  shock_country: string;
  shock_product: string;
  rl: number;
}

export interface ExposureDoc {
  country: string;
  product: string;
  total: number;
  offset: number;
  limit: number;
  entries: ExposureEntry[];
}

export interface DecomposeDoc {
  model_hash: string;
  shock_country: string;
  input_product: string;
  products: string[];
  regions: string[];
  /** losses reaching each region x product through trade links */
  cross: number[][];
  /** losses reaching each region x product through conversion at home */
  within: number[][];
}

export interface ApiErrorBody {
  code: string;
  message: string;
  detail: string;
}
