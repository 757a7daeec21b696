// Payload shapes mirroring the engine's JSON responses. The UI treats every
// numeric field as opaque engine output; no model math happens client-side.

export type UnitKind = "lga" | "postcode";

export interface MetaResponse {
  snapshot_checksum: string;
  period: [string, string];
  units: Record<UnitKind, number>;
  n_clinics: number;
  n_interventions: number;
  models: string[];
  defaults: {
    unit_kind: UnitKind;
    lens_a: number;
    lens_b: number;
    calibrate: boolean;
  };
}

export interface UnitInfo {
  unit_id: string;
  clinic_count: number;
  relation: "one_to_one" | "multiple_to_one";
  population: number | null;
  density: number | null;
}

export interface ClinicInfo {
  clinic_id: string;
  name: string;
  lga_id: string;
  postcode: string;
  latitude: number;
  longitude: number;
  factors: number[]; // six 0/1 flags, fixed order
  schedule: string; // 336 chars, row-major 7x48
}

export interface SeriesDay {
  date: string;
  tests: number;
  cases: number;
  imputed: boolean;
  rate: number;
}

export interface LensDayPayload {
  date: string;
  tests: number;
  cases: number;
  h_tests: number;
  h_cases: number;
  rate: number;
  rate_undefined: boolean;
  rate_anomalous: boolean;
  level: number;
  directions: string[];
}

export interface LensFramePayload {
  snapshot_checksum: string;
  unit_kind: UnitKind;
  unit_ids: string[];
  from: string;
  to: string;
  params: { a: number; b: number };
  days: LensDayPayload[];
  polygon_class: Record<string, string>;
  heat: Record<string, number>;
}

export interface ClinicPredictionPayload {
  clinic_id: string;
  y_clinic: number;
}

export interface PredictionDayPayload {
  date: string;
  unit_total: number;
  ground_truth: number;
  clinics: ClinicPredictionPayload[];
}

export interface PredictionSetPayload {
  unit_kind: UnitKind;
  unit_id: string;
  from: string;
  to: string;
  calibrated: boolean;
  days: PredictionDayPayload[];
}

export interface EffectCellPayload {
  clinic_id: string;
  date: string;
  initial: number;
  updated: number;
  effect: number;
}

export interface ScenarioEdit {
  clinic_id: string;
  factors: number[] | null;
  schedule: string | null;
}

export interface ScenarioPayload {
  unit_id: string;
  unit_kind: UnitKind;
  from: string;
  to: string;
  calibrate: boolean;
  edits: ScenarioEdit[];
}

export interface WhatIfResponse {
  snapshot_checksum: string;
  scenario: ScenarioPayload;
  initial: PredictionSetPayload;
  updated: PredictionSetPayload;
  effects: EffectCellPayload[];
}

export interface SequenceEntryPayload {
  unit_id: string;
  total_tests: number;
  clinic_count: number;
  relation: string;
}

export interface SequencePayload {
  sequence_number: number;
  from: string;
  to: string;
  unit_kind: UnitKind;
  entries: SequenceEntryPayload[];
}

export interface ComparisonRow {
  model: string;
  rmse: number;
  mape: number;
  r2: number;
}
