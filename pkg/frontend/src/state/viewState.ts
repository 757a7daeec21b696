import type { UnitKind } from "../api/types";

export type PredictionMode = "P1" | "P2" | "P3" | "P4";

export interface ViewState {
  unitKind: UnitKind;
  from: string; // ISO date, slider low end
  to: string; // ISO date, slider high end
  selectedUnits: string[];
  lensA: number;
  lensB: number;
  lensSize: number;
  layers: {
    lens: boolean;
    clinics: boolean;
    polygons: boolean;
    heatmap: boolean;
  };
  model: string;
  mode: PredictionMode;
}

export function defaultViewState(): ViewState {
  return {
    unitKind: "lga",
    from: "",
    to: "",
    selectedUnits: [],
    lensA: 2,
    lensB: 100,
    lensSize: 220,
    layers: { lens: true, clinics: true, polygons: true, heatmap: true },
    model: "",
    mode: "P1",
  };
}

const MODES: PredictionMode[] = ["P1", "P2", "P3", "P4"];

/** Serialize into URL query params (shareable exploration state). */
export function stateToQuery(state: ViewState): string {
  if (state.from && state.to && state.from > state.to) {
    throw new Error("view state range is inverted");
  }
  const params = new URLSearchParams();
  params.set("kind", state.unitKind);
  if (state.from) params.set("from", state.from);
  if (state.to) params.set("to", state.to);
  if (state.selectedUnits.length) params.set("units", state.selectedUnits.join(","));
  params.set("a", String(state.lensA));
  params.set("b", String(state.lensB));
  params.set("size", String(state.lensSize));
  const layerFlags = [
    state.layers.lens ? "l" : "",
    state.layers.clinics ? "c" : "",
    state.layers.polygons ? "p" : "",
    state.layers.heatmap ? "h" : "",
  ].join("");
  params.set("layers", layerFlags);
  if (state.model) params.set("model", state.model);
  params.set("mode", state.mode);
  return params.toString();
}

export function stateFromQuery(query: string): ViewState {
  const params = new URLSearchParams(query);
  const state = defaultViewState();
  const kind = params.get("kind");
  if (kind === "lga" || kind === "postcode") state.unitKind = kind;
  state.from = params.get("from") ?? "";
  state.to = params.get("to") ?? "";
  if (state.from && state.to && state.from > state.to) {
    [state.from, state.to] = [state.to, state.from];
  }
  const units = params.get("units");
  state.selectedUnits = units ? units.split(",").filter(Boolean) : [];
  state.lensA = numberOr(params.get("a"), state.lensA);
  state.lensB = numberOr(params.get("b"), state.lensB);
  state.lensSize = numberOr(params.get("size"), state.lensSize);
  const layers = params.get("layers");
  if (layers !== null) {
    state.layers = {
      lens: layers.includes("l"),
      clinics: layers.includes("c"),
      polygons: layers.includes("p"),
      heatmap: layers.includes("h"),
    };
  }
  state.model = params.get("model") ?? "";
  const mode = params.get("mode") as PredictionMode | null;
  if (mode && MODES.includes(mode)) state.mode = mode;
  return state;
}

function numberOr(raw: string | null, fallback: number): number {
  if (raw === null) return fallback;
  const value = Number(raw);
  return Number.isFinite(value) ? value : fallback;
}

export function pushStateToUrl(state: ViewState): void {
  const query = stateToQuery(state);
  history.replaceState(null, "", `${location.pathname}?${query}`);
}

export function readStateFromUrl(): ViewState {
  return stateFromQuery(location.search.replace(/^\?/, ""));
}
