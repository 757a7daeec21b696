import { describe, expect, it } from "vitest";
import {
  defaultViewState,
  stateFromQuery,
  stateToQuery,
  type ViewState,
} from "../src/state/viewState";

describe("ViewState URL round trip", () => {
  it("round-trips a fully populated state", () => {
    const state: ViewState = {
      unitKind: "postcode",
      from: "2021-06-05",
      to: "2021-07-10",
      selectedUnits: ["2000", "2001", "2004"],
      lensA: 3.5,
      lensB: 80,
      lensSize: 260,
      layers: { lens: true, clinics: false, polygons: true, heatmap: false },
      model: "forest",
      mode: "P3",
    };
    const rebuilt = stateFromQuery(stateToQuery(state));
    expect(rebuilt).toEqual(state);
  });

  it("round-trips the default state", () => {
    const state = defaultViewState();
    const rebuilt = stateFromQuery(stateToQuery(state));
    expect(rebuilt).toEqual(state);
  });

  it("normalizes an inverted slider range on parse", () => {
    const parsed = stateFromQuery("kind=lga&from=2021-07-01&to=2021-06-01");
    expect(parsed.from <= parsed.to).toBe(true);
  });

  it("rejects serializing an inverted range", () => {
    const state = defaultViewState();
    state.from = "2021-07-01";
    state.to = "2021-06-01";
    expect(() => stateToQuery(state)).toThrow();
  });

  it("ignores unknown prediction modes", () => {
    const parsed = stateFromQuery("mode=P9");
    expect(parsed.mode).toBe("P1");
  });

  it("parses layer flags", () => {
    const parsed = stateFromQuery("layers=lh");
    expect(parsed.layers).toEqual({ lens: true, clinics: false, polygons: false, heatmap: true });
  });
});
