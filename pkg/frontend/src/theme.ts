// Central palette. Hex values approximate the named roles used across the
// views; change them here, nowhere else.

export const theme = {
  // intervention timeline
  eased: "#30d5c8", // turquoise
  restriction: "#4c7fa3", // saxe blue
  noEvent: "#e8e8e8",

  // lens count bars
  tests: "#00a550", // true green
  cases: "#d22b2b", // true red

  // positive-rate ring endpoints (low -> high)
  rateLow: "#ffef00", // canary yellow
  rateHigh: "#ff2400", // scarlet red

  // unit polygons
  multiClinic: "#2e8b57", // sea green
  singleClinic: "#c9a0dc", // wisteria purple
  selected: "#f28500", // tangerine yellow

  // capacity heatmap endpoints
  heatLow: "#f0c420", // moon yellow
  heatHigh: "#d2042d", // strong red

  // prediction chart roles
  groundTruth: "#000000", // dashed
  initialPrediction: "#3f00ff", // ultramarine
  updatedPrediction: "#ff00ff", // fuchsia
  positiveEffect: "#ff00ff", // fuchsia
  negativeEffect: "#32cd32", // lime green

  // tree-matrix blocks
  factorOn: "#5a7d9a", // salvia blue
  factorOff: "#dce6ee",
  scheduleClosed: "#e6b0aa", // red-ish = few hours
  scheduleOpen: "#7dcea0", // green-ish = many hours
} as const;

export function rateColor(rate: number): string {
  return mix(theme.rateLow, theme.rateHigh, clamp01(rate));
}

export function heatColor(value: number, max: number): string {
  return mix(theme.heatLow, theme.heatHigh, max > 0 ? clamp01(value / max) : 0);
}

function clamp01(x: number): number {
  return Math.max(0, Math.min(1, x));
}

function mix(hexA: string, hexB: string, t: number): string {
  const a = parse(hexA);
  const b = parse(hexB);
  const c = a.map((v, i) => Math.round(v + (b[i] - v) * t));
  return `#${c.map((v) => v.toString(16).padStart(2, "0")).join("")}`;
}

function parse(hex: string): number[] {
  return [1, 3, 5].map((i) => parseInt(hex.slice(i, i + 2), 16));
}
