import type { PredictionMode } from "../state/viewState";
import type { WhatIfResponse } from "../api/types";
import { theme } from "../theme";
import { tooltipText } from "./tooltip";

const SVG = "http://www.w3.org/2000/svg";
const WIDTH = 860;
const HEIGHT = 300;
const PAD = { left: 48, right: 12, top: 14, bottom: 30 };

interface DayPoint {
  date: string;
  truth: number;
  initialTotal: number;
  updatedTotal: number;
  initialByClinic: Map<string, number>;
  updatedByClinic: Map<string, number>;
}

function collect(result: WhatIfResponse): DayPoint[] {
  return result.initial.days.map((di, i) => {
    const du = result.updated.days[i];
    return {
      date: di.date,
      truth: di.ground_truth,
      initialTotal: sum(di.clinics.map((c) => c.y_clinic)),
      updatedTotal: sum(du.clinics.map((c) => c.y_clinic)),
      initialByClinic: new Map(di.clinics.map((c) => [c.clinic_id, c.y_clinic])),
      updatedByClinic: new Map(du.clinics.map((c) => [c.clinic_id, c.y_clinic])),
    };
  });
}

function sum(values: number[]): number {
  return values.reduce((a, b) => a + Math.round(b * 100), 0) / 100;
}

/**
 * One chart, four switchable inspection angles:
 *  P1 stacked per-clinic bars of initial predictions vs dashed ground truth;
 *  P2 step lines (truth/initial/updated totals) with signed effect bars;
 *  P3 step lines plus updated per-clinic counts, no effect bars;
 *  P4 smooth curves for truth (dashed), initial and updated totals.
 * Switching modes re-renders from the same result object; no refetch.
 */
export function renderPredictions(
  container: HTMLElement,
  result: WhatIfResponse,
  mode: PredictionMode,
): SVGSVGElement {
  container.textContent = "";
  const days = collect(result);
  const svg = document.createElementNS(SVG, "svg") as SVGSVGElement;
  svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
  svg.setAttribute("class", "prediction-chart");
  svg.dataset.mode = mode;

  const maxY = Math.max(
    1,
    ...days.map((d) => Math.max(d.truth, d.initialTotal, d.updatedTotal)),
  );
  const x = (i: number) =>
    PAD.left + ((WIDTH - PAD.left - PAD.right) * i) / Math.max(days.length - 1, 1);
  const y = (v: number) =>
    HEIGHT - PAD.bottom - ((HEIGHT - PAD.top - PAD.bottom) * v) / maxY;
  const band = (WIDTH - PAD.left - PAD.right) / Math.max(days.length, 1);

  drawAxes(svg, days, x, y, maxY);

  if (mode === "P1") {
    drawStackedBars(svg, result, days, x, y, band);
    drawPath(svg, days.map((d, i) => [x(i), y(d.truth)]), theme.groundTruth, true, false);
  } else if (mode === "P2") {
    drawEffectBars(svg, result, days, x, y, band);
    drawPath(svg, days.map((d, i) => [x(i), y(d.truth)]), theme.groundTruth, true, true);
    drawPath(svg, days.map((d, i) => [x(i), y(d.initialTotal)]), theme.initialPrediction, false, true);
    drawPath(svg, days.map((d, i) => [x(i), y(d.updatedTotal)]), theme.updatedPrediction, false, true);
  } else if (mode === "P3") {
    drawPath(svg, days.map((d, i) => [x(i), y(d.truth)]), theme.groundTruth, true, true);
    drawPath(svg, days.map((d, i) => [x(i), y(d.initialTotal)]), theme.initialPrediction, false, true);
    drawPath(svg, days.map((d, i) => [x(i), y(d.updatedTotal)]), theme.updatedPrediction, false, true);
    drawClinicDots(svg, result, days, x, y);
  } else {
    drawPath(svg, days.map((d, i) => [x(i), y(d.truth)]), theme.groundTruth, true, false);
    drawPath(svg, days.map((d, i) => [x(i), y(d.initialTotal)]), theme.initialPrediction, false, false);
    drawPath(svg, days.map((d, i) => [x(i), y(d.updatedTotal)]), theme.updatedPrediction, false, false);
  }

  attachTooltips(svg, result, days, x, band);
  container.appendChild(svg);
  return svg;
}

function drawAxes(
  svg: SVGSVGElement,
  days: DayPoint[],
  x: (i: number) => number,
  y: (v: number) => number,
  maxY: number,
): void {
  const axis = document.createElementNS(SVG, "g");
  axis.setAttribute("class", "axes");
  for (const frac of [0, 0.5, 1]) {
    const value = maxY * frac;
    const line = document.createElementNS(SVG, "line");
    line.setAttribute("x1", String(PAD.left));
    line.setAttribute("x2", String(WIDTH - PAD.right));
    line.setAttribute("y1", String(y(value)));
    line.setAttribute("y2", String(y(value)));
    line.setAttribute("stroke", "#ddd");
    axis.appendChild(line);
    const label = document.createElementNS(SVG, "text");
    label.setAttribute("x", "4");
    label.setAttribute("y", String(y(value) + 4));
    label.setAttribute("font-size", "10");
    label.textContent = String(Math.round(value));
    axis.appendChild(label);
  }
  for (let i = 0; i < days.length; i += Math.ceil(days.length / 8)) {
    const label = document.createElementNS(SVG, "text");
    label.setAttribute("x", String(x(i)));
    label.setAttribute("y", String(HEIGHT - 8));
    label.setAttribute("font-size", "9");
    label.setAttribute("text-anchor", "middle");
    label.textContent = days[i].date.slice(5);
    axis.appendChild(label);
  }
  svg.appendChild(axis);
}

function clinicColor(index: number): string {
  const base = [theme.initialPrediction, "#2a9d8f", "#e9c46a", "#f4a261", "#9b5de5", "#00b4d8"];
  return base[index % base.length];
}

function drawStackedBars(
  svg: SVGSVGElement,
  result: WhatIfResponse,
  days: DayPoint[],
  x: (i: number) => number,
  y: (v: number) => number,
  band: number,
): void {
  const clinicIds = result.initial.days[0]?.clinics.map((c) => c.clinic_id) ?? [];
  const group = document.createElementNS(SVG, "g");
  group.setAttribute("class", "stacked-bars");
  days.forEach((d, i) => {
    let cum = 0;
    clinicIds.forEach((cid, ci) => {
      const value = d.initialByClinic.get(cid) ?? 0;
      if (value <= 0) return;
      const rect = document.createElementNS(SVG, "rect");
      const y0 = y(cum + value);
      rect.setAttribute("x", String(x(i) - band * 0.35));
      rect.setAttribute("width", String(band * 0.7));
      rect.setAttribute("y", String(y0));
      rect.setAttribute("height", String(Math.max(0, y(cum) - y0)));
      rect.setAttribute("fill", clinicColor(ci));
      rect.dataset.clinic = cid;
      rect.dataset.date = d.date;
      group.appendChild(rect);
      cum += value;
    });
  });
  svg.appendChild(group);
}

function drawEffectBars(
  svg: SVGSVGElement,
  result: WhatIfResponse,
  days: DayPoint[],
  x: (i: number) => number,
  y: (v: number) => number,
  band: number,
): void {
  const group = document.createElementNS(SVG, "g");
  group.setAttribute("class", "effect-bars");
  const byDate = new Map<string, number>();
  for (const e of result.effects) {
    byDate.set(e.date, (byDate.get(e.date) ?? 0) + Math.round(e.effect * 100));
  }
  days.forEach((d, i) => {
    const effect = (byDate.get(d.date) ?? 0) / 100;
    if (effect === 0) return;
    const rect = document.createElementNS(SVG, "rect");
    const base = y(d.initialTotal);
    const tip = y(d.initialTotal + effect);
    rect.setAttribute("x", String(x(i) - band * 0.25));
    rect.setAttribute("width", String(band * 0.5));
    rect.setAttribute("y", String(Math.min(base, tip)));
    rect.setAttribute("height", String(Math.abs(base - tip)));
    rect.setAttribute("fill", effect > 0 ? theme.positiveEffect : theme.negativeEffect);
    rect.setAttribute("fill-opacity", "0.55");
    rect.dataset.effect = String(effect);
    rect.dataset.date = d.date;
    group.appendChild(rect);
  });
  svg.appendChild(group);
}

function drawClinicDots(
  svg: SVGSVGElement,
  result: WhatIfResponse,
  days: DayPoint[],
  x: (i: number) => number,
  y: (v: number) => number,
): void {
  const clinicIds = result.updated.days[0]?.clinics.map((c) => c.clinic_id) ?? [];
  const group = document.createElementNS(SVG, "g");
  group.setAttribute("class", "clinic-dots");
  days.forEach((d, i) => {
    clinicIds.forEach((cid, ci) => {
      const value = d.updatedByClinic.get(cid) ?? 0;
      const dot = document.createElementNS(SVG, "circle");
      dot.setAttribute("cx", String(x(i)));
      dot.setAttribute("cy", String(y(value)));
      dot.setAttribute("r", "2.2");
      dot.setAttribute("fill", clinicColor(ci));
      dot.dataset.clinic = cid;
      dot.dataset.date = d.date;
      group.appendChild(dot);
    });
  });
  svg.appendChild(group);
}

function drawPath(
  svg: SVGSVGElement,
  points: [number, number][],
  color: string,
  dashed: boolean,
  step: boolean,
): void {
  if (!points.length) return;
  const path = document.createElementNS(SVG, "path");
  let d = `M ${points[0][0]} ${points[0][1]}`;
  for (let i = 1; i < points.length; i++) {
    if (step) {
      d += ` H ${points[i][0]} V ${points[i][1]}`;
    } else {
      d += ` L ${points[i][0]} ${points[i][1]}`;
    }
  }
  path.setAttribute("d", d);
  path.setAttribute("fill", "none");
  path.setAttribute("stroke", color);
  path.setAttribute("stroke-width", "1.6");
  if (dashed) path.setAttribute("stroke-dasharray", "5 4");
  svg.appendChild(path);
}

function attachTooltips(
  svg: SVGSVGElement,
  result: WhatIfResponse,
  days: DayPoint[],
  x: (i: number) => number,
  band: number,
): void {
  const group = document.createElementNS(SVG, "g");
  group.setAttribute("class", "hover-zones");
  days.forEach((d, i) => {
    const zone = document.createElementNS(SVG, "rect");
    zone.setAttribute("x", String(x(i) - band / 2));
    zone.setAttribute("width", String(band));
    zone.setAttribute("y", "0");
    zone.setAttribute("height", String(HEIGHT));
    zone.setAttribute("fill", "transparent");
    zone.dataset.date = d.date;
    const title = document.createElementNS(SVG, "title");
    title.textContent = tooltipText(result, d.date);
    zone.appendChild(title);
    group.appendChild(zone);
  });
  svg.appendChild(group);
}
