import type { LensFramePayload } from "../api/types";
import { rateColor, theme } from "../theme";

const SVG = "http://www.w3.org/2000/svg";

/**
 * The circular lens: three nested layers drawn clockwise from vertical.
 * Inner ring: intervention timeline (direction colors, opacity by level).
 * Middle ring: positive-rate heat cells.
 * Outer ring: paired radial bars for tests (green) and cases (red), using
 * engine-supplied heights verbatim.
 */
export function renderLens(container: HTMLElement, frame: LensFramePayload, size: number): SVGSVGElement {
  container.textContent = "";
  const svg = document.createElementNS(SVG, "svg") as SVGSVGElement;
  svg.setAttribute("viewBox", `0 0 ${size} ${size}`);
  svg.setAttribute("class", "lens");
  const cx = size / 2;
  const cy = size / 2;
  const rInner = size * 0.14;
  const rRate = size * 0.2;
  const rBars = size * 0.26;
  const maxBar = size * 0.2;

  const n = frame.days.length;
  const maxHeight = Math.max(1e-9, ...frame.days.map((d) => Math.max(d.h_tests, d.h_cases)));
  const step = (2 * Math.PI) / Math.max(n, 1);

  const rings = document.createElementNS(SVG, "g");
  frame.days.forEach((day, i) => {
    const a0 = -Math.PI / 2 + i * step;
    const a1 = a0 + step;

    // inner: intervention timeline
    const inner = arc(cx, cy, rInner * 0.55, rInner, a0, a1);
    if (day.level === 0 || day.directions.length === 0) {
      inner.setAttribute("fill", theme.noEvent);
    } else {
      const color = day.directions.includes("restriction") ? theme.restriction : theme.eased;
      inner.setAttribute("fill", color);
      inner.setAttribute("fill-opacity", String(0.35 + 0.65 * (day.level / 3)));
      if (day.directions.length > 1) inner.setAttribute("stroke", theme.eased);
    }
    inner.dataset.level = String(day.level);
    inner.dataset.date = day.date;
    rings.appendChild(inner);

    // middle: positive-rate heat
    const rate = arc(cx, cy, rInner * 1.05, rRate, a0, a1);
    rate.setAttribute("fill", day.rate_undefined ? "#f4f4f4" : rateColor(day.rate));
    rate.dataset.rate = String(day.rate);
    rings.appendChild(rate);

    // outer: radial test / case bars
    const mid = (a0 + a1) / 2;
    const barWidth = Math.max(1, ((2 * Math.PI * rBars) / Math.max(n, 1)) * 0.38);
    const tests = radialBar(cx, cy, rBars, (day.h_tests / maxHeight) * maxBar, mid - step * 0.18, barWidth);
    tests.setAttribute("fill", theme.tests);
    tests.dataset.tests = String(day.tests);
    rings.appendChild(tests);
    const cases = radialBar(cx, cy, rBars, (day.h_cases / maxHeight) * maxBar, mid + step * 0.18, barWidth);
    cases.setAttribute("fill", theme.cases);
    cases.dataset.cases = String(day.cases);
    rings.appendChild(cases);

    const title = document.createElementNS(SVG, "title");
    title.textContent =
      `${day.date}: tests ${day.tests}, cases ${day.cases}, ` +
      `rate ${day.rate}${day.rate_undefined ? " (no tests)" : ""}, level ${day.level}`;
    rate.appendChild(title);
  });
  svg.appendChild(rings);
  container.appendChild(svg);
  return svg;
}

function arc(
  cx: number,
  cy: number,
  r0: number,
  r1: number,
  a0: number,
  a1: number,
): SVGPathElement {
  const path = document.createElementNS(SVG, "path") as SVGPathElement;
  const large = a1 - a0 > Math.PI ? 1 : 0;
  const p = (r: number, a: number) => `${cx + r * Math.cos(a)} ${cy + r * Math.sin(a)}`;
  path.setAttribute(
    "d",
    `M ${p(r0, a0)} L ${p(r1, a0)} A ${r1} ${r1} 0 ${large} 1 ${p(r1, a1)} ` +
      `L ${p(r0, a1)} A ${r0} ${r0} 0 ${large} 0 ${p(r0, a0)} Z`,
  );
  return path;
}

function radialBar(
  cx: number,
  cy: number,
  rBase: number,
  length: number,
  angle: number,
  width: number,
): SVGRectElement {
  const rect = document.createElementNS(SVG, "rect") as SVGRectElement;
  rect.setAttribute("x", String(-width / 2));
  rect.setAttribute("y", String(-rBase - length));
  rect.setAttribute("width", String(width));
  rect.setAttribute("height", String(Math.max(0, length)));
  rect.setAttribute(
    "transform",
    `translate(${cx} ${cy}) rotate(${(angle * 180) / Math.PI + 90})`,
  );
  return rect;
}

/** Two-sided date slider; onRelease fires only when a handle is dropped. */
export function renderDateSlider(
  container: HTMLElement,
  period: [string, string],
  current: [string, string],
  onRelease: (from: string, to: string) => void,
): void {
  container.textContent = "";
  const [first, last] = period;
  const total = dayDiff(first, last);
  const wrap = document.createElement("div");
  wrap.className = "date-slider";

  const low = document.createElement("input");
  const high = document.createElement("input");
  for (const [input, value] of [
    [low, current[0]],
    [high, current[1]],
  ] as const) {
    input.type = "range";
    input.min = "0";
    input.max = String(total);
    input.value = String(dayDiff(first, value));
  }
  const label = document.createElement("span");
  const update = () => {
    let a = Number(low.value);
    let b = Number(high.value);
    if (a > b) [a, b] = [b, a];
    label.textContent = `${addDays(first, a)} .. ${addDays(first, b)}`;
    return [a, b] as const;
  };
  update();
  low.addEventListener("input", update);
  high.addEventListener("input", update);
  const release = () => {
    const [a, b] = update();
    onRelease(addDays(first, a), addDays(first, b));
  };
  low.addEventListener("change", release);
  high.addEventListener("change", release);
  wrap.append(low, high, label);
  container.appendChild(wrap);
}

function dayDiff(a: string, b: string): number {
  return Math.round((Date.parse(b) - Date.parse(a)) / 86_400_000);
}

function addDays(iso: string, days: number): string {
  const d = new Date(Date.parse(iso) + days * 86_400_000);
  return d.toISOString().slice(0, 10);
}
