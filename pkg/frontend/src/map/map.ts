import type { ClinicInfo, UnitInfo } from "../api/types";
import { heatColor, theme } from "../theme";

const SVG = "http://www.w3.org/2000/svg";

export interface MapLayers {
  polygons: boolean;
  clinics: boolean;
  heatmap: boolean;
}

export interface MapData {
  units: UnitInfo[];
  clinicsByUnit: Map<string, ClinicInfo[]>;
  heat: Record<string, number>;
  selected: Set<string>;
}

/**
 * Cartogram-style map: synthetic units have no real geometry, so each unit
 * gets a grid cell sized by the layout, clinics positioned inside their cell
 * by normalized coordinates. Polygon fill encodes the clinic relation
 * (multi vs single), selection overrides with the selection color, and the
 * heat layer tints clinic pins by average capacity.
 */
export function renderMap(
  container: HTMLElement,
  data: MapData,
  layers: MapLayers,
  size: { width: number; height: number },
  onToggleUnit: (unitId: string) => void,
): SVGSVGElement {
  container.textContent = "";
  const svg = document.createElementNS(SVG, "svg") as SVGSVGElement;
  svg.setAttribute("viewBox", `0 0 ${size.width} ${size.height}`);
  svg.setAttribute("class", "unit-map");

  const cols = Math.ceil(Math.sqrt(data.units.length || 1));
  const rows = Math.ceil((data.units.length || 1) / cols);
  const cellW = size.width / cols;
  const cellH = size.height / rows;
  const maxHeat = Math.max(0, ...Object.values(data.heat));

  const coords = normalizeCoords(data);

  data.units.forEach((unit, idx) => {
    const col = idx % cols;
    const row = Math.floor(idx / cols);
    const x0 = col * cellW;
    const y0 = row * cellH;

    if (layers.polygons) {
      const rect = document.createElementNS(SVG, "rect");
      rect.setAttribute("x", String(x0 + 2));
      rect.setAttribute("y", String(y0 + 2));
      rect.setAttribute("width", String(cellW - 4));
      rect.setAttribute("height", String(cellH - 4));
      rect.setAttribute("rx", "6");
      const fill = data.selected.has(unit.unit_id)
        ? theme.selected
        : unit.relation === "multiple_to_one"
          ? theme.multiClinic
          : theme.singleClinic;
      rect.setAttribute("fill", fill);
      rect.setAttribute("fill-opacity", "0.45");
      rect.setAttribute("stroke", "#666");
      rect.dataset.unit = unit.unit_id;
      rect.dataset.relation = unit.relation;
      rect.addEventListener("click", () => onToggleUnit(unit.unit_id));
      svg.appendChild(rect);
    }

    const label = document.createElementNS(SVG, "text");
    label.setAttribute("x", String(x0 + 8));
    label.setAttribute("y", String(y0 + 16));
    label.setAttribute("font-size", "11");
    label.textContent = `${unit.unit_id} (${unit.clinic_count})`;
    svg.appendChild(label);

    if (layers.clinics) {
      for (const clinic of data.clinicsByUnit.get(unit.unit_id) ?? []) {
        const pos = coords.get(clinic.clinic_id) ?? { x: 0.5, y: 0.5 };
        const pin = document.createElementNS(SVG, "circle");
        pin.setAttribute("cx", String(x0 + 10 + pos.x * (cellW - 20)));
        pin.setAttribute("cy", String(y0 + 22 + pos.y * (cellH - 32)));
        pin.setAttribute("r", "5");
        const heat = data.heat[clinic.clinic_id];
        pin.setAttribute(
          "fill",
          layers.heatmap && heat !== undefined ? heatColor(heat, maxHeat) : "#444",
        );
        pin.dataset.clinic = clinic.clinic_id;
        const title = document.createElementNS(SVG, "title");
        title.textContent =
          heat !== undefined ? `${clinic.name}: avg capacity ${heat}` : clinic.name;
        pin.appendChild(title);
        svg.appendChild(pin);
      }
    }
  });

  container.appendChild(svg);
  return svg;
}

function normalizeCoords(data: MapData): Map<string, { x: number; y: number }> {
  const out = new Map<string, { x: number; y: number }>();
  for (const clinics of data.clinicsByUnit.values()) {
    if (!clinics.length) continue;
    const lats = clinics.map((c) => c.latitude);
    const lons = clinics.map((c) => c.longitude);
    const latSpan = Math.max(...lats) - Math.min(...lats) || 1;
    const lonSpan = Math.max(...lons) - Math.min(...lons) || 1;
    for (const c of clinics) {
      out.set(c.clinic_id, {
        x: (c.longitude - Math.min(...lons)) / lonSpan,
        y: (c.latitude - Math.min(...lats)) / latSpan,
      });
    }
  }
  return out;
}
