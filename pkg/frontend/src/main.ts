import { ApiClient } from "./api/client";
import type { ClinicInfo, WhatIfResponse } from "./api/types";
import { renderPredictions } from "./charts/predictions";
import { renderDateSlider, renderLens } from "./lens/lens";
import { renderMap } from "./map/map";
import { EditSession } from "./state/editDiff";
import {
  pushStateToUrl,
  readStateFromUrl,
  type PredictionMode,
  type ViewState,
} from "./state/viewState";
import { renderSequences } from "./views/storage";
import { renderTreeMatrix } from "./views/treeMatrix";

const api = new ApiClient();

interface AppElements {
  map: HTMLElement;
  lens: HTMLElement;
  slider: HTMLElement;
  tree: HTMLElement;
  chart: HTMLElement;
  storage: HTMLElement;
  controls: HTMLElement;
  banner: HTMLElement;
  importance: HTMLElement;
}

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node;
}

async function boot(): Promise<void> {
  const ui: AppElements = {
    map: el("map"),
    lens: el("lens"),
    slider: el("slider"),
    tree: el("tree-matrix"),
    chart: el("chart"),
    storage: el("storage"),
    controls: el("controls"),
    banner: el("banner"),
    importance: el("importance"),
  };

  api.onStaleSnapshot = () => {
    ui.banner.hidden = false;
    ui.banner.textContent = "Snapshot changed on the server; reloading data";
    void refreshAll();
  };

  const meta = await api.meta();
  let state: ViewState = readStateFromUrl();
  if (!state.from) state.from = meta.period[0];
  if (!state.to) state.to = meta.period[1];
  if (!state.model) state.model = meta.models[0];

  let session: EditSession | null = null;
  let activeUnit: string | null = null;
  let activeClinics: ClinicInfo[] = [];
  let lastResult: WhatIfResponse | null = null;

  function sync(): void {
    pushStateToUrl(state);
  }

  async function refreshMapAndLens(): Promise<void> {
    const { units } = await api.units(state.unitKind);
    const clinicsByUnit = new Map<string, ClinicInfo[]>();
    for (const u of units) {
      const { clinics } = await api.clinics(u.unit_id, state.unitKind);
      clinicsByUnit.set(u.unit_id, clinics);
    }
    const ids = state.selectedUnits.length
      ? state.selectedUnits
      : units.map((u) => u.unit_id);
    const frame = await api.lens(ids, state.unitKind, state.from, state.to, state.lensA, state.lensB);
    renderMap(
      ui.map,
      {
        units,
        clinicsByUnit,
        heat: state.layers.heatmap ? frame.heat : {},
        selected: new Set(state.selectedUnits),
      },
      state.layers,
      { width: 560, height: 420 },
      (unitId) => {
        const set = new Set(state.selectedUnits);
        if (set.has(unitId)) set.delete(unitId);
        else set.add(unitId);
        state.selectedUnits = [...set];
        sync();
        void refreshMapAndLens();
        void openUnit(unitId);
      },
    );
    if (state.layers.lens) {
      renderLens(ui.lens, frame, state.lensSize);
    } else {
      ui.lens.textContent = "";
    }
    renderDateSlider(ui.slider, meta.period, [state.from, state.to], (from, to) => {
      state.from = from;
      state.to = to;
      sync();
      void refreshMapAndLens();
    });
  }

  async function openUnit(unitId: string): Promise<void> {
    activeUnit = unitId;
    const { clinics } = await api.clinics(unitId, state.unitKind);
    activeClinics = clinics;
    session = new EditSession(clinics);
    renderTreeMatrix(ui.tree, unitId, clinics, session, () => void predict());
  }

  async function predict(): Promise<void> {
    if (!session || !activeUnit) return;
    const scenario = session.toScenario(activeUnit, state.unitKind, state.from, state.to);
    try {
      lastResult = await api.whatif(scenario, state.model);
    } catch (err) {
      ui.banner.hidden = false;
      ui.banner.textContent = `what-if failed: ${(err as Error).message}`;
      return;
    }
    ui.banner.hidden = true;
    renderPredictions(ui.chart, lastResult, state.mode);
  }

  async function refreshStorage(): Promise<void> {
    const { sequences } = await api.sequences();
    renderSequences(ui.storage, sequences, (seq) => {
      state.selectedUnits = seq.entries.map((e) => e.unit_id);
      state.from = seq.from;
      state.to = seq.to;
      sync();
      void refreshAll();
    });
  }

  function renderControls(): void {
    ui.controls.textContent = "";
    const saveBtn = document.createElement("button");
    saveBtn.textContent = "Save selection";
    saveBtn.addEventListener("click", () => {
      const ids = state.selectedUnits;
      if (!ids.length) return;
      void api
        .saveSequence(ids, state.unitKind, state.from, state.to)
        .then(() => refreshStorage());
    });
    ui.controls.appendChild(saveBtn);

    for (const layer of ["lens", "clinics", "polygons", "heatmap"] as const) {
      const label = document.createElement("label");
      const box = document.createElement("input");
      box.type = "checkbox";
      box.checked = state.layers[layer];
      box.addEventListener("change", () => {
        state.layers[layer] = box.checked;
        sync();
        void refreshMapAndLens();
      });
      label.append(box, ` ${layer}`);
      ui.controls.appendChild(label);
    }

    const modelSelect = document.createElement("select");
    for (const name of meta.models) {
      const opt = document.createElement("option");
      opt.value = name;
      opt.textContent = name;
      opt.selected = name === state.model;
      modelSelect.appendChild(opt);
    }
    modelSelect.addEventListener("change", () => {
      state.model = modelSelect.value;
      sync();
      void showImportance();
      if (lastResult) void predict();
    });
    ui.controls.appendChild(modelSelect);

    for (const mode of ["P1", "P2", "P3", "P4"] as PredictionMode[]) {
      const btn = document.createElement("button");
      btn.textContent = mode;
      btn.dataset.mode = mode;
      btn.addEventListener("click", () => {
        state.mode = mode;
        sync();
        // pure view change on the stored result; no refetch
        if (lastResult) renderPredictions(ui.chart, lastResult, mode);
      });
      ui.controls.appendChild(btn);
    }
  }

  async function showImportance(): Promise<void> {
    const { importance } = await api.importance(state.model);
    const top = Object.entries(importance)
      .sort((a, b) => b[1] - a[1])
      .slice(0, 12);
    ui.importance.textContent = "";
    const list = document.createElement("ol");
    for (const [feature, weight] of top) {
      const item = document.createElement("li");
      const bar = document.createElement("span");
      bar.className = "imp-bar";
      bar.style.width = `${Math.round(weight * 300)}px`;
      item.append(bar, ` ${feature} (${weight.toFixed(4)})`);
      list.appendChild(item);
    }
    ui.importance.appendChild(list);
  }

  async function refreshAll(): Promise<void> {
    renderControls();
    await refreshMapAndLens();
    await refreshStorage();
    await showImportance();
    if (activeUnit) await openUnit(activeUnit);
  }

  sync();
  await refreshAll();
  if (state.selectedUnits.length) await openUnit(state.selectedUnits[0]);
  void activeClinics;
}

boot().catch((err) => {
  const banner = document.getElementById("banner");
  if (banner) {
    banner.hidden = false;
    banner.textContent = `failed to start: ${err}`;
  }
});
