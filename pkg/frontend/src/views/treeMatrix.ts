import type { ClinicInfo } from "../api/types";
import { EditSession } from "../state/editDiff";
import { theme } from "../theme";

const FACTOR_LABELS = [
  "Referral Required",
  "Age Limit",
  "Booking Required",
  "Walk-in Allowed",
  "Drive-through Allowed",
  "Wheelchair Accessible",
];

/**
 * Indented tree: unit -> clinics -> a 1x6 factor vector plus the 7x48
 * half-hour schedule matrix. Clicking a factor block toggles it; clicking or
 * dragging across schedule cells toggles half-hour blocks. The session's
 * edit diff is the scenario that Predict submits.
 */
export function renderTreeMatrix(
  container: HTMLElement,
  unitId: string,
  clinics: ClinicInfo[],
  session: EditSession,
  onPredict: () => void,
): void {
  container.textContent = "";
  const root = document.createElement("div");
  root.className = "tree-matrix";

  const header = document.createElement("div");
  header.className = "tm-unit";
  const caret = document.createElement("button");
  caret.textContent = "▾";
  caret.addEventListener("click", () => {
    body.hidden = !body.hidden;
    caret.textContent = body.hidden ? "▸" : "▾";
  });
  const title = document.createElement("span");
  title.textContent = `${unitId} — ${clinics.length} clinic(s)`;
  const predict = document.createElement("button");
  predict.className = "tm-predict";
  predict.textContent = "Predict";
  predict.addEventListener("click", onPredict);
  header.append(caret, title, predict);
  root.appendChild(header);

  const body = document.createElement("div");
  body.className = "tm-clinics";
  for (const clinic of clinics) {
    body.appendChild(clinicNode(clinic, session));
  }
  root.appendChild(body);
  container.appendChild(root);
}

function clinicNode(clinic: ClinicInfo, session: EditSession): HTMLElement {
  const node = document.createElement("div");
  node.className = "tm-clinic";
  node.dataset.clinic = clinic.clinic_id;

  const name = document.createElement("div");
  name.className = "tm-clinic-name";
  name.textContent = clinic.name;
  const revert = document.createElement("button");
  revert.textContent = "revert";
  revert.addEventListener("click", () => {
    session.revertClinic(clinic.clinic_id);
    refresh();
  });
  name.appendChild(revert);
  node.appendChild(name);

  const factorRow = document.createElement("div");
  factorRow.className = "tm-factors";
  const schedule = document.createElement("div");
  schedule.className = "tm-schedule";

  const refresh = () => {
    drawFactors();
    drawSchedule();
  };

  const drawFactors = () => {
    factorRow.textContent = "";
    const flags = session.currentFactors(clinic.clinic_id);
    flags.forEach((flag, i) => {
      const cell = document.createElement("button");
      cell.className = "tm-factor";
      cell.dataset.index = String(i);
      cell.dataset.on = String(flag);
      cell.title = FACTOR_LABELS[i];
      cell.style.background = flag ? theme.factorOn : theme.factorOff;
      cell.addEventListener("click", () => {
        session.toggleFactor(clinic.clinic_id, i);
        drawFactors();
      });
      factorRow.appendChild(cell);
    });
  };

  let dragging: { open: boolean } | null = null;
  const drawSchedule = () => {
    schedule.textContent = "";
    const grid = session.currentSchedule(clinic.clinic_id);
    for (let day = 0; day < 7; day++) {
      const row = document.createElement("div");
      row.className = "tm-day-row";
      for (let block = 0; block < 48; block++) {
        const open = grid[day * 48 + block] === "1";
        const cell = document.createElement("span");
        cell.className = "tm-block";
        cell.dataset.day = String(day);
        cell.dataset.block = String(block);
        cell.dataset.open = String(open ? 1 : 0);
        cell.style.background = open ? theme.scheduleOpen : theme.scheduleClosed;
        cell.addEventListener("mousedown", (ev) => {
          ev.preventDefault();
          dragging = { open: !open };
          session.toggleScheduleCell(clinic.clinic_id, day, block);
          drawSchedule();
        });
        cell.addEventListener("mouseenter", () => {
          if (!dragging) return;
          const current = session.currentSchedule(clinic.clinic_id)[day * 48 + block] === "1";
          if (current !== dragging.open) {
            session.toggleScheduleCell(clinic.clinic_id, day, block);
            drawSchedule();
          }
        });
        row.appendChild(cell);
      }
      schedule.appendChild(row);
    }
  };
  document.addEventListener("mouseup", () => {
    dragging = null;
  });

  refresh();
  node.append(factorRow, schedule);
  return node;
}
