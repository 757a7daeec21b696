import type { SequencePayload } from "../api/types";
import { theme } from "../theme";

/**
 * Saved exploration sequences, rendered strictly in the server-provided
 * order: a leading circle with the sequence number and range, then one
 * circle per unit (clinic count in the center) in descending-total order.
 */
export function renderSequences(
  container: HTMLElement,
  sequences: SequencePayload[],
  onRecall: (seq: SequencePayload) => void,
): void {
  container.textContent = "";
  const list = document.createElement("div");
  list.className = "storage-view";
  for (const seq of sequences) {
    const row = document.createElement("div");
    row.className = "sequence-row";
    row.dataset.sequence = String(seq.sequence_number);

    const head = document.createElement("button");
    head.className = "seq-head";
    head.textContent = `#${seq.sequence_number}`;
    head.title = `${seq.from} .. ${seq.to}`;
    head.addEventListener("click", () => onRecall(seq));
    row.appendChild(head);

    for (const entry of seq.entries) {
      const circle = document.createElement("span");
      circle.className = "seq-unit";
      circle.dataset.unit = entry.unit_id;
      circle.dataset.total = String(entry.total_tests);
      circle.textContent = String(entry.clinic_count);
      circle.title = `${entry.unit_id}: ${entry.total_tests} tests`;
      circle.style.background =
        entry.relation === "multiple_to_one" ? theme.multiClinic : theme.singleClinic;
      row.appendChild(circle);
    }
    list.appendChild(row);
  }
  container.appendChild(list);
}
