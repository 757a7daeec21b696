import type { WhatIfResponse } from "../api/types";

/**
 * Tooltip text is built from engine-supplied numbers rendered verbatim, so
 * what the tooltip shows byte-matches the wire value: the engine serializes
 * floats as shortest-round-trip literals with integral values keeping one
 * decimal ("41.0"), which is String(x) plus the integral special case.
 * Engine capacity values always carry at most two decimals by contract.
 */
export function exact(value: number): string {
  return Number.isInteger(value) ? value.toFixed(1) : String(value);
}

export interface TooltipLine {
  clinicId: string;
  initial: string;
  updated: string;
  effect: string;
}

export function tooltipLines(result: WhatIfResponse, date: string): TooltipLine[] {
  return result.effects
    .filter((e) => e.date === date)
    .map((e) => ({
      clinicId: e.clinic_id,
      initial: exact(e.initial),
      updated: exact(e.updated),
      effect: exact(e.effect),
    }));
}

export function tooltipText(result: WhatIfResponse, date: string): string {
  const lines = tooltipLines(result, date).map(
    (l) => `${l.clinicId}: ${l.initial} -> ${l.updated} (${l.effect})`,
  );
  return [date, ...lines].join("\n");
}

/** Per-day sums shown in headers; exact at cent resolution. */
export function daySums(result: WhatIfResponse, date: string): { initial: string; updated: string } {
  let initialCents = 0;
  let updatedCents = 0;
  for (const e of result.effects) {
    if (e.date !== date) continue;
    initialCents += Math.round(e.initial * 100);
    updatedCents += Math.round(e.updated * 100);
  }
  return { initial: exact(initialCents / 100), updated: exact(updatedCents / 100) };
}
