import type { ClinicInfo, ScenarioEdit, ScenarioPayload, UnitKind } from "../api/types";

/**
 * Working copy of clinic features during a tree-matrix editing session.
 * The scenario sent to the engine is exactly the diff between this working
 * copy and the stored records: toggling a block and toggling it back leaves
 * no edit behind.
 */
export class EditSession {
  private stored = new Map<string, ClinicInfo>();
  private factors = new Map<string, number[]>();
  private schedules = new Map<string, string>();

  constructor(clinics: ClinicInfo[]) {
    for (const c of clinics) {
      this.stored.set(c.clinic_id, c);
      this.factors.set(c.clinic_id, [...c.factors]);
      this.schedules.set(c.clinic_id, c.schedule);
    }
  }

  clinicIds(): string[] {
    return [...this.stored.keys()];
  }

  currentFactors(clinicId: string): number[] {
    return [...this.must(this.factors, clinicId)];
  }

  currentSchedule(clinicId: string): string {
    return this.must(this.schedules, clinicId);
  }

  toggleFactor(clinicId: string, index: number): void {
    const flags = this.must(this.factors, clinicId);
    if (index < 0 || index >= flags.length) throw new Error(`factor index ${index} out of range`);
    flags[index] = flags[index] ? 0 : 1;
  }

  /** day 0-6 (Monday first), block 0-47. */
  toggleScheduleCell(clinicId: string, day: number, block: number): void {
    if (day < 0 || day > 6 || block < 0 || block > 47) {
      throw new Error(`schedule cell (${day}, ${block}) out of range`);
    }
    const schedule = this.must(this.schedules, clinicId);
    const pos = day * 48 + block;
    const flipped = schedule[pos] === "1" ? "0" : "1";
    this.schedules.set(clinicId, schedule.slice(0, pos) + flipped + schedule.slice(pos + 1));
  }

  setScheduleRange(clinicId: string, day: number, startBlock: number, endBlock: number, open: boolean): void {
    for (let b = startBlock; b < endBlock; b++) {
      const schedule = this.must(this.schedules, clinicId);
      const pos = day * 48 + b;
      const want = open ? "1" : "0";
      if (schedule[pos] !== want) {
        this.schedules.set(clinicId, schedule.slice(0, pos) + want + schedule.slice(pos + 1));
      }
    }
  }

  revertClinic(clinicId: string): void {
    const stored = this.stored.get(clinicId);
    if (!stored) throw new Error(`unknown clinic ${clinicId}`);
    this.factors.set(clinicId, [...stored.factors]);
    this.schedules.set(clinicId, stored.schedule);
  }

  /** The accumulated diff against stored records, one edit per touched clinic. */
  edits(): ScenarioEdit[] {
    const out: ScenarioEdit[] = [];
    for (const [clinicId, stored] of this.stored) {
      const factors = this.must(this.factors, clinicId);
      const schedule = this.must(this.schedules, clinicId);
      const factorsChanged = factors.some((f, i) => f !== stored.factors[i]);
      const scheduleChanged = schedule !== stored.schedule;
      if (!factorsChanged && !scheduleChanged) continue;
      out.push({
        clinic_id: clinicId,
        factors: factorsChanged ? [...factors] : null,
        schedule: scheduleChanged ? schedule : null,
      });
    }
    return out;
  }

  isEmpty(): boolean {
    return this.edits().length === 0;
  }

  toScenario(unitId: string, unitKind: UnitKind, from: string, to: string, calibrate = true): ScenarioPayload {
    return {
      unit_id: unitId,
      unit_kind: unitKind,
      from,
      to,
      calibrate,
      edits: this.edits(),
    };
  }

  private must<V>(map: Map<string, V>, clinicId: string): V {
    const value = map.get(clinicId);
    if (value === undefined) throw new Error(`unknown clinic ${clinicId}`);
    return value;
  }
}
