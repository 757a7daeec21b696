"""Per-clinic capacity predictions, proportional calibration, what-if runs.

The model is trained on unit-level ground truth only, so per-clinic output
comes from applying it to a clinic-shaped row (own factors/schedule, n = 1,
unit numerics carried over). Two disaggregation modes are exposed:

* uncalibrated: the raw per-clinic model outputs;
* calibrated: each day's clinic predictions are rescaled proportionally so
  their sum matches the unit-level model prediction for that day (a day
  whose clinic predictions are all zero stays at zero), then re-rounded.

Calibration is also what couples clinics inside a unit: editing one clinic
changes the unit-level merged features, which moves the unit prediction,
which rescales everyone.

Every emitted value is clamped at zero and rounded half-up to exactly two
decimals; effect algebra (initial + effect = updated) is exact at cent
resolution.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace
from datetime import date, timedelta
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from .dataset import query_series
from .errors import (
    ClinicapError,
    EmptyRangeError,
    ForeignClinicError,
    NoClinicsError,
)
from .features import (
    FeatureSchema,
    assemble_row,
    clinic_feature_row,
    day_scalars,
    intervention_level,
    _merge_group,
)
from .ingest import AggregatedDataset, ClinicRecord, UnitKind
from .regress import RegressionModel


def round2(x: float) -> float:
    """Round half-up to two decimals (clamp handled by callers)."""
    return float(Decimal(repr(float(x))).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def cents(x: float) -> int:
    return int(round(x * 100))


@dataclass(frozen=True)
class ClinicPrediction:
    clinic_id: str
    date: date
    y_clinic: float     # >= 0, exactly two decimals

    def __post_init__(self):
        if self.y_clinic < 0:
            raise ClinicapError("y_clinic must be non-negative")


@dataclass
class PredictionDay:
    date: date
    clinics: list[ClinicPrediction]
    unit_total: float          # calibrated: unit-level model output; else sum
    ground_truth: int

    def clinic_sum_cents(self) -> int:
        return sum(cents(p.y_clinic) for p in self.clinics)


@dataclass
class PredictionSet:
    unit_kind: UnitKind
    unit_id: str
    from_date: date
    to_date: date
    calibrated: bool
    days: list[PredictionDay]

    def all_predictions(self) -> list[ClinicPrediction]:
        return [p for day in self.days for p in day.clinics]

    def to_payload(self) -> dict:
        return {
            "unit_kind": self.unit_kind.value,
            "unit_id": self.unit_id,
            "from": self.from_date.isoformat(),
            "to": self.to_date.isoformat(),
            "calibrated": self.calibrated,
            "days": [
                {
                    "date": day.date.isoformat(),
                    "unit_total": day.unit_total,
                    "ground_truth": day.ground_truth,
                    "clinics": [
                        {"clinic_id": p.clinic_id, "y_clinic": p.y_clinic}
                        for p in day.clinics
                    ],
                }
                for day in self.days
            ],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["clinic_id", "date", "y_clinic"])
        for day in self.days:
            for p in day.clinics:
                writer.writerow([p.clinic_id, p.date.isoformat(), f"{p.y_clinic:.2f}"])
        return buf.getvalue()


@dataclass(frozen=True)
class ClinicEdit:
    """Override of a clinic's factors and/or schedule inside one scenario."""

    clinic_id: str
    factors: tuple[bool, ...] | None = None
    schedule: str | None = None          # 336-char grid string

    def __post_init__(self):
        if self.factors is not None and len(self.factors) != 6:
            raise ClinicapError(f"edit for {self.clinic_id}: need exactly 6 factors")
        if self.schedule is not None:
            if len(self.schedule) != 336 or set(self.schedule) - {"0", "1"}:
                raise ClinicapError(f"edit for {self.clinic_id}: malformed schedule grid")


@dataclass
class WhatIfScenario:
    unit_id: str
    from_date: date
    to_date: date
    edits: list[ClinicEdit] = field(default_factory=list)
    calibrate: bool = True
    unit_kind: UnitKind = UnitKind.LGA

    def to_payload(self) -> dict:
        return {
            "unit_id": self.unit_id,
            "unit_kind": self.unit_kind.value,
            "from": self.from_date.isoformat(),
            "to": self.to_date.isoformat(),
            "calibrate": self.calibrate,
            "edits": [
                {
                    "clinic_id": e.clinic_id,
                    "factors": None if e.factors is None else [int(x) for x in e.factors],
                    "schedule": e.schedule,
                }
                for e in self.edits
            ],
        }

    @classmethod
    def from_payload(cls, payload: dict) -> "WhatIfScenario":
        try:
            edits = [
                ClinicEdit(
                    clinic_id=e["clinic_id"],
                    factors=None if e.get("factors") is None
                    else tuple(bool(x) for x in e["factors"]),
                    schedule=e.get("schedule"),
                )
                for e in payload.get("edits", [])
            ]
            return cls(
                unit_id=payload["unit_id"],
                unit_kind=UnitKind(payload.get("unit_kind", "lga")),
                from_date=date.fromisoformat(payload["from"]),
                to_date=date.fromisoformat(payload["to"]),
                calibrate=bool(payload.get("calibrate", True)),
                edits=edits,
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ClinicapError(f"malformed scenario: {exc}") from exc


@dataclass(frozen=True)
class EffectCell:
    clinic_id: str
    date: date
    initial: float
    updated: float
    effect: float      # updated - initial, exact at two decimals


@dataclass
class WhatIfResult:
    scenario: WhatIfScenario
    initial: PredictionSet
    updated: PredictionSet
    effects: list[EffectCell]

    def total_effect(self) -> float:
        return sum(cents(e.effect) for e in self.effects) / 100.0

    def effects_for_clinic(self, clinic_id: str) -> list[EffectCell]:
        return [e for e in self.effects if e.clinic_id == clinic_id]

    def to_payload(self) -> dict:
        return {
            "scenario": self.scenario.to_payload(),
            "initial": self.initial.to_payload(),
            "updated": self.updated.to_payload(),
            "effects": [
                {
                    "clinic_id": e.clinic_id,
                    "date": e.date.isoformat(),
                    "initial": e.initial,
                    "updated": e.updated,
                    "effect": e.effect,
                }
                for e in self.effects
            ],
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["clinic_id", "date", "initial", "updated", "effect"])
        for e in self.effects:
            writer.writerow([e.clinic_id, e.date.isoformat(), f"{e.initial:.2f}",
                             f"{e.updated:.2f}", f"{e.effect:.2f}"])
        return buf.getvalue()


# ---------------------------------------------------------------------------
# Prediction
# ---------------------------------------------------------------------------

def _date_range(from_date: date, to_date: date) -> list[date]:
    if from_date > to_date:
        raise EmptyRangeError(f"{from_date}..{to_date} is empty")
    return [from_date + timedelta(days=i) for i in range((to_date - from_date).days + 1)]


def _apply_edits(clinics: list[ClinicRecord], edits: list[ClinicEdit]) -> list[ClinicRecord]:
    """Copies of the stored records with edits applied; originals untouched."""
    by_id = {e.clinic_id: e for e in edits}
    out = []
    for c in clinics:
        e = by_id.get(c.clinic_id)
        if e is None:
            out.append(c)
            continue
        out.append(replace(
            c,
            factors=c.factors if e.factors is None else tuple(bool(x) for x in e.factors),
            schedule=c.schedule if e.schedule is None else e.schedule,
        ))
    return out


def _unit_row_for_group(ds: AggregatedDataset, unit_kind: UnitKind, unit_id: str,
                        clinics: list[ClinicRecord], d: date,
                        schema: FeatureSchema) -> np.ndarray:
    """Unit-level row rebuilt from an explicit (possibly edited) clinic group."""
    group = _merge_group(clinics)
    demo = ds.demographic_for(unit_id)
    if demo is None:
        raise ClinicapError(f"no census row for unit {unit_id!r}")
    tests_lags, cases_lags = [], []
    for k in range(1, schema.window + 1):
        row = ds.lookup(unit_kind, unit_id, d - timedelta(days=k))
        tests_lags.append(row.tests if row else 0)
        cases_lags.append(row.cases if row else 0)
    dow, season = day_scalars(d)
    level, _ = intervention_level(d, ds.interventions)
    return assemble_row(
        schema, density=demo.density, tests_lags=tests_lags, cases_lags=cases_lags,
        business=group.business_hours, breaks=group.break_hours,
        clinic_count=group.n_clinics, day_index=(d - ds.period[0]).days,
        dow=dow, season=season, level=level,
        factor_sums=group.factor_sums, n_clinics=group.n_clinics,
    )


def predict_clinic_day(model: RegressionModel, ds: AggregatedDataset,
                       clinic: ClinicRecord, d: date,
                       unit_kind: UnitKind = UnitKind.LGA) -> ClinicPrediction:
    """Raw per-clinic prediction for one day: clamp at zero, round to 2 dp."""
    row = clinic_feature_row(ds, clinic, d, model.schema, unit_kind)
    raw = float(model.predict(row[None, :])[0])
    return ClinicPrediction(clinic.clinic_id, d, round2(max(0.0, raw)))


def predict_breakdown(model: RegressionModel, ds: AggregatedDataset, unit_id: str,
                      from_date: date, to_date: date, calibrate: bool = True,
                      unit_kind: UnitKind = UnitKind.LGA,
                      edits: list[ClinicEdit] | None = None) -> PredictionSet:
    """Per-clinic daily predictions for one unit over an inclusive range.

    With ``edits`` the scenario group replaces the stored records for both
    the per-clinic rows and the unit-level calibration row.
    """
    stored = ds.clinics_in_unit(unit_kind, unit_id)
    if not stored:
        raise NoClinicsError(f"unit {unit_id!r} has no clinics")
    clinics = _apply_edits(stored, edits or [])
    dates = _date_range(from_date, to_date)
    truth = {r.date: r.tests for r in query_series(ds, unit_kind, unit_id,
                                                   from_date, to_date)}

    clinic_rows = np.vstack([
        clinic_feature_row(ds, c, d, model.schema, unit_kind)
        for d in dates for c in clinics
    ])
    clinic_raw = np.maximum(model.predict(clinic_rows), 0.0)
    unit_rows = np.vstack([
        _unit_row_for_group(ds, unit_kind, unit_id, clinics, d, model.schema)
        for d in dates
    ])
    unit_raw = np.maximum(model.predict(unit_rows), 0.0)

    n = len(clinics)
    days = []
    for i, d in enumerate(dates):
        raw = clinic_raw[i * n:(i + 1) * n]
        if calibrate:
            s = float(raw.sum())
            scaled = raw * (float(unit_raw[i]) / s) if s > 0 else raw
            values = [round2(v) for v in scaled]
            unit_total = float(unit_raw[i])
        else:
            values = [round2(float(v)) for v in raw]
            unit_total = sum(cents(v) for v in values) / 100.0
        days.append(PredictionDay(
            date=d,
            clinics=[ClinicPrediction(c.clinic_id, d, v) for c, v in zip(clinics, values)],
            unit_total=unit_total,
            ground_truth=truth[d],
        ))
    return PredictionSet(unit_kind=unit_kind, unit_id=unit_id, from_date=from_date,
                         to_date=to_date, calibrated=calibrate, days=days)


def run_whatif(model: RegressionModel, ds: AggregatedDataset,
               scenario: WhatIfScenario) -> WhatIfResult:
    """Initial vs updated predictions for a scenario, plus exact effects.

    Stored clinic records are never mutated; a rerun with an empty edit set
    reproduces the baseline cell for cell.
    """
    stored = ds.clinics_in_unit(scenario.unit_kind, scenario.unit_id)
    known = {c.clinic_id for c in stored}
    foreign = [e.clinic_id for e in scenario.edits if e.clinic_id not in known]
    if foreign:
        raise ForeignClinicError(
            f"edits reference clinics outside unit {scenario.unit_id!r}: {sorted(foreign)}")

    initial = predict_breakdown(model, ds, scenario.unit_id, scenario.from_date,
                                scenario.to_date, scenario.calibrate,
                                scenario.unit_kind)
    updated = predict_breakdown(model, ds, scenario.unit_id, scenario.from_date,
                                scenario.to_date, scenario.calibrate,
                                scenario.unit_kind, edits=scenario.edits)
    effects = []
    for day_i, day_u in zip(initial.days, updated.days):
        for p_i, p_u in zip(day_i.clinics, day_u.clinics):
            delta = (cents(p_u.y_clinic) - cents(p_i.y_clinic)) / 100.0
            effects.append(EffectCell(p_i.clinic_id, day_i.date,
                                      p_i.y_clinic, p_u.y_clinic, delta))
    return WhatIfResult(scenario=scenario, initial=initial, updated=updated,
                        effects=effects)


def average_capacity(predictions: list[ClinicPrediction], d1: date, d2: date) -> float:
    """Mean daily capacity over the inclusive range [d1, d2].

    The denominator is the inclusive day count D = (d2 - d1) + 1; predictions
    must cover every day of the range exactly once.
    """
    if d1 > d2:
        raise EmptyRangeError(f"{d1}..{d2} is empty")
    wanted = set(_date_range(d1, d2))
    got = {p.date for p in predictions if d1 <= p.date <= d2}
    if got != wanted:
        missing = sorted(d.isoformat() for d in wanted - got)
        raise ClinicapError(f"predictions do not cover the range; missing {missing}")
    by_date = {}
    for p in predictions:
        if d1 <= p.date <= d2:
            if p.date in by_date:
                raise ClinicapError(f"multiple predictions for {p.date}")
            by_date[p.date] = p.y_clinic
    total = sum(cents(v) for v in by_date.values())
    return round2(total / 100.0 / len(wanted))


def scenario_from_json(text: str) -> WhatIfScenario:
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ClinicapError(f"malformed scenario JSON: {exc}") from exc
    return WhatIfScenario.from_payload(payload)


def grid_from_edit(schedule: str) -> np.ndarray:
    """Convenience: 336-char string -> (7, 48) boolean grid."""
    bits = np.frombuffer(schedule.encode("ascii"), dtype=np.uint8) - ord("0")
    return bits.reshape(7, 48).astype(bool)
