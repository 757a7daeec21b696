"""Feature space for the capacity regressions.

Three feature families drive every model:

* numeric: census density, the unit's released test/case counts over a
  trailing window of configurable length (default 7 days, absorbing the
  reporting lag), per-day-of-week business and break hours, clinic count at
  the location, and the day index since period start;
* scalar: day of week 1-7 (Monday=1), season 1-4 (southern hemisphere:
  Sep-Nov spring .. Jun-Aug winter), intervention level 0-3;
* summed binary: the six objective clinic factors summed over the unit's
  clinic group, plus the group size n.

A multi-clinic unit is rescaled into a single training entity: factor sums,
per-day business/break hour sums, and n. Per-clinic prediction rows reuse
the same schema with the clinic's own factors/schedule and n = 1, the unit's
numerics carried over unchanged.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from datetime import date, timedelta
from typing import Iterable, Sequence

import numpy as np

from .errors import ClinicapError, EmptyRangeError, NoClinicsError
from .ingest import (
    AggregatedDataset,
    ClinicRecord,
    Direction,
    FACTOR_NAMES,
    InterventionRecord,
    SCHEDULE_BLOCKS,
    SCHEDULE_DAYS,
    UnitKind,
)

DEFAULT_WINDOW = 7

DAY_NAMES = ("mon", "tue", "wed", "thu", "fri", "sat", "sun")


def day_scalars(d: date) -> tuple[int, int]:
    """(day_of_week 1-7 with Monday=1, season 1-4 southern hemisphere)."""
    dow = d.isoweekday()
    month = d.month
    if month in (9, 10, 11):
        season = 1      # spring
    elif month in (12, 1, 2):
        season = 2      # summer
    elif month in (3, 4, 5):
        season = 3      # autumn
    else:
        season = 4      # winter
    return dow, season


def intervention_level(d: date, interventions: Sequence[InterventionRecord]
                       ) -> tuple[int, frozenset[Direction]]:
    """Strictest active level on the day (0 when none) and active directions."""
    level = 0
    directions = set()
    for ev in interventions:
        if ev.covers(d):
            level = max(level, ev.level)
            directions.add(ev.direction)
    return level, frozenset(directions)


def encode_schedule(grid) -> tuple[np.ndarray, np.ndarray]:
    """Per-day (business_hours, break_hours) for a 7x48 half-hour grid.

    Break hours are the closed blocks strictly between a day's first and last
    open block; a fully closed day contributes zero to both.
    """
    arr = np.asarray(grid, dtype=bool)
    if arr.shape != (SCHEDULE_DAYS, SCHEDULE_BLOCKS):
        raise ClinicapError(f"schedule grid must be {SCHEDULE_DAYS}x{SCHEDULE_BLOCKS}, got {arr.shape}")
    business = arr.sum(axis=1) * 0.5
    breaks = np.zeros(SCHEDULE_DAYS)
    for d in range(SCHEDULE_DAYS):
        open_idx = np.flatnonzero(arr[d])
        if open_idx.size >= 2:
            span = open_idx[-1] - open_idx[0] + 1
            breaks[d] = (span - open_idx.size) * 0.5
    return business, breaks


@dataclass(frozen=True)
class GroupFeatures:
    """A clinic group rescaled to one unit-level entity."""

    factor_sums: tuple[int, ...]
    n_clinics: int
    business_hours: np.ndarray        # per-day sums across the group, hours
    break_hours: np.ndarray


def _merge_group(clinics: Sequence[ClinicRecord]) -> GroupFeatures:
    if not clinics:
        raise ClinicapError("cannot rescale an empty clinic group")
    sums = [0] * len(FACTOR_NAMES)
    business = np.zeros(SCHEDULE_DAYS)
    breaks = np.zeros(SCHEDULE_DAYS)
    for c in clinics:
        for j, x in enumerate(c.factors):
            sums[j] += int(x)
        b, k = encode_schedule(c.schedule_grid())
        business += b
        breaks += k
    return GroupFeatures(factor_sums=tuple(sums), n_clinics=len(clinics),
                         business_hours=business, break_hours=breaks)


def rescale_multi_to_one(clinics: Sequence[ClinicRecord]) -> GroupFeatures:
    """Sum each binary factor over the group and append the group size.

    Business and break hours merge as per-day sums across the group. All
    clinics must share one LGA.
    """
    if clinics and len({c.lga_id for c in clinics}) != 1:
        raise ClinicapError(f"clinic group spans multiple LGAs: {sorted({c.lga_id for c in clinics})}")
    return _merge_group(clinics)


# ---------------------------------------------------------------------------
# Schema
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FeatureSchema:
    """Ordered feature-name list shared by every model and every caller."""

    names: tuple[str, ...]
    kinds: tuple[str, ...]            # numeric | scalar | binary_sum
    units: tuple[str, ...]
    window: int

    def to_descriptor(self) -> list[dict]:
        return [
            {"order": i, "name": n, "kind": k, "units": u}
            for i, (n, k, u) in enumerate(zip(self.names, self.kinds, self.units))
        ]

    def to_json(self) -> str:
        return json.dumps({"window": self.window, "features": self.to_descriptor()},
                          indent=2, sort_keys=True)

    @property
    def hash(self) -> str:
        blob = json.dumps(self.to_descriptor(), sort_keys=True,
                          separators=(",", ":")).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()

    def index_of(self, name: str) -> int:
        return self.names.index(name)


def build_schema(window: int = DEFAULT_WINDOW) -> FeatureSchema:
    names: list[str] = []
    kinds: list[str] = []
    units: list[str] = []

    def add(name, kind, unit):
        names.append(name)
        kinds.append(kind)
        units.append(unit)

    add("density", "numeric", "persons/km2")
    for k in range(1, window + 1):
        add(f"tests_lag_{k}", "numeric", "tests")
    for k in range(1, window + 1):
        add(f"cases_lag_{k}", "numeric", "cases")
    for dname in DAY_NAMES:
        add(f"business_hours_{dname}", "numeric", "hours")
    for dname in DAY_NAMES:
        add(f"break_hours_{dname}", "numeric", "hours")
    add("clinic_count", "numeric", "clinics")
    add("day_index", "numeric", "days")
    add("day_of_week", "scalar", "1-7")
    add("season", "scalar", "1-4")
    add("intervention_level", "scalar", "0-3")
    for fname in FACTOR_NAMES:
        add(f"{fname}_sum", "binary_sum", "clinics")
    add("n_clinics", "binary_sum", "clinics")
    return FeatureSchema(tuple(names), tuple(kinds), tuple(units), window)


@dataclass
class TrainingMatrix:
    """Feature rows keyed by (unit_id, date) with released tests as targets."""

    schema: FeatureSchema
    X: np.ndarray
    y: np.ndarray
    keys: list[tuple[str, date]]

    def __post_init__(self):
        if self.X.shape[0] != self.y.shape[0] or self.X.shape[0] != len(self.keys):
            raise ClinicapError("rows, targets and keys must align")
        if self.X.shape[1] != len(self.schema.names):
            raise ClinicapError("row width does not match schema")
        if not np.isfinite(self.X).all() or not np.isfinite(self.y).all():
            raise ClinicapError("training matrix contains undefined values")

    @property
    def schema_hash(self) -> str:
        return self.schema.hash

    def __len__(self) -> int:
        return len(self.keys)


# ---------------------------------------------------------------------------
# Row assembly
# ---------------------------------------------------------------------------

def _series_lookup(ds: AggregatedDataset, unit_kind: UnitKind, unit_id: str):
    def lag_counts(d: date, window: int) -> tuple[list[int], list[int]]:
        tests, cases = [], []
        for k in range(1, window + 1):
            row = ds.lookup(unit_kind, unit_id, d - timedelta(days=k))
            tests.append(row.tests if row else 0)
            cases.append(row.cases if row else 0)
        return tests, cases
    return lag_counts


def assemble_row(schema: FeatureSchema, *, density: float, tests_lags: Sequence[int],
                 cases_lags: Sequence[int], business: np.ndarray, breaks: np.ndarray,
                 clinic_count: int, day_index: int, dow: int, season: int,
                 level: int, factor_sums: Sequence[int], n_clinics: int) -> np.ndarray:
    row = np.empty(len(schema.names))
    w = schema.window
    row[0] = density
    row[1:1 + w] = tests_lags
    row[1 + w:1 + 2 * w] = cases_lags
    base = 1 + 2 * w
    row[base:base + 7] = business
    row[base + 7:base + 14] = breaks
    row[base + 14] = clinic_count
    row[base + 15] = day_index
    row[base + 16] = dow
    row[base + 17] = season
    row[base + 18] = level
    row[base + 19:base + 25] = factor_sums
    row[base + 25] = n_clinics
    return row


def unit_feature_row(ds: AggregatedDataset, unit_kind: UnitKind, unit_id: str,
                     d: date, schema: FeatureSchema) -> np.ndarray:
    """The unit-level (rescaled multi-to-one) feature row for one day."""
    clinics = ds.clinics_in_unit(unit_kind, unit_id)
    if not clinics:
        raise NoClinicsError(f"unit {unit_id!r} has no clinics")
    group = _merge_group(clinics)
    demo = ds.demographic_for(unit_id)
    if demo is None:
        raise ClinicapError(f"no census row for unit {unit_id!r}")
    tests_lags, cases_lags = _series_lookup(ds, unit_kind, unit_id)(d, schema.window)
    dow, season = day_scalars(d)
    level, _ = intervention_level(d, ds.interventions)
    return assemble_row(
        schema,
        density=demo.density,
        tests_lags=tests_lags,
        cases_lags=cases_lags,
        business=group.business_hours,
        breaks=group.break_hours,
        clinic_count=group.n_clinics,
        day_index=(d - ds.period[0]).days,
        dow=dow, season=season, level=level,
        factor_sums=group.factor_sums,
        n_clinics=group.n_clinics,
    )


def clinic_feature_row(ds: AggregatedDataset, clinic: ClinicRecord, d: date,
                       schema: FeatureSchema, unit_kind: UnitKind = UnitKind.LGA,
                       factors: Sequence[bool] | None = None,
                       schedule_grid=None) -> np.ndarray:
    """Per-clinic prediction row: own factors/schedule, n = 1, unit numerics.

    ``factors`` / ``schedule_grid`` override the stored record for what-if
    evaluation without mutating it.
    """
    unit_id = clinic.lga_id if unit_kind == UnitKind.LGA else clinic.postcode
    demo = ds.demographic_for(unit_id)
    if demo is None:
        raise ClinicapError(f"no census row for unit {unit_id!r}")
    group = _merge_group(ds.clinics_in_unit(unit_kind, unit_id))
    use_factors = clinic.factors if factors is None else tuple(bool(x) for x in factors)
    grid = clinic.schedule_grid() if schedule_grid is None else np.asarray(schedule_grid, dtype=bool)
    business, breaks = encode_schedule(grid)
    tests_lags, cases_lags = _series_lookup(ds, unit_kind, unit_id)(d, schema.window)
    dow, season = day_scalars(d)
    level, _ = intervention_level(d, ds.interventions)
    return assemble_row(
        schema,
        density=demo.density,
        tests_lags=tests_lags,
        cases_lags=cases_lags,
        business=business,
        breaks=breaks,
        clinic_count=group.n_clinics,
        day_index=(d - ds.period[0]).days,
        dow=dow, season=season, level=level,
        factor_sums=[int(x) for x in use_factors],
        n_clinics=1,
    )


def build_training_set(ds: AggregatedDataset, unit_kind: UnitKind,
                       from_date: date, to_date: date,
                       window: int = DEFAULT_WINDOW) -> TrainingMatrix:
    """One row per (unit-with-clinics, date), date-major, target = daily tests.

    Trailing-window features only ever read dates strictly before the row
    date, so truncating the future never changes past rows.
    """
    if from_date > to_date:
        raise EmptyRangeError(f"{from_date}..{to_date} is empty")
    first, last = ds.period
    if from_date < first or to_date > last:
        raise EmptyRangeError(f"range {from_date}..{to_date} outside period {first}..{last}")

    schema = build_schema(window)
    units = ds.units_with_clinics(unit_kind)
    rows, targets, keys = [], [], []
    n_days = (to_date - from_date).days + 1
    for i in range(n_days):
        d = from_date + timedelta(days=i)
        for unit_id in units:
            rows.append(unit_feature_row(ds, unit_kind, unit_id, d, schema))
            day = ds.lookup(unit_kind, unit_id, d)
            targets.append(float(day.tests) if day else 0.0)
            keys.append((unit_id, d))
    return TrainingMatrix(schema=schema, X=np.vstack(rows),
                          y=np.asarray(targets, dtype=float), keys=keys)


def select_features(matrix: TrainingMatrix, names: Iterable[str]) -> TrainingMatrix:
    """Schema filter: keep only the named columns, preserving schema order."""
    wanted = set(names)
    unknown = wanted - set(matrix.schema.names)
    if unknown:
        raise ClinicapError(f"unknown feature names: {sorted(unknown)}")
    idx = [i for i, n in enumerate(matrix.schema.names) if n in wanted]
    sub = FeatureSchema(
        names=tuple(matrix.schema.names[i] for i in idx),
        kinds=tuple(matrix.schema.kinds[i] for i in idx),
        units=tuple(matrix.schema.units[i] for i in idx),
        window=matrix.schema.window,
    )
    return TrainingMatrix(schema=sub, X=matrix.X[:, idx], y=matrix.y, keys=matrix.keys)
