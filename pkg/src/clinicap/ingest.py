"""Raw tabular inputs -> cleaned, aggregated dataset.

This module owns the domain records (clinics, count rows, interventions,
census rows), the government counting rule for per-person test histories,
the self-reported cleaning rule, and the assembly step that turns cleaned
per-(unit, date) count rows into a complete AggregatedDataset.

Counting rule
-------------
Released test totals count every negative test separately, plus a person's
first positive test; anything after the first positive is not counted.
``apply_counting_rule`` implements exactly that for one person's ordered
history.

Completeness
------------
``build_aggregate`` emits one RegionDay per (unit-with-clinics, date) pair
for every date of the study period, per unit kind. Missing (unit, date)
pairs are filled with zero counts and flagged ``imputed`` rather than
dropped. Units that have no clinics stay visible through the census
registry but get no RegionDay rows; they carry no usable target for
modeling.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import date, timedelta
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    ClinicapError,
    DuplicateRowsError,
    EmptyRangeError,
    ReferentialError,
    UnsortedHistoryError,
)


class UnitKind(str, Enum):
    LGA = "lga"
    POSTCODE = "postcode"


class TestResult(str, Enum):
    NEGATIVE = "negative"
    POSITIVE = "positive"


class CountKind(str, Enum):
    TESTS = "tests"
    CASES = "cases"


class Direction(str, Enum):
    EASED = "eased"
    RESTRICTION = "restriction"


#: Fixed order of the six binary objective factors on a clinic record.
FACTOR_NAMES = (
    "referral_required",
    "age_limit",
    "booking_required",
    "walkin_allowed",
    "drivethrough_allowed",
    "wheelchair_accessible",
)

SCHEDULE_DAYS = 7
SCHEDULE_BLOCKS = 48  # half-hour blocks, block 0 = 00:00-00:30
SCHEDULE_CELLS = SCHEDULE_DAYS * SCHEDULE_BLOCKS


@dataclass(frozen=True)
class TestEvent:
    """One test taken by one person on one day."""

    person_id: str
    date: date
    result: TestResult


@dataclass(frozen=True)
class RawCountRow:
    """One released (unit, date) count of either tests or cases."""

    date: date
    unit_kind: UnitKind
    unit_id: str
    count: int
    kind: CountKind
    self_reported: bool = False

    def __post_init__(self):
        if self.count < 0:
            raise ValueError(f"negative count {self.count} for {self.unit_id} on {self.date}")
        if not self.unit_id:
            raise ValueError("empty unit_id")


@dataclass(frozen=True)
class ClinicRecord:
    """A clinic's location, unit membership, objective factors and weekly schedule.

    ``factors`` holds the six binary objective factors in FACTOR_NAMES order.
    ``schedule`` is the 7x48 half-hour grid stored row-major as a 336-char
    string of '0'/'1' (Monday row first, block 0 = 00:00-00:30).
    """

    clinic_id: str
    name: str
    lga_id: str
    postcode: str
    latitude: float
    longitude: float
    factors: tuple[bool, bool, bool, bool, bool, bool]
    schedule: str

    def __post_init__(self):
        if len(self.factors) != len(FACTOR_NAMES):
            raise ValueError(f"clinic {self.clinic_id}: expected {len(FACTOR_NAMES)} factors")
        if len(self.schedule) != SCHEDULE_CELLS or set(self.schedule) - {"0", "1"}:
            raise ValueError(f"clinic {self.clinic_id}: schedule must be {SCHEDULE_CELLS} chars of 0/1")

    def schedule_grid(self) -> np.ndarray:
        """The schedule as a (7, 48) boolean array."""
        bits = np.frombuffer(self.schedule.encode("ascii"), dtype=np.uint8) - ord("0")
        return bits.reshape(SCHEDULE_DAYS, SCHEDULE_BLOCKS).astype(bool)

    def open_block_count(self) -> int:
        return self.schedule.count("1")


def schedule_from_grid(grid) -> str:
    """Encode a (7, 48) boolean grid as the 336-char row-major string."""
    arr = np.asarray(grid)
    if arr.shape != (SCHEDULE_DAYS, SCHEDULE_BLOCKS):
        raise ValueError(f"schedule grid must be {SCHEDULE_DAYS}x{SCHEDULE_BLOCKS}, got {arr.shape}")
    return "".join("1" if v else "0" for v in arr.astype(bool).ravel())


@dataclass(frozen=True)
class InterventionRecord:
    """A government intervention event, inclusive date range, level 0-3."""

    start_date: date
    end_date: date
    level: int
    direction: Direction
    label: str

    def __post_init__(self):
        if self.start_date > self.end_date:
            raise ValueError(f"intervention '{self.label}': start after end")
        if self.level not in (0, 1, 2, 3):
            raise ValueError(f"intervention '{self.label}': level must be 0-3")

    def covers(self, d: date) -> bool:
        return self.start_date <= d <= self.end_date


@dataclass(frozen=True)
class DemographicRecord:
    """Census row for one unit: population, area and derived density."""

    unit_id: str
    population: int
    area_km2: float
    density: float

    def __post_init__(self):
        if self.population < 0:
            raise ValueError(f"{self.unit_id}: negative population")
        if self.area_km2 <= 0:
            raise ValueError(f"{self.unit_id}: area must be positive")
        expected = self.population / self.area_km2
        if abs(self.density - expected) > 1e-6 * max(abs(expected), 1.0):
            raise ValueError(f"{self.unit_id}: density {self.density} != population/area {expected}")


@dataclass(frozen=True)
class RegionDay:
    """One region-unit on one date: released test and case counts."""

    unit_kind: UnitKind
    unit_id: str
    date: date
    tests: int
    cases: int
    imputed: bool = False

    def __post_init__(self):
        if self.tests < 0 or self.cases < 0:
            raise ValueError(f"{self.unit_id} {self.date}: negative counts")


@dataclass
class AggregatedDataset:
    """Immutable-by-convention assembled dataset driving all downstream stages."""

    region_days: list[RegionDay]
    clinics: list[ClinicRecord]
    interventions: list[InterventionRecord]
    demographics: list[DemographicRecord]
    period: tuple[date, date]
    _by_key: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self._reindex()

    def _reindex(self):
        self._by_key = {
            (rd.unit_kind, rd.unit_id, rd.date): rd for rd in self.region_days
        }

    # -- lookups used by the dataset / features layers ---------------------

    def lookup(self, unit_kind: UnitKind, unit_id: str, d: date) -> RegionDay | None:
        return self._by_key.get((unit_kind, unit_id, d))

    def clinics_in_unit(self, unit_kind: UnitKind, unit_id: str) -> list[ClinicRecord]:
        if unit_kind == UnitKind.LGA:
            return [c for c in self.clinics if c.lga_id == unit_id]
        return [c for c in self.clinics if c.postcode == unit_id]

    def units_with_clinics(self, unit_kind: UnitKind) -> list[str]:
        if unit_kind == UnitKind.LGA:
            return sorted({c.lga_id for c in self.clinics})
        return sorted({c.postcode for c in self.clinics})

    def all_units(self, unit_kind: UnitKind) -> list[str]:
        """Every unit id carrying RegionDay rows for the kind (clinic-bearing).

        Zero-clinic units stay visible through the census registry only; they
        have no rows and no target relationship.
        """
        ids = {rd.unit_id for rd in self.region_days if rd.unit_kind == unit_kind}
        ids.update(self.units_with_clinics(unit_kind))
        return sorted(ids)

    def demographic_for(self, unit_id: str) -> DemographicRecord | None:
        for d in self.demographics:
            if d.unit_id == unit_id:
                return d
        return None

    def period_dates(self) -> list[date]:
        first, last = self.period
        n = (last - first).days + 1
        return [first + timedelta(days=i) for i in range(n)]


# ---------------------------------------------------------------------------
# Counting rule
# ---------------------------------------------------------------------------

def apply_counting_rule(history: Sequence[TestEvent]) -> int:
    """Counted tests for one person's date-ordered test history.

    Every negative test before the person's first positive counts, the first
    positive counts, and nothing after the first positive counts. A history
    with no positive counts all its negatives.

    Raises UnsortedHistoryError if dates are not non-decreasing, and
    ValueError if events belong to more than one person.
    """
    if not history:
        return 0
    person = history[0].person_id
    for prev, cur in zip(history, history[1:]):
        if cur.date < prev.date:
            raise UnsortedHistoryError(f"history for {person} not sorted by date")
    if any(ev.person_id != person for ev in history):
        raise ValueError("history mixes multiple person_ids")

    counted = 0
    for ev in history:
        if ev.result == TestResult.POSITIVE:
            return counted + 1
        counted += 1
    return counted


def count_events_per_day(events: Iterable[TestEvent]) -> dict[date, int]:
    """Per-day counted test totals for a panel of person histories.

    A test is counted on its day iff it is a negative with no earlier
    positive for the same person, or it is the person's first positive.
    Summing the result over all days equals the sum of apply_counting_rule
    over the per-person histories.
    """
    by_person: dict[str, list[TestEvent]] = {}
    for ev in events:
        by_person.setdefault(ev.person_id, []).append(ev)

    totals: dict[date, int] = {}
    for person, evs in by_person.items():
        evs.sort(key=lambda e: e.date)
        for ev in evs:
            totals[ev.date] = totals.get(ev.date, 0) + 1
            if ev.result == TestResult.POSITIVE:
                break
    return totals


# ---------------------------------------------------------------------------
# Cleaning + aggregation
# ---------------------------------------------------------------------------

def clean_counts(rows: list[RawCountRow]) -> list[RawCountRow]:
    """Drop self-tested / self-reported rows, keeping everything else in order."""
    return [r for r in rows if not r.self_reported]


def build_aggregate(
    tests: list[RawCountRow],
    cases: list[RawCountRow],
    clinics: list[ClinicRecord],
    interventions: list[InterventionRecord],
    demographics: list[DemographicRecord],
    period: tuple[date, date],
) -> AggregatedDataset:
    """Assemble the complete aggregated dataset for the study period.

    One RegionDay is produced for every (unit-with-clinics, date) pair per
    unit kind; rows missing from the inputs are filled with zero counts and
    flagged imputed. Rows dated outside the period (e.g. lag spill past the
    final release) are ignored. Clinics referencing units absent from the
    census registry raise ReferentialError; duplicated (unit, date, kind)
    rows raise DuplicateRowsError.
    """
    first, last = period
    if first > last:
        raise EmptyRangeError(f"period {first}..{last} is empty")

    census_units = {d.unit_id for d in demographics}
    bad = [c.clinic_id for c in clinics
           if c.lga_id not in census_units or c.postcode not in census_units]
    if bad:
        raise ReferentialError(bad)

    counts: dict[tuple[UnitKind, str, date], dict[CountKind, int]] = {}
    seen: set[tuple[UnitKind, str, date, CountKind]] = set()
    for row in list(tests) + list(cases):
        if row.self_reported:
            raise ClinicapError("build_aggregate expects cleaned rows; run clean_counts first")
        if row.date < first or row.date > last:
            continue
        dup_key = (row.unit_kind, row.unit_id, row.date, row.kind)
        if dup_key in seen:
            raise DuplicateRowsError(f"duplicate {row.kind.value} row for {row.unit_id} on {row.date}")
        seen.add(dup_key)
        slot = counts.setdefault((row.unit_kind, row.unit_id, row.date), {})
        slot[row.kind] = row.count

    region_days: list[RegionDay] = []
    n_days = (last - first).days + 1
    for kind in (UnitKind.LGA, UnitKind.POSTCODE):
        if kind == UnitKind.LGA:
            units = sorted({c.lga_id for c in clinics})
        else:
            units = sorted({c.postcode for c in clinics})
        for unit_id in units:
            for i in range(n_days):
                d = first + timedelta(days=i)
                slot = counts.get((kind, unit_id, d), {})
                imputed = CountKind.TESTS not in slot or CountKind.CASES not in slot
                region_days.append(RegionDay(
                    unit_kind=kind,
                    unit_id=unit_id,
                    date=d,
                    tests=slot.get(CountKind.TESTS, 0),
                    cases=slot.get(CountKind.CASES, 0),
                    imputed=imputed,
                ))

    return AggregatedDataset(
        region_days=region_days,
        clinics=list(clinics),
        interventions=list(interventions),
        demographics=list(demographics),
        period=period,
    )


# ---------------------------------------------------------------------------
# CSV loaders (UTF-8, header row required, dates ISO-8601, booleans 0/1)
# ---------------------------------------------------------------------------

def _parse_bool(s: str) -> bool:
    if s not in ("0", "1"):
        raise ValueError(f"boolean field must be 0 or 1, got {s!r}")
    return s == "1"


def load_counts_csv(path: str | Path, kind: CountKind) -> list[RawCountRow]:
    """Read tests.csv / cases.csv: date,unit_kind,unit_id,count,self_reported."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            rows.append(RawCountRow(
                date=date.fromisoformat(rec["date"]),
                unit_kind=UnitKind(rec["unit_kind"]),
                unit_id=rec["unit_id"],
                count=int(rec["count"]),
                kind=kind,
                self_reported=_parse_bool(rec["self_reported"]),
            ))
    return rows


def load_clinics_csv(path: str | Path) -> list[ClinicRecord]:
    """Read clinics.csv with the six factor columns and the 336-char schedule."""
    clinics = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            factors = tuple(_parse_bool(rec[c]) for c in
                            ("referral", "age_limit", "booking", "walkin",
                             "drivethrough", "wheelchair"))
            clinics.append(ClinicRecord(
                clinic_id=rec["clinic_id"],
                name=rec["name"],
                lga_id=rec["lga_id"],
                postcode=rec["postcode"],
                latitude=float(rec["lat"]),
                longitude=float(rec["lon"]),
                factors=factors,
                schedule=rec["schedule"],
            ))
    return clinics


def load_interventions_csv(path: str | Path) -> list[InterventionRecord]:
    """Read interventions.csv: start,end,level,direction,label."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            out.append(InterventionRecord(
                start_date=date.fromisoformat(rec["start"]),
                end_date=date.fromisoformat(rec["end"]),
                level=int(rec["level"]),
                direction=Direction(rec["direction"]),
                label=rec["label"],
            ))
    return out


def load_census_csv(path: str | Path) -> list[DemographicRecord]:
    """Read census.csv: unit_id,population,area_km2 (density derived)."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            population = int(rec["population"])
            area = float(rec["area_km2"])
            out.append(DemographicRecord(
                unit_id=rec["unit_id"],
                population=population,
                area_km2=area,
                density=population / area,
            ))
    return out


def load_events_csv(path: str | Path) -> list[TestEvent]:
    """Read events.csv: person_id,date,result (optional person-level panel)."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            out.append(TestEvent(
                person_id=rec["person_id"],
                date=date.fromisoformat(rec["date"]),
                result=TestResult(rec["result"]),
            ))
    return out


def load_bundle(directory: str | Path) -> dict:
    """Load a raw CSV bundle directory into parsed, uncleaned collections."""
    directory = Path(directory)
    return {
        "tests": load_counts_csv(directory / "tests.csv", CountKind.TESTS),
        "cases": load_counts_csv(directory / "cases.csv", CountKind.CASES),
        "clinics": load_clinics_csv(directory / "clinics.csv"),
        "interventions": load_interventions_csv(directory / "interventions.csv"),
        "demographics": load_census_csv(directory / "census.csv"),
    }
