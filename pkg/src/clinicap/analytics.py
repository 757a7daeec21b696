"""Derived quantities behind the lens, timeline, ranking and heatmap views.

Pure functions over the immutable dataset (plus a fitted model for the
heatmap). Rendering, colors and layout live in the frontend; this module
only produces numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date, timedelta

from .dataset import RelationKind, query_series, relation_kind
from .errors import ClinicapError, ConfigError, EmptyRangeError
from .features import intervention_level
from .forecast import average_capacity, predict_breakdown
from .ingest import AggregatedDataset, Direction, InterventionRecord, UnitKind
from .regress import RegressionModel

DEFAULT_HEIGHT_A = 2.0
DEFAULT_HEIGHT_B = 100.0


@dataclass(frozen=True)
class RateValue:
    rate: float
    undefined: bool = False      # zero-test day, rate reported as 0
    anomalous: bool = False      # cases exceeded tests


def positive_rate(tests: int, cases: int) -> RateValue:
    """Daily positive case rate cases/tests; zero-test days flag undefined."""
    if tests < 0 or cases < 0:
        raise ClinicapError("counts must be non-negative")
    if tests == 0:
        return RateValue(rate=0.0, undefined=True, anomalous=cases > 0)
    rate = cases / tests
    return RateValue(rate=rate, anomalous=rate > 1.0)


def radial_height(v: float, a: float = DEFAULT_HEIGHT_A,
                  b: float = DEFAULT_HEIGHT_B) -> float:
    """Space-balancing radial bar height a*ln(v) + v/b, floored at zero."""
    if a <= 0 or b <= 0:
        raise ConfigError("height parameters a and b must be positive")
    if v < 0:
        raise ClinicapError("count must be non-negative")
    if v == 0:
        return 0.0
    return max(0.0, a * math.log(v) + v / b)


@dataclass(frozen=True)
class TimelineSegment:
    start: date
    end: date                    # inclusive
    level: int
    directions: frozenset[Direction]

    @property
    def n_days(self) -> int:
        return (self.end - self.start).days + 1


def timeline_segments(from_date: date, to_date: date,
                      interventions: list[InterventionRecord]) -> list[TimelineSegment]:
    """Consecutive days with identical (level, direction set) merged; the
    segments cover [from_date, to_date] exactly."""
    if from_date > to_date:
        raise EmptyRangeError(f"{from_date}..{to_date} is empty")
    segments: list[TimelineSegment] = []
    cur_start = from_date
    cur_state = intervention_level(from_date, interventions)
    d = from_date + timedelta(days=1)
    while d <= to_date + timedelta(days=1):
        state = intervention_level(d, interventions) if d <= to_date else None
        if state != cur_state:
            segments.append(TimelineSegment(cur_start, d - timedelta(days=1),
                                            cur_state[0], cur_state[1]))
            cur_start = d
            cur_state = state
        d += timedelta(days=1)
    return segments


@dataclass
class LensDay:
    date: date
    tests: int
    cases: int
    h_tests: float
    h_cases: float
    rate: RateValue
    level: int
    directions: frozenset[Direction]


@dataclass
class LensFrame:
    """Everything one lens render needs for a unit selection and range."""

    unit_kind: UnitKind
    unit_ids: list[str]
    from_date: date
    to_date: date
    days: list[LensDay]
    polygon_class: dict[str, str]          # unit -> one_to_one | multiple_to_one
    heat: dict[str, float]                 # clinic -> average capacity
    params: dict = field(default_factory=dict)

    def to_payload(self) -> dict:
        return {
            "unit_kind": self.unit_kind.value,
            "unit_ids": self.unit_ids,
            "from": self.from_date.isoformat(),
            "to": self.to_date.isoformat(),
            "params": self.params,
            "days": [
                {
                    "date": day.date.isoformat(),
                    "tests": day.tests,
                    "cases": day.cases,
                    "h_tests": round(day.h_tests, 4),
                    "h_cases": round(day.h_cases, 4),
                    "rate": round(day.rate.rate, 4),
                    "rate_undefined": day.rate.undefined,
                    "rate_anomalous": day.rate.anomalous,
                    "level": day.level,
                    "directions": sorted(d.value for d in day.directions),
                }
                for day in self.days
            ],
            "polygon_class": self.polygon_class,
            "heat": {k: round(v, 2) for k, v in self.heat.items()},
        }


def build_lens_frame(ds: AggregatedDataset, unit_kind: UnitKind, unit_ids: list[str],
                     from_date: date, to_date: date, a: float = DEFAULT_HEIGHT_A,
                     b: float = DEFAULT_HEIGHT_B,
                     model: RegressionModel | None = None) -> LensFrame:
    """Aggregate the selected units per day and derive all lens quantities."""
    if not unit_ids:
        raise ClinicapError("lens frame needs at least one unit")
    series = [query_series(ds, unit_kind, u, from_date, to_date) for u in unit_ids]
    days = []
    for i in range((to_date - from_date).days + 1):
        d = from_date + timedelta(days=i)
        tests = sum(s[i].tests for s in series)
        cases = sum(s[i].cases for s in series)
        level, directions = intervention_level(d, ds.interventions)
        days.append(LensDay(
            date=d, tests=tests, cases=cases,
            h_tests=radial_height(tests, a, b),
            h_cases=radial_height(cases, a, b),
            rate=positive_rate(tests, cases),
            level=level, directions=directions,
        ))
    polygon_class = {}
    for u in unit_ids:
        kind, _ = relation_kind(ds, u, unit_kind)
        polygon_class[u] = kind.value
    heat = heatmap_values(ds, unit_kind, unit_ids, from_date, to_date, model) \
        if model is not None else {}
    return LensFrame(unit_kind=unit_kind, unit_ids=list(unit_ids),
                     from_date=from_date, to_date=to_date, days=days,
                     polygon_class=polygon_class, heat=heat,
                     params={"a": a, "b": b})


@dataclass(frozen=True)
class SequenceEntry:
    unit_id: str
    total_tests: int
    clinic_count: int
    relation: RelationKind


@dataclass
class StorageSequence:
    sequence_number: int
    from_date: date
    to_date: date
    unit_kind: UnitKind
    entries: list[SequenceEntry]       # descending total tests, ties by unit id

    def to_payload(self) -> dict:
        return {
            "sequence_number": self.sequence_number,
            "from": self.from_date.isoformat(),
            "to": self.to_date.isoformat(),
            "unit_kind": self.unit_kind.value,
            "entries": [
                {"unit_id": e.unit_id, "total_tests": e.total_tests,
                 "clinic_count": e.clinic_count, "relation": e.relation.value}
                for e in self.entries
            ],
        }


def rank_sequence(ds: AggregatedDataset, unit_kind: UnitKind, unit_ids: list[str],
                  from_date: date, to_date: date,
                  sequence_number: int = 0) -> StorageSequence:
    """Selected units ranked by total tests over the range, descending."""
    if not unit_ids:
        raise ClinicapError("cannot rank an empty unit selection")
    entries = []
    for u in unit_ids:
        rows = query_series(ds, unit_kind, u, from_date, to_date)
        kind, n = relation_kind(ds, u, unit_kind)
        entries.append(SequenceEntry(unit_id=u, total_tests=sum(r.tests for r in rows),
                                     clinic_count=n, relation=kind))
    entries.sort(key=lambda e: (-e.total_tests, e.unit_id))
    return StorageSequence(sequence_number=sequence_number, from_date=from_date,
                           to_date=to_date, unit_kind=unit_kind, entries=entries)


def heatmap_values(ds: AggregatedDataset, unit_kind: UnitKind, unit_ids: list[str],
                   from_date: date, to_date: date,
                   model: RegressionModel) -> dict[str, float]:
    """Average calibrated capacity per clinic across the selected units."""
    heat: dict[str, float] = {}
    for u in unit_ids:
        ps = predict_breakdown(model, ds, u, from_date, to_date, calibrate=True,
                               unit_kind=unit_kind)
        per_clinic: dict[str, list] = {}
        for p in ps.all_predictions():
            per_clinic.setdefault(p.clinic_id, []).append(p)
        for cid, preds in per_clinic.items():
            heat[cid] = average_capacity(preds, from_date, to_date)
    return heat
