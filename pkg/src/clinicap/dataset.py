"""Snapshot persistence and read-only queries over the aggregated dataset.

A snapshot is a single self-describing JSON file with an embedded sha256
checksum over its canonical payload, so corruption is detected on load and
desk-scale runs need no database server. Snapshots are immutable after load;
all queries are pure.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from datetime import date, datetime, timedelta, timezone
from enum import Enum
from pathlib import Path

from .errors import (
    ChecksumError,
    EmptyRangeError,
    NoClinicsError,
    SchemaVersionError,
    UnknownUnitError,
)
from .ingest import (
    AggregatedDataset,
    ClinicRecord,
    DemographicRecord,
    Direction,
    InterventionRecord,
    RegionDay,
    UnitKind,
)

SNAPSHOT_VERSION = 1


class RelationKind(str, Enum):
    ONE_TO_ONE = "one_to_one"
    MULTIPLE_TO_ONE = "multiple_to_one"


@dataclass(frozen=True)
class Snapshot:
    dataset: AggregatedDataset
    checksum: str
    created_at: str
    schema_version: int


def _canonical_payload(ds: AggregatedDataset) -> dict:
    return {
        "period": [ds.period[0].isoformat(), ds.period[1].isoformat()],
        "region_days": [
            [rd.unit_kind.value, rd.unit_id, rd.date.isoformat(),
             rd.tests, rd.cases, int(rd.imputed)]
            for rd in ds.region_days
        ],
        "clinics": [
            [c.clinic_id, c.name, c.lga_id, c.postcode, c.latitude, c.longitude,
             [int(x) for x in c.factors], c.schedule]
            for c in ds.clinics
        ],
        "interventions": [
            [ev.start_date.isoformat(), ev.end_date.isoformat(), ev.level,
             ev.direction.value, ev.label]
            for ev in ds.interventions
        ],
        "demographics": [
            [d.unit_id, d.population, d.area_km2, d.density]
            for d in ds.demographics
        ],
    }


def _document_checksum(doc: dict) -> str:
    """Hash every field except the checksum itself, canonically serialized."""
    body = {k: v for k, v in doc.items() if k != "checksum"}
    blob = json.dumps(body, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def save_snapshot(ds: AggregatedDataset, path: str | Path) -> Snapshot:
    """Write the dataset to ``path`` and return its snapshot description."""
    payload = _canonical_payload(ds)
    created_at = datetime.now(timezone.utc).isoformat(timespec="seconds")
    doc = {
        "schema_version": SNAPSHOT_VERSION,
        "created_at": created_at,
        "payload": payload,
    }
    checksum = _document_checksum(doc)
    doc["checksum"] = checksum
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")
    return Snapshot(dataset=ds, checksum=checksum, created_at=created_at,
                    schema_version=SNAPSHOT_VERSION)


def load_snapshot(path: str | Path) -> Snapshot:
    """Load and verify a snapshot file; checksum/version failures are fatal."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    version = doc.get("schema_version")
    if version != SNAPSHOT_VERSION:
        raise SchemaVersionError(
            f"snapshot schema_version {version}, reader supports {SNAPSHOT_VERSION}")
    checksum = _document_checksum(doc)
    if checksum != doc.get("checksum"):
        raise ChecksumError(f"snapshot checksum mismatch at {path}")
    payload = doc["payload"]

    region_days = [
        RegionDay(UnitKind(k), unit, date.fromisoformat(d), tests, cases, bool(imp))
        for k, unit, d, tests, cases, imp in payload["region_days"]
    ]
    clinics = [
        ClinicRecord(cid, name, lga, pc, lat, lon, tuple(bool(x) for x in factors), sched)
        for cid, name, lga, pc, lat, lon, factors, sched in payload["clinics"]
    ]
    interventions = [
        InterventionRecord(date.fromisoformat(s), date.fromisoformat(e), level,
                           Direction(direction), label)
        for s, e, level, direction, label in payload["interventions"]
    ]
    demographics = [
        DemographicRecord(uid, pop, area, density)
        for uid, pop, area, density in payload["demographics"]
    ]
    ds = AggregatedDataset(
        region_days=region_days,
        clinics=clinics,
        interventions=interventions,
        demographics=demographics,
        period=(date.fromisoformat(payload["period"][0]),
                date.fromisoformat(payload["period"][1])),
    )
    return Snapshot(dataset=ds, checksum=checksum,
                    created_at=doc["created_at"], schema_version=version)


def query_series(ds: AggregatedDataset, unit_kind: UnitKind, unit_id: str,
                 from_date: date, to_date: date) -> list[RegionDay]:
    """Exactly one RegionDay per date in [from_date, to_date], ascending."""
    if from_date > to_date:
        raise EmptyRangeError(f"{from_date}..{to_date} is empty")
    if unit_id not in ds.all_units(unit_kind):
        raise UnknownUnitError(f"no {unit_kind.value} unit {unit_id!r}")
    out = []
    d = from_date
    while d <= to_date:
        row = ds.lookup(unit_kind, unit_id, d)
        if row is None:
            # dates outside the stored period have no releases at all
            row = RegionDay(unit_kind, unit_id, d, 0, 0, imputed=True)
        out.append(row)
        d += timedelta(days=1)
    return out


def relation_kind(ds: AggregatedDataset, lga_id: str,
                  unit_kind: UnitKind = UnitKind.LGA) -> tuple[RelationKind, int]:
    """Clinic/unit relation for one unit: (OneToOne|MultipleToOne, clinic count)."""
    if lga_id not in ds.all_units(unit_kind) and not ds.clinics_in_unit(unit_kind, lga_id):
        raise UnknownUnitError(f"no {unit_kind.value} unit {lga_id!r}")
    n = len(ds.clinics_in_unit(unit_kind, lga_id))
    if n == 0:
        raise NoClinicsError(f"unit {lga_id!r} has no clinics; excluded from modeling")
    return (RelationKind.ONE_TO_ONE if n == 1 else RelationKind.MULTIPLE_TO_ONE, n)
