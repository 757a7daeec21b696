"""Lens-view quantities, intervention timeline segments, ranked sequences.

Everything the map UI renders comes from these derived numbers: radial bar
heights for tests/cases, the positive-rate ring, merged intervention
segments, descending-total unit rankings, and the per-clinic capacity
heatmap.
"""

import tempfile
from datetime import timedelta
from pathlib import Path

from clinicap.analytics import (
    build_lens_frame,
    rank_sequence,
    timeline_segments,
)
from clinicap.features import build_training_set
from clinicap.ingest import UnitKind, build_aggregate, clean_counts, load_bundle
from clinicap.regress import TreeParams, fit_forest
from clinicap.synth import SynthConfig, generate_synthetic

out = Path(tempfile.mkdtemp(prefix="clinicap_demo_"))
config = SynthConfig(n_lgas=5, clinics_per_lga=(1, 4), n_days=90, n_interventions=3)
generate_synthetic(config, seed=7, out_dir=out / "bundle")
raw = load_bundle(out / "bundle")
period = (config.start_date, config.start_date + timedelta(days=config.n_days - 1))
ds = build_aggregate(clean_counts(raw["tests"]), clean_counts(raw["cases"]),
                     raw["clinics"], raw["interventions"], raw["demographics"], period)
matrix = build_training_set(ds, UnitKind.LGA, *period)
model = fit_forest(matrix, TreeParams(max_depth=10, min_samples_leaf=3),
                   n_trees=10, seed=7, max_features=None)

units = ds.units_with_clinics(UnitKind.LGA)
first, last = ds.period

print("== intervention timeline segments over the full period")
for seg in timeline_segments(first, last, ds.interventions):
    dirs = ",".join(sorted(d.value for d in seg.directions)) or "-"
    print(f"  {seg.start} .. {seg.end}  level {seg.level}  [{dirs}]  ({seg.n_days}d)")

print()
print("== storage sequence: all units ranked by total tests, descending")
seq = rank_sequence(ds, UnitKind.LGA, units, first, last, sequence_number=1)
for e in seq.entries:
    print(f"  #{seq.entries.index(e) + 1} {e.unit_id}: {e.total_tests} tests, "
          f"{e.clinic_count} clinic(s), {e.relation.value}")

print()
print("== lens frame for the top-ranked unit, first 10 days")
top = seq.entries[0].unit_id
frame = build_lens_frame(ds, UnitKind.LGA, [top], first, first + timedelta(days=9),
                         model=model)
print(f"  unit {top}, polygon class {frame.polygon_class[top]}")
for day in frame.days:
    flags = " undefined" if day.rate.undefined else ""
    print(f"  {day.date}  tests={day.tests:5d} H={day.h_tests:7.3f}  "
          f"cases={day.cases:4d} H={day.h_cases:6.3f}  "
          f"rate={day.rate.rate:.4f}{flags}  level={day.level}")

print()
print("== average-capacity heatmap values (clinic -> mean daily tests)")
for cid, heat in sorted(frame.heat.items()):
    print(f"  {cid}: {heat:.2f}")
