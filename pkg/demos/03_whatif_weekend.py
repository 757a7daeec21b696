"""What-if loop: extend a weekday-only clinic to Saturday and read the effects.

The edit changes the clinic's own schedule features and the unit-level merged
hours, so calibrated predictions move for every clinic in the unit, not just
the edited one. Effects are exact two-decimal deltas (initial + effect =
updated, always).
"""

import tempfile
from datetime import timedelta
from pathlib import Path

from clinicap.features import build_training_set
from clinicap.forecast import ClinicEdit, WhatIfScenario, run_whatif
from clinicap.ingest import UnitKind, build_aggregate, clean_counts, load_bundle, schedule_from_grid
from clinicap.regress import TreeParams, fit_forest
from clinicap.synth import coupling_config, generate_synthetic

out = Path(tempfile.mkdtemp(prefix="clinicap_demo_"))
config = coupling_config()
generate_synthetic(config, seed=7, out_dir=out / "bundle")
raw = load_bundle(out / "bundle")
period = (config.start_date, config.start_date + timedelta(days=config.n_days - 1))
ds = build_aggregate(clean_counts(raw["tests"]), clean_counts(raw["cases"]),
                     raw["clinics"], raw["interventions"], raw["demographics"], period)

matrix = build_training_set(ds, UnitKind.LGA, *period)
model = fit_forest(matrix, TreeParams(max_depth=12, min_samples_leaf=3),
                   n_trees=20, seed=7, max_features=None)

# pick a multi-clinic unit and a clinic that is closed on Saturday
unit = max(ds.units_with_clinics(UnitKind.LGA),
           key=lambda u: len(ds.clinics_in_unit(UnitKind.LGA, u)))
clinics = ds.clinics_in_unit(UnitKind.LGA, unit)
target = next((c for c in clinics if c.schedule_grid()[5].sum() == 0), clinics[0])
print(f"unit {unit} has {len(clinics)} clinics; editing {target.clinic_id}")

grid = target.schedule_grid().copy()
grid[5, 18:34] = True    # Saturday 09:00-17:00
grid[6, 18:34] = True    # Sunday 09:00-17:00

d1 = period[0] + timedelta(days=30)
d1 -= timedelta(days=d1.isoweekday() - 1)
scenario = WhatIfScenario(
    unit_id=unit, from_date=d1, to_date=d1 + timedelta(days=13),
    edits=[ClinicEdit(target.clinic_id, schedule=schedule_from_grid(grid))])

result = run_whatif(model, ds, scenario)
print(f"window {scenario.from_date} .. {scenario.to_date}")
print(f"total effect over the window: {result.total_effect():+.2f} tests")
print()
print("per-clinic effect totals:")
for c in clinics:
    total = sum(e.effect for e in result.effects_for_clinic(c.clinic_id))
    marker = " (edited)" if c.clinic_id == target.clinic_id else ""
    print(f"  {c.clinic_id}: {total:+.2f}{marker}")
print()
print("first week, edited clinic, day by day:")
for e in result.effects_for_clinic(target.clinic_id)[:7]:
    print(f"  {e.date} ({e.date.strftime('%a')}): "
          f"{e.initial:8.2f} -> {e.updated:8.2f}  effect {e.effect:+7.2f}")
