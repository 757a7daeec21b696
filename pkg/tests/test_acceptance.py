"""Acceptance suite: one test per engine-level criterion, at pinned tolerances.

Each test prints one [ACCEPTANCE] pass/fail line (visible with pytest -s or
on failure). Statistical criteria run on the documented seeded generators;
everything here is deterministic, so a pass is reproducible bit for bit.
"""

import itertools
import json
import math
import re
import time
from datetime import date, timedelta
from pathlib import Path

import numpy as np
import pytest

from clinicap.analytics import positive_rate
from clinicap.cli import main as cli_main
from clinicap.dataset import load_snapshot, save_snapshot
from clinicap.errors import ChecksumError
from clinicap.features import build_training_set, rescale_multi_to_one
from clinicap.forecast import (
    ClinicEdit,
    WhatIfScenario,
    cents,
    predict_breakdown,
    run_whatif,
)
from clinicap.ingest import (
    ClinicRecord,
    TestEvent,
    TestResult,
    UnitKind,
    apply_counting_rule,
    build_aggregate,
    clean_counts,
    load_bundle,
    schedule_from_grid,
)
from clinicap.regress import (
    TreeParams,
    compare_models,
    fit_forest,
    metrics_from_arrays,
)
from clinicap.synth import (
    SynthConfig,
    benchmark_nonlinear_config,
    coupling_config,
    generate_synthetic,
    monotone_config,
)

NEG, POS = TestResult.NEGATIVE, TestResult.POSITIVE


def report(name: str, ok: bool, detail: str = ""):
    print(f"[ACCEPTANCE] {name}: {'PASS' if ok else 'FAIL'} {detail}".rstrip())
    assert ok, f"{name} failed: {detail}"


def build_env(config, seed, tmp_root, model_kwargs=None):
    """synth -> ingest -> train, returning (dataset, forest model)."""
    out = tmp_root / f"bundle_{seed}"
    generate_synthetic(config, seed=seed, out_dir=out)
    raw = load_bundle(out)
    period = (config.start_date,
              config.start_date + timedelta(days=config.n_days - 1))
    ds = build_aggregate(clean_counts(raw["tests"]), clean_counts(raw["cases"]),
                         raw["clinics"], raw["interventions"],
                         raw["demographics"], period)
    kwargs = {"n_trees": 30, "seed": seed, "max_features": None,
              "params": TreeParams(max_depth=12, min_samples_leaf=3)}
    kwargs.update(model_kwargs or {})
    matrix = build_training_set(ds, UnitKind.LGA, *period)
    params = kwargs.pop("params")
    model = fit_forest(matrix, params, **kwargs)
    return ds, model


# ---------------------------------------------------------------------------
# 1. Counting-rule oracle
# ---------------------------------------------------------------------------

def test_counting_rule_oracle():
    def oracle(results):
        # brute-force prefix scan: walk every prefix, count an event iff no
        # positive appears strictly before it in the sequence
        counted = 0
        for i, r in enumerate(results):
            if POS not in results[:i]:
                counted += 1
        return counted

    start = time.perf_counter()
    checked = 0
    for k in range(1, 7):
        for combo in itertools.product([NEG, POS], repeat=k):
            history = [TestEvent("p", date(2021, 1, 1) + timedelta(days=i), r)
                       for i, r in enumerate(combo)]
            assert apply_counting_rule(history) == oracle(combo), combo
            checked += 1
    elapsed = time.perf_counter() - start
    report("counting-rule-oracle", checked == 126 and elapsed < 1.0,
           f"({checked} sequences in {elapsed:.3f}s)")


# ---------------------------------------------------------------------------
# 2. Metric oracle
# ---------------------------------------------------------------------------

def test_metric_oracle():
    rng = np.random.default_rng(123)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(1, 100))
        y = rng.uniform(0, 1000, n)
        y_hat = y + rng.normal(0, 100, n)
        m = metrics_from_arrays(y, y_hat)
        rmse = math.sqrt(sum((a - b) ** 2 for a, b in zip(y, y_hat)) / n)
        mape = 100.0 * sum(abs(a - b) / max(a, 1.0) for a, b in zip(y, y_hat)) / n
        mean = sum(y) / n
        ss_tot = sum((a - mean) ** 2 for a in y)
        r2 = 1.0 - sum((a - b) ** 2 for a, b in zip(y, y_hat)) / ss_tot if ss_tot \
            else (1.0 if all(a == b for a, b in zip(y, y_hat)) else 0.0)
        worst = max(worst, abs(m.rmse - rmse), abs(m.mape - mape), abs(m.r2 - r2))
    report("metric-oracle", worst < 1e-9, f"(worst abs deviation {worst:.2e})")


# ---------------------------------------------------------------------------
# 3. Rescaling conservation
# ---------------------------------------------------------------------------

def test_rescaling_conservation():
    rng = np.random.default_rng(321)
    blank = "0" * 336
    failures = 0
    for g in range(500):
        n = int(rng.integers(2, 10))
        clinics = []
        for j in range(n):
            grid = (rng.random((7, 48)) < 0.25)
            clinics.append(ClinicRecord(
                f"g{g}c{j}", f"g{g}c{j}", "L00", "2000", 0.0, 0.0,
                tuple(bool(x) for x in rng.integers(0, 2, 6)),
                schedule_from_grid(grid) if j % 3 else blank))
        group = rescale_multi_to_one(clinics)
        for comp in range(6):
            if group.factor_sums[comp] != sum(int(c.factors[comp]) for c in clinics):
                failures += 1
        if group.n_clinics != n:
            failures += 1
    report("rescaling-conservation", failures == 0, "(500 random groups, exact)")


# ---------------------------------------------------------------------------
# 4. Qualitative model-comparison reproduction
# ---------------------------------------------------------------------------

def test_qualitative_model_comparison(tmp_path):
    start = time.perf_counter()
    cfg = benchmark_nonlinear_config()
    out = tmp_path / "bench"
    generate_synthetic(cfg, seed=7, out_dir=out)
    raw = load_bundle(out)
    period = (cfg.start_date, cfg.start_date + timedelta(days=cfg.n_days - 1))
    ds = build_aggregate(clean_counts(raw["tests"]), clean_counts(raw["cases"]),
                         raw["clinics"], raw["interventions"], raw["demographics"],
                         period)
    matrix = build_training_set(ds, UnitKind.LGA, *period)
    assert 4500 <= len(matrix) <= 5500
    table = compare_models(matrix, seed=7)
    elapsed = time.perf_counter() - start

    forest = table.metrics_for("RandomForest")
    gbt = table.metrics_for("GBT")
    linear = table.metrics_for("Linear")
    two_lowest = {table.rows[0][0], table.rows[1][0]}
    ok = (forest.r2 >= 0.9 and gbt.r2 >= 0.9
          and linear.r2 <= min(forest.r2, gbt.r2) - 0.15
          and two_lowest == {"RandomForest", "GBT"}
          and elapsed < 60.0)
    report("qualitative-model-comparison", ok,
           f"(forest R2={forest.r2:.3f}, gbt R2={gbt.r2:.3f}, "
           f"linear R2={linear.r2:.3f}, lowest-RMSE pair={sorted(two_lowest)}, "
           f"{elapsed:.1f}s)")


# ---------------------------------------------------------------------------
# 5. Disaggregation calibration (90 days, 5 clinics)
# ---------------------------------------------------------------------------

def test_disaggregation_calibration(tmp_path):
    cfg = SynthConfig(n_lgas=3, clinics_per_lga=(5, 5), n_days=110,
                      start_date=date(2021, 3, 1))
    ds, model = build_env(cfg, seed=7, tmp_root=tmp_path,
                          model_kwargs={"n_trees": 15})
    unit = ds.units_with_clinics(UnitKind.LGA)[0]
    n = len(ds.clinics_in_unit(UnitKind.LGA, unit))
    assert n == 5
    d1 = ds.period[0] + timedelta(days=10)
    d2 = d1 + timedelta(days=89)
    ps = predict_breakdown(model, ds, unit, d1, d2, calibrate=True)
    assert len(ps.days) == 90
    worst = 0.0
    two_dp = True
    for day in ps.days:
        worst = max(worst, abs(day.clinic_sum_cents() / 100.0 - day.unit_total))
        for p in day.clinics:
            if p.y_clinic < 0 or abs(p.y_clinic * 100 - round(p.y_clinic * 100)) > 1e-9:
                two_dp = False
    ok = worst <= 0.005 * n and two_dp
    report("disaggregation-calibration", ok,
           f"(90 days x {n} clinics, worst |sum-pred|={worst:.4f} <= {0.005 * n})")


# ---------------------------------------------------------------------------
# 6. What-if identity and exact effect algebra
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def coupling_env(tmp_path_factory):
    return build_env(coupling_config(), seed=7,
                     tmp_root=tmp_path_factory.mktemp("coupling"),
                     model_kwargs={"n_trees": 20})


def random_scenario(ds, rng, with_edits=True):
    units = ds.units_with_clinics(UnitKind.LGA)
    unit = units[int(rng.integers(0, len(units)))]
    clinics = ds.clinics_in_unit(UnitKind.LGA, unit)
    first, last = ds.period
    span = (last - first).days
    offset = int(rng.integers(7, span - 21))
    d1 = first + timedelta(days=offset)
    d2 = d1 + timedelta(days=int(rng.integers(6, 14)))
    edits = []
    if with_edits:
        for c in clinics:
            if rng.random() < 0.5:
                continue
            if rng.random() < 0.5:
                edits.append(ClinicEdit(c.clinic_id,
                                        factors=tuple(bool(x) for x in rng.integers(0, 2, 6))))
            else:
                grid = c.schedule_grid().copy()
                day = int(rng.integers(0, 7))
                a = int(rng.integers(10, 30))
                grid[day, a:a + int(rng.integers(4, 16))] ^= True
                edits.append(ClinicEdit(c.clinic_id, schedule=schedule_from_grid(grid)))
    return WhatIfScenario(unit_id=unit, from_date=d1, to_date=d2, edits=edits)


def test_whatif_identity_and_algebra(coupling_env):
    ds, model = coupling_env
    rng = np.random.default_rng(99)
    algebra_ok = True
    identity_ok = True
    for s in range(100):
        scenario = random_scenario(ds, rng, with_edits=True)
        result = run_whatif(model, ds, scenario)
        for e in result.effects:
            if cents(e.initial) + cents(e.effect) != cents(e.updated):
                algebra_ok = False
    for s in range(10):
        scenario = random_scenario(ds, rng, with_edits=False)
        result = run_whatif(model, ds, scenario)
        if result.initial.to_payload() != result.updated.to_payload():
            identity_ok = False
        if any(e.effect != 0.0 for e in result.effects):
            identity_ok = False
    report("whatif-identity-and-algebra", algebra_ok and identity_ok,
           "(100 random edit scenarios exact; 10 empty-edit identities)")


# ---------------------------------------------------------------------------
# 7. Cross-clinic coupling
# ---------------------------------------------------------------------------

def test_cross_clinic_coupling(coupling_env):
    ds, model = coupling_env
    first, last = ds.period
    n_days = (last - first).days + 1
    hits = 0
    trials = 50
    for s in range(trials):
        rng = np.random.default_rng(2000 + s)
        units = ds.units_with_clinics(UnitKind.LGA)
        unit = units[int(rng.integers(0, len(units)))]
        clinics = ds.clinics_in_unit(UnitKind.LGA, unit)
        k = min(2, len(clinics) - 1)
        edit_idx = rng.choice(len(clinics), size=k, replace=False)
        edits = []
        for i in edit_idx:
            grid = clinics[i].schedule_grid().copy()
            grid[5, 18:34] = True
            grid[6, 18:34] = True
            edits.append(ClinicEdit(clinics[i].clinic_id,
                                    schedule=schedule_from_grid(grid)))
        offset = int(rng.integers(10, n_days - 30))
        d1 = first + timedelta(days=offset)
        scenario = WhatIfScenario(unit_id=unit, from_date=d1,
                                  to_date=d1 + timedelta(days=13), edits=edits)
        result = run_whatif(model, ds, scenario)
        edited = {e.clinic_id for e in edits}
        if any(e.effect != 0.0 for e in result.effects if e.clinic_id not in edited):
            hits += 1
    report("cross-clinic-coupling", hits >= 0.8 * trials,
           f"({hits}/{trials} scenarios moved an unedited clinic; need >= {int(0.8 * trials)})")


# ---------------------------------------------------------------------------
# 8. Monotone response to added weekend hours
# ---------------------------------------------------------------------------

def test_monotone_response(tmp_path_factory):
    cfg = monotone_config()
    ds, model = build_env(cfg, seed=7,
                          tmp_root=tmp_path_factory.mktemp("monotone"),
                          model_kwargs={"n_trees": 40, "max_features": "third"})
    first, last = ds.period
    pool = [c for c in ds.clinics
            if c.schedule_grid()[5].sum() == 0
            and len(ds.clinics_in_unit(UnitKind.LGA, c.lga_id)) == 1]
    assert pool, "generator produced no single-clinic units with closed Saturdays"
    wins = 0
    trials = 100
    for s in range(trials):
        rng = np.random.default_rng(1000 + s)
        clinic = pool[int(rng.integers(0, len(pool)))]
        offset = int(rng.integers(14, cfg.n_days - 14))
        d1 = first + timedelta(days=offset)
        d1 = d1 - timedelta(days=d1.isoweekday() - 1)   # snap to Monday
        d2 = d1 + timedelta(days=6)
        grid = clinic.schedule_grid().copy()
        grid[5, 18:30] = True   # six Saturday hours, 09:00-15:00
        scenario = WhatIfScenario(
            unit_id=clinic.lga_id, from_date=d1, to_date=d2,
            edits=[ClinicEdit(clinic.clinic_id, schedule=schedule_from_grid(grid))])
        if run_whatif(model, ds, scenario).total_effect() > 0:
            wins += 1
    report("monotone-response", wins >= 0.95 * trials,
           f"({wins}/{trials} weekly totals positive; need >= {int(0.95 * trials)})")


# ---------------------------------------------------------------------------
# 9. Positive-rate spot value
# ---------------------------------------------------------------------------

def test_positive_rate_spot_value():
    r = positive_rate(256229, 149033)
    ok = abs(r.rate - 0.5816) <= 0.00005
    report("positive-rate-spot-value", ok, f"(rate={r.rate:.6f})")


# ---------------------------------------------------------------------------
# 10. Full-pipeline determinism
# ---------------------------------------------------------------------------

def test_pipeline_determinism(tmp_path):
    artifacts = {}
    for run, jobs in (("a", 1), ("b", 3)):
        root = tmp_path / run
        root.mkdir()
        assert cli_main(["synth", "--out", str(root / "bundle"), "--seed", "7",
                         "--lgas", "4", "--days", "50"]) == 0
        assert cli_main(["ingest", "--bundle", str(root / "bundle"),
                         "--out", str(root / "snap.json")]) == 0
        assert cli_main(["train", "--snapshot", str(root / "snap.json"),
                         "--out", str(root / "model.json"), "--kind", "forest",
                         "--seed", "7", "--trees", "8", "--max-depth", "8",
                         "--jobs", str(jobs)]) == 0
        with open(root / "bundle" / "manifest.json") as fh:
            period = json.load(fh)["accounting"]["period"]
        d1 = date.fromisoformat(period[0]) + timedelta(days=10)
        assert cli_main(["predict", "--snapshot", str(root / "snap.json"),
                         "--model", str(root / "model.json"), "--unit", "L00",
                         "--from", d1.isoformat(),
                         "--to", (d1 + timedelta(days=9)).isoformat(),
                         "--out", str(root / "pred.csv")]) == 0
        artifacts[run] = ((root / "model.json").read_bytes(),
                          (root / "pred.csv").read_bytes())
    model_same = artifacts["a"][0] == artifacts["b"][0]
    pred_same = artifacts["a"][1] == artifacts["b"][1]
    report("pipeline-determinism", model_same and pred_same,
           f"(model bytes identical={model_same}, prediction CSV identical={pred_same}, "
           "jobs 1 vs 3)")


# ---------------------------------------------------------------------------
# 11. Snapshot round-trip and integrity
# ---------------------------------------------------------------------------

def test_snapshot_round_trip_and_integrity(tmp_path):
    cfg = SynthConfig(n_lgas=3, clinics_per_lga=(1, 3), n_days=25)
    out = tmp_path / "bundle"
    generate_synthetic(cfg, seed=13, out_dir=out)
    raw = load_bundle(out)
    period = (cfg.start_date, cfg.start_date + timedelta(days=cfg.n_days - 1))
    ds = build_aggregate(clean_counts(raw["tests"]), clean_counts(raw["cases"]),
                         raw["clinics"], raw["interventions"], raw["demographics"],
                         period)
    path = tmp_path / "snap.json"
    save_snapshot(ds, path)
    loaded = load_snapshot(path)
    round_trip = loaded.dataset == ds

    blob = bytearray(path.read_bytes())
    pos = blob.index(b'"payload"') + len(b'"payload"')
    while not chr(blob[pos]).isdigit():
        pos += 1
    blob[pos] = ord(str((int(chr(blob[pos])) + 1) % 10))
    corrupt = tmp_path / "corrupt.json"
    corrupt.write_bytes(bytes(blob))
    rejected = False
    try:
        load_snapshot(corrupt)
    except ChecksumError:
        rejected = True
    report("snapshot-round-trip-and-integrity", round_trip and rejected,
           f"(round_trip={round_trip}, single-byte corruption rejected={rejected})")
