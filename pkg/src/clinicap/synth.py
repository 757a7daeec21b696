"""Seeded synthetic data bundles with known per-clinic ground truth.

The public release shape only ever exposes unit-level daily totals, so the
generator is the one place where per-clinic truth exists. It draws each
clinic-day's true test count from a documented generative model, smears the
released totals across a 0-7 day reporting lag, and writes the same CSV
bundle layout the real loaders consume. The hidden truth is written
separately under ``truth/`` and never enters the released files unlagged.

Generative model, per clinic c on day t::

    mu(c, t) = base_c
               * hours_factor(c, dow(t))        # open hours that weekday / 8
               * factor_bonus(c)                # product of (1 + bonus_j * x_j)
               * weekday_mult[dow(t)]
               * season_mult[season(t)]
               * intervention_mult[level(t)]
    true(c, t) = max(0, round(mu + Normal(0, noise_level * mu)))

Releases: each clinic-day count is split across lags 0..7 with a multinomial
draw over ``lag_weights`` and added to the clinic's LGA and postcode series
at t + lag, so released totals conserve true totals exactly over the
extended release window.

Cases: every released batch of tests draws Binomial(batch, p(t)) positives,
with p(t) a smooth wave capped below 1, so cases <= tests per unit-day.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, asdict
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .features import day_scalars, intervention_level
from .ingest import (
    FACTOR_NAMES,
    ClinicRecord,
    Direction,
    InterventionRecord,
    SCHEDULE_BLOCKS,
    SCHEDULE_DAYS,
    schedule_from_grid,
)

MAX_LAG = 7


@dataclass(frozen=True)
class SynthConfig:
    """Dimensions and shape of a synthetic bundle. All draws are seeded."""

    n_lgas: int = 6
    clinics_per_lga: tuple[int, int] = (1, 4)          # inclusive range
    n_days: int = 120
    start_date: date = date(2021, 6, 1)
    lag_weights: tuple[float, ...] = (0.50, 0.22, 0.12, 0.07, 0.04, 0.03, 0.01, 0.01)
    noise_level: float = 0.06
    base_rate: tuple[float, float] = (40.0, 160.0)      # per-clinic scale range
    weekday_mult: tuple[float, ...] = (1.05, 1.10, 1.00, 1.05, 1.20, 0.55, 0.40)
    season_mult: tuple[float, ...] = (1.00, 1.25, 0.95, 1.10)   # spring..winter
    factor_bonus: tuple[float, ...] = (-0.10, -0.05, -0.15, 0.25, 0.20, 0.05)
    intervention_mult: tuple[float, ...] = (1.00, 0.90, 0.75, 0.55)  # level 0..3
    weekend_damp_by_level: tuple[float, ...] = (1.0, 1.0, 1.0, 1.0)  # extra sat/sun cut
    n_interventions: int = 2
    weekend_open_prob: float = 0.45
    case_wave_peak: float = 0.35
    events_people: int = 0                              # size of person panel, 0 = none

    def __post_init__(self):
        if self.n_lgas <= 0 or self.n_days <= 0:
            raise ConfigError("unit count and period length must be positive")
        lo, hi = self.clinics_per_lga
        if lo <= 0 or hi < lo:
            raise ConfigError("clinics_per_lga must be a positive inclusive range")
        if len(self.lag_weights) != MAX_LAG + 1:
            raise ConfigError(f"lag_weights must cover lags 0..{MAX_LAG}")
        if abs(sum(self.lag_weights) - 1.0) > 1e-9 or min(self.lag_weights) < 0:
            raise ConfigError("lag_weights must be a probability vector")
        if self.noise_level < 0:
            raise ConfigError("noise_level must be non-negative")
        if len(self.weekday_mult) != 7 or len(self.season_mult) != 4:
            raise ConfigError("need 7 weekday and 4 season multipliers")
        if len(self.factor_bonus) != len(FACTOR_NAMES):
            raise ConfigError(f"need {len(FACTOR_NAMES)} factor bonuses")
        if len(self.intervention_mult) != 4 or len(self.weekend_damp_by_level) != 4:
            raise ConfigError("need multipliers for intervention levels 0-3")


def no_lag(config: SynthConfig) -> SynthConfig:
    """Same config with the whole release landing on day 0 (no reporting lag)."""
    return SynthConfig(**{**asdict(config),
                          "lag_weights": (1.0,) + (0.0,) * MAX_LAG,
                          "start_date": config.start_date})


def benchmark_nonlinear_config() -> SynthConfig:
    """The documented ~5,000-row nonlinear benchmark (18 LGAs x 280 days).

    Strong multiplicative weekday/season/intervention structure with modest
    noise: tree ensembles should recover it, a linear model should not.
    """
    return SynthConfig(
        n_lgas=18,
        clinics_per_lga=(1, 5),
        n_days=280,
        start_date=date(2021, 1, 1),
        lag_weights=(0.70, 0.12, 0.07, 0.05, 0.03, 0.02, 0.005, 0.005),
        noise_level=0.05,
        base_rate=(30.0, 220.0),
        weekday_mult=(1.10, 1.20, 0.95, 1.05, 1.40, 0.25, 0.15),
        season_mult=(1.00, 1.45, 0.85, 1.15),
        factor_bonus=(-0.15, -0.10, -0.25, 0.45, 0.35, 0.10),
        intervention_mult=(1.00, 0.65, 0.40, 0.22),
        weekend_damp_by_level=(1.00, 0.70, 0.45, 0.25),
        n_interventions=12,
    )


def monotone_config() -> SynthConfig:
    """Hours-dominated generator: more open hours always means more tests.

    Weekday and season multipliers are flat and noise is tiny, so the fitted
    model's response to added weekend hours is reliably positive.
    """
    return SynthConfig(
        n_lgas=30,
        clinics_per_lga=(1, 2),
        n_days=180,
        start_date=date(2021, 2, 1),
        lag_weights=(1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0),
        noise_level=0.08,
        base_rate=(90.0, 110.0),
        weekday_mult=(1.0,) * 7,
        season_mult=(1.0,) * 4,
        factor_bonus=(0.0, 0.0, 0.0, 0.05, 0.05, 0.02),
        intervention_mult=(1.0,) * 4,
        n_interventions=0,
        weekend_open_prob=0.5,
    )


def coupling_config() -> SynthConfig:
    """Multi-clinic units everywhere, for cross-clinic what-if coupling runs."""
    return SynthConfig(
        n_lgas=6,
        clinics_per_lga=(3, 5),
        n_days=150,
        start_date=date(2021, 5, 1),
        noise_level=0.05,
        weekend_open_prob=0.5,
    )


@dataclass
class SynthResult:
    """Output of one generator run: bundle directory plus hidden truth."""

    out_dir: Path
    config: SynthConfig
    seed: int
    clinics: list[ClinicRecord]
    interventions: list[InterventionRecord]
    truth: dict[tuple[str, date], int]                  # (clinic_id, day) -> true tests
    released_tests: dict[tuple[str, str, date], int]    # (kind, unit, day) incl. lag spill
    accounting: dict = field(default_factory=dict)

    def truth_total(self) -> int:
        return sum(self.truth.values())

    def released_total(self, unit_kind: str = "lga") -> int:
        return sum(v for (k, _, _), v in self.released_tests.items() if k == unit_kind)


def _make_schedule(rng: np.random.Generator, weekend_open_prob: float) -> np.ndarray:
    """Random weekly grid: weekdays always open, weekend open with given prob."""
    grid = np.zeros((SCHEDULE_DAYS, SCHEDULE_BLOCKS), dtype=bool)
    start = int(rng.integers(14, 21))          # 07:00..10:00
    length = int(rng.integers(16, 25))         # 8..12 hours
    for d in range(5):
        grid[d, start:min(start + length, SCHEDULE_BLOCKS)] = True
    if rng.random() < 0.3:                     # lunch break on weekdays
        brk = start + int(rng.integers(8, 12))
        grid[:5, brk:brk + 2] = False
    for d in (5, 6):
        if rng.random() < weekend_open_prob:
            wstart = int(rng.integers(16, 22))
            wlen = int(rng.integers(8, 17))
            grid[d, wstart:min(wstart + wlen, SCHEDULE_BLOCKS)] = True
    return grid


def _make_clinics(rng: np.random.Generator, config: SynthConfig):
    clinics = []
    lo, hi = config.clinics_per_lga
    for i in range(config.n_lgas):
        lga = f"L{i:02d}"
        postcode = f"{2000 + i}"
        k = int(rng.integers(lo, hi + 1))
        for j in range(k):
            factors = [bool(rng.random() < p) for p in (0.25, 0.2, 0.3, 0.7, 0.35, 0.8)]
            # mirror the observed pattern: clinics support walk-in or
            # drive-through, rarely neither
            if not factors[3] and not factors[4]:
                factors[3 if rng.random() < 0.7 else 4] = True
            clinics.append(ClinicRecord(
                clinic_id=f"{lga}-c{j}",
                name=f"Clinic {lga}-{j}",
                lga_id=lga,
                postcode=postcode,
                latitude=float(-34.0 + i * 0.1 + rng.normal(0, 0.02)),
                longitude=float(150.5 + j * 0.05 + rng.normal(0, 0.02)),
                factors=tuple(factors),
                schedule=schedule_from_grid(_make_schedule(rng, config.weekend_open_prob)),
            ))
    return clinics


def _make_interventions(rng: np.random.Generator, config: SynthConfig):
    events = []
    if config.n_interventions <= 0:
        return events
    span = config.n_days // (config.n_interventions + 1)
    for i in range(config.n_interventions):
        start = config.start_date + timedelta(days=int((i + 0.3) * span + rng.integers(0, max(span // 3, 1))))
        length = int(rng.integers(max(span // 3, 5), max(span, 6)))
        level = 1 + i % 3      # cycle 1..3 so every severity occurs
        direction = Direction.RESTRICTION if i % 2 == 0 else Direction.EASED
        events.append(InterventionRecord(
            start_date=start,
            end_date=min(start + timedelta(days=length), config.start_date + timedelta(days=config.n_days - 1)),
            level=level,
            direction=direction,
            label=f"{direction.value}-{level}-{i}",
        ))
    return events


def clinic_day_mean(clinic: ClinicRecord, base: float, d: date,
                    config: SynthConfig, interventions) -> float:
    """The documented mean for one clinic-day (no noise)."""
    dow, season = day_scalars(d)
    hours_open = clinic.schedule_grid()[dow - 1].sum() * 0.5
    hours_factor = hours_open / 8.0
    bonus = 1.0
    for x, b in zip(clinic.factors, config.factor_bonus):
        if x:
            bonus *= 1.0 + b
    level, _ = intervention_level(d, interventions)
    mu = (base * hours_factor * bonus
          * config.weekday_mult[dow - 1]
          * config.season_mult[season - 1]
          * config.intervention_mult[level])
    if dow >= 6:   # weekend testing collapses further under restrictions
        mu *= config.weekend_damp_by_level[level]
    return mu


def _case_probability(day_index: int, n_days: int, peak: float) -> float:
    # one smooth wave across the period, never reaching the peak exactly
    phase = np.sin(np.pi * day_index / max(n_days - 1, 1))
    return 0.02 + (peak - 0.02) * float(phase) ** 2


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def generate_synthetic(config: SynthConfig, seed: int, out_dir: str | Path) -> SynthResult:
    """Write a raw CSV bundle plus hidden truth; byte-identical per seed.

    The bundle layout matches the loaders in ``ingest``: tests.csv,
    cases.csv, clinics.csv, interventions.csv, census.csv + manifest.json,
    with hidden per-clinic truth under truth/. Released tests.csv rows cover
    the extended window [start, end + MAX_LAG] so lag spill stays visible.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "truth").mkdir(exist_ok=True)

    streams = np.random.SeedSequence(seed).spawn(5)
    rng_struct, rng_noise, rng_lag, rng_cases, rng_events = map(np.random.default_rng, streams)

    clinics = _make_clinics(rng_struct, config)
    interventions = _make_interventions(rng_struct, config)
    bases = {c.clinic_id: float(rng_struct.uniform(*config.base_rate)) for c in clinics}

    days = [config.start_date + timedelta(days=i) for i in range(config.n_days)]
    release_days = days + [days[-1] + timedelta(days=i + 1) for i in range(MAX_LAG)]

    truth: dict[tuple[str, date], int] = {}
    released: dict[tuple[str, str, date], int] = {}
    case_counts: dict[tuple[str, str, date], int] = {}
    lag_w = np.asarray(config.lag_weights)

    for c in clinics:
        for i, d in enumerate(days):
            mu = clinic_day_mean(c, bases[c.clinic_id], d, config, interventions)
            noisy = mu + rng_noise.normal(0.0, config.noise_level * mu) if mu > 0 else 0.0
            t = max(0, int(round(noisy)))
            truth[(c.clinic_id, d)] = t
            if t == 0:
                continue
            parts = rng_lag.multinomial(t, lag_w)
            p_cases = _case_probability(i, config.n_days, config.case_wave_peak)
            for lag, part in enumerate(parts):
                if part == 0:
                    continue
                rd = d + timedelta(days=lag)
                pos = int(rng_cases.binomial(part, p_cases))
                for kind, unit in (("lga", c.lga_id), ("postcode", c.postcode)):
                    released[(kind, unit, rd)] = released.get((kind, unit, rd), 0) + int(part)
                    case_counts[(kind, unit, rd)] = case_counts.get((kind, unit, rd), 0) + pos

    # --- released CSVs (plus a sprinkle of self-reported rows to clean) ----
    lgas = sorted({c.lga_id for c in clinics})
    postcodes = sorted({c.postcode for c in clinics})
    test_rows, case_rows = [], []
    for kind, units in (("lga", lgas), ("postcode", postcodes)):
        for unit in units:
            for d in release_days:
                test_rows.append([d.isoformat(), kind, unit,
                                  released.get((kind, unit, d), 0), 0])
                case_rows.append([d.isoformat(), kind, unit,
                                  case_counts.get((kind, unit, d), 0), 0])
                if rng_struct.random() < 0.02:
                    test_rows.append([d.isoformat(), kind, unit,
                                      int(rng_struct.integers(1, 30)), 1])
    header = ["date", "unit_kind", "unit_id", "count", "self_reported"]
    _write_csv(out_dir / "tests.csv", header, test_rows)
    _write_csv(out_dir / "cases.csv", header, case_rows)

    _write_csv(out_dir / "clinics.csv",
               ["clinic_id", "name", "lga_id", "postcode", "lat", "lon",
                "referral", "age_limit", "booking", "walkin", "drivethrough",
                "wheelchair", "schedule"],
               [[c.clinic_id, c.name, c.lga_id, c.postcode,
                 f"{c.latitude:.6f}", f"{c.longitude:.6f}",
                 *(int(x) for x in c.factors), c.schedule] for c in clinics])

    _write_csv(out_dir / "interventions.csv",
               ["start", "end", "level", "direction", "label"],
               [[ev.start_date.isoformat(), ev.end_date.isoformat(), ev.level,
                 ev.direction.value, ev.label] for ev in interventions])

    census_rows = []
    for i, lga in enumerate(lgas):
        pop = int(rng_struct.integers(20_000, 400_000))
        area = float(np.round(rng_struct.uniform(30.0, 900.0), 2))
        census_rows.append([lga, pop, f"{area:.2f}"])
        n_in_pc = sum(1 for c in clinics if c.lga_id == lga)
        census_rows.append([f"{2000 + i}", max(1000, pop // max(n_in_pc, 1)), f"{area:.2f}"])
    _write_csv(out_dir / "census.csv", ["unit_id", "population", "area_km2"], census_rows)

    _write_csv(out_dir / "truth" / "clinic_daily_truth.csv",
               ["clinic_id", "date", "true_tests"],
               [[cid, d.isoformat(), v] for (cid, d), v in sorted(truth.items())])

    if config.events_people > 0:
        _write_events(out_dir / "events.csv", rng_events, config)

    accounting = {
        "truth_total": int(sum(truth.values())),
        "released_total_lga": int(sum(v for (k, _, _), v in released.items() if k == "lga")),
        "released_total_postcode": int(sum(v for (k, _, _), v in released.items() if k == "postcode")),
        "n_clinics": len(clinics),
        "n_lgas": len(lgas),
        "n_postcodes": len(postcodes),
        "period": [days[0].isoformat(), days[-1].isoformat()],
        "release_window": [release_days[0].isoformat(), release_days[-1].isoformat()],
    }
    manifest = {
        "seed": seed,
        "config": {**asdict(config), "start_date": config.start_date.isoformat()},
        "accounting": accounting,
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")

    return SynthResult(out_dir=out_dir, config=config, seed=seed, clinics=clinics,
                       interventions=interventions, truth=truth,
                       released_tests=released, accounting=accounting)


def _write_events(path: Path, rng: np.random.Generator, config: SynthConfig) -> None:
    """Person-level demonstration panel for the counting-rule path.

    Histories mix all-negative runs, first-positives, and post-positive tests
    that the counting rule must exclude. The panel is illustrative and not
    part of the unit-total accounting.
    """
    rows = []
    for p in range(config.events_people):
        pid = f"person-{p:04d}"
        n_events = int(rng.integers(1, 7))
        offsets = np.sort(rng.integers(0, config.n_days, size=n_events))
        pos_at = int(rng.integers(0, n_events)) if rng.random() < 0.25 else -1
        for k, off in enumerate(offsets):
            result = "positive" if k == pos_at else "negative"
            rows.append([pid, (config.start_date + timedelta(days=int(off))).isoformat(), result])
    _write_csv(path, ["person_id", "date", "result"], rows)
