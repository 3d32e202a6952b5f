"""Replication engine for level/power studies of the bootstrap tests.

A study draws `outer_reps` datasets from a scenario, runs the full
bootstrap test on each, and reports rejection fractions with binomial
standard errors, one CSV row per (scenario, n, variant, statistic).
Everything is a pure function of the study configuration, including the
master seed; parallel workers only change the wall clock.

`reference_tables` runs the built-in scenario registry: five Weibull
null scenarios and four decreasing non-Weibull alternatives, each with
its (eps, M, tau) triple, in both the split (r = 1/2) and no-split
variants.
"""

from __future__ import annotations

import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from ._rng import derive_seed
from .bootstrap import bootstrap_reports
from .exceptions import BootstrapError, FitError
from .gof import TestConfig
from .scenarios import AltABaseline, AltBBaseline, Scenario, WeibullBaseline, sample

_DATA_TAG = 0x4441
_TEST_TAG = 0x5445

CSV_HEADER = "scenario,n,variant,statistic,rejection_rate,stderr,N,B,master_seed"


@dataclass(frozen=True)
class StudyConfig:
    """One simulation study: scenario x sample sizes x statistics."""

    scenario: Scenario
    cfg: TestConfig
    n_list: tuple
    outer_reps: int
    master_seed: int
    stats: tuple = ("T", "LR", "S")
    label: str = ""

    def __post_init__(self):
        if self.outer_reps < 1:
            raise ValueError("outer_reps must be at least 1")
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))
        object.__setattr__(self, "stats", tuple(self.stats))


@dataclass(frozen=True)
class StudyRow:
    scenario: str
    n: int
    variant: str
    statistic: str
    rejection_rate: float
    stderr: float
    outer_reps: int
    B: int
    master_seed: int

    def csv(self) -> str:
        return (
            f"{self.scenario},{self.n},{self.variant},{self.statistic},"
            f"{self.rejection_rate:.6g},{self.stderr:.6g},"
            f"{self.outer_reps},{self.B},{self.master_seed}"
        )


def _variant(cfg: TestConfig) -> str:
    return "split" if cfg.split_ratio < 1.0 else "nosplit"


def _outer_batch(args):
    scenario, cfg, stats, master_seed, n, reps = args
    out = []
    scen_n = scenario.with_n(n)
    for r in reps:
        data = sample(scen_n, derive_seed(master_seed, _DATA_TAG, n, r))
        try:
            reports = bootstrap_reports(
                data, cfg, stats, derive_seed(master_seed, _TEST_TAG, n, r)
            )
            out.append((r, {s: reports[s].reject for s in stats}, None))
        except (FitError, BootstrapError) as exc:
            out.append((r, None, f"{type(exc).__name__}: {exc}"))
    return out


def run_study(study: StudyConfig, workers: int = 1) -> list[StudyRow]:
    """Rejection rates for every (n, statistic) pair of the study.

    Raises if more than 5% of the outer replications of any row fail.
    """
    rows = []
    variant = _variant(study.cfg)
    label = study.label or study.scenario.baseline.kind
    for n in study.n_list:
        reps = list(range(study.outer_reps))
        if workers > 1:
            chunk = max(1, math.ceil(len(reps) / (workers * 4)))
            batches = [
                (study.scenario, study.cfg, study.stats, study.master_seed,
                 n, reps[i:i + chunk])
                for i in range(0, len(reps), chunk)
            ]
            results = []
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for part in pool.map(_outer_batch, batches):
                    results.extend(part)
        else:
            results = _outer_batch(
                (study.scenario, study.cfg, study.stats, study.master_seed, n, reps)
            )
        results.sort(key=lambda item: item[0])
        failures = [msg for _, ok, msg in results if ok is None]
        if len(failures) > 0.05 * study.outer_reps:
            raise RuntimeError(
                f"{len(failures)} of {study.outer_reps} replications failed at "
                f"n={n}: " + "; ".join(failures[:3])
            )
        good = [ok for _, ok, _ in results if ok is not None]
        for stat in study.stats:
            rate = sum(ok[stat] for ok in good) / len(good)
            stderr = math.sqrt(rate * (1.0 - rate) / len(good))
            rows.append(
                StudyRow(
                    scenario=label, n=n, variant=variant, statistic=stat,
                    rejection_rate=rate, stderr=stderr,
                    outer_reps=len(good), B=study.cfg.B,
                    master_seed=study.master_seed,
                )
            )
    return rows


def rows_to_csv(rows, dest) -> None:
    text = "\n".join([CSV_HEADER] + [row.csv() for row in rows]) + "\n"
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        Path(dest).write_text(text)


# Scenario registry: (label, baseline, eps, M, tau); beta0 = 0.5 throughout.
NULL_SCENARIOS = (
    ("weibull_mu5_nu0.5", WeibullBaseline(5.0, 0.5), 0.1, 0.5, 0.7),
    ("weibull_mu1_nu0.1", WeibullBaseline(1.0, 0.1), 0.5, 4.5, 7.0),
    ("weibull_mu1_nu0.9", WeibullBaseline(1.0, 0.9), 0.5, 2.5, 3.5),
    ("weibull_mu1_nu0.5", WeibullBaseline(1.0, 0.5), 0.5, 2.5, 3.5),
    ("weibull_mu0.1_nu0.5", WeibullBaseline(0.1, 0.5), 1.0, 30.0, 35.0),
)
ALT_SCENARIOS = (
    ("alt_a_c1", AltABaseline(1.0), 0.1, 5.0, 6.0),
    ("alt_a_c6", AltABaseline(6.0), 1.0, 30.0, 35.0),
    ("alt_b_c1", AltBBaseline(1.0), 0.1, 1.1, 1.3),
    ("alt_b_c3", AltBBaseline(3.0), 0.1, 0.5, 0.6),
)

BETA0 = 0.5
SCALES = {
    "desk": {"n_list": (500, 1000), "outer_reps": 200, "B": 199},
    "full": {"n_list": (2000, 4000), "outer_reps": 1000, "B": 1000},
}


def registry_scenario(label: str, n: int = 100) -> Scenario:
    """Look up a registry scenario by label."""
    for lab, baseline, eps, m, tau in NULL_SCENARIOS + ALT_SCENARIOS:
        if lab == label:
            return Scenario(
                baseline=baseline, beta=(BETA0,), censor_tau=tau,
                window=(eps, m), n=n,
            )
    raise KeyError(label)


def reference_tables(
    scale: str,
    out_dir,
    workers: int = 1,
    master_seed: int = 7,
    n_list=None,
    outer_reps=None,
    B=None,
) -> list[Path]:
    """Run the full scenario grid and write one CSV per table.

    `scale` picks the default sizes ('desk' or 'full'); the keyword
    overrides exist for smoke runs and scaled-down reproductions.
    Returns the written file paths.
    """
    if scale not in SCALES:
        raise ValueError("scale must be 'desk' or 'full'")
    sizes = dict(SCALES[scale])
    if n_list is not None:
        sizes["n_list"] = tuple(n_list)
    if outer_reps is not None:
        sizes["outer_reps"] = int(outer_reps)
    if B is not None:
        sizes["B"] = int(B)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    tables = (
        ("level_split", NULL_SCENARIOS, 0.5),
        ("level_nosplit", NULL_SCENARIOS, 1.0),
        ("power_split", ALT_SCENARIOS, 0.5),
        ("power_nosplit", ALT_SCENARIOS, 1.0),
    )
    for name, registry, ratio in tables:
        rows = []
        for label, baseline, eps, m, tau in registry:
            scenario = Scenario(
                baseline=baseline, beta=(BETA0,), censor_tau=tau,
                window=(eps, m), n=sizes["n_list"][0],
            )
            cfg = TestConfig(window=(eps, m), split_ratio=ratio, B=sizes["B"])
            study = StudyConfig(
                scenario=scenario, cfg=cfg, n_list=sizes["n_list"],
                outer_reps=sizes["outer_reps"],
                master_seed=derive_seed(master_seed, zlib.crc32(label.encode())),
                label=label,
            )
            rows.extend(run_study(study, workers=workers))
        path = out_dir / f"{name}.csv"
        rows_to_csv(rows, path)
        written.append(path)
    return written
