"""Parametric-semiparametric bootstrap for the goodness-of-fit tests.

Resampling keeps every covariate fixed, draws each event time from the
fitted Weibull conditional distribution

    F(x | z) = 1 - exp(-(mu*x)**nu * exp(beta'z))

by closed-form inversion, and draws censoring times from the
Kaplan-Meier estimate of the censoring distribution (independently of
the covariates); mass the product-limit curve leaves beyond its last
jump becomes "never censored".  Each bootstrap replicate re-runs the
full statistic pipeline, including the sample split and all refits.

Critical values are order statistics of the bootstrap sample: the
ceil((1-alpha)*B)-th smallest for statistics rejecting on large values
(T, S) and the ceil(alpha*B)-th smallest for the likelihood ratio,
which rejects on small values.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._rng import derive_seed, observation_uniforms
from .data import Dataset
from .estimators import SurvivalCurve, kaplan_meier
from .exceptions import BootstrapError, FitError
from .gof import TestConfig, _compute_stats
from .weibull import WeibullTheta

_RESAMPLE_TAG = 0x5253
_OBSERVED_TAG = 0x4F42
_REPLICATE_TAG = 0x5250

_CEIL_FUZZ = 1e-9

STATISTICS = ("T", "LR", "S")
_REJECT_SMALL = frozenset({"LR"})


@dataclass
class TestReport:
    """Outcome of one bootstrap test."""

    stat: str
    statistic: float
    boot_values: np.ndarray
    critical_value: float
    reject: bool
    alpha: float
    seed: int
    B: int
    warnings: list

    def to_dict(self) -> dict:
        return {
            "stat": self.stat,
            "statistic": self.statistic,
            "boot_values": [float(v) for v in self.boot_values],
            "critical_value": self.critical_value,
            "reject": self.reject,
            "alpha": self.alpha,
            "seed": self.seed,
            "B": self.B,
            "warnings": list(self.warnings),
        }


def resample(data: Dataset, theta: WeibullTheta, censor: SurvivalCurve, seed: int) -> Dataset:
    """One bootstrap dataset: fixed covariates, Weibull event times,
    product-limit censoring times; deterministic in `seed`."""
    n = data.n
    u = observation_uniforms(derive_seed(seed, _RESAMPLE_TAG), n, 2)
    e = -np.log1p(-u[:, 0])
    lin = data.covariates @ theta.beta_array
    x = (e * np.exp(-lin)) ** (1.0 / theta.nu) / theta.mu
    atoms, probs, _ = censor.mass_points()
    if atoms.size:
        cdf = np.cumsum(probs)
        idx = np.searchsorted(cdf, u[:, 1], side="left")
        c = np.where(idx < atoms.size, atoms[np.minimum(idx, atoms.size - 1)], np.inf)
    else:
        c = np.full(n, np.inf)
    t = np.minimum(x, c)
    status = (x <= c).astype(np.int8)
    return Dataset(t, status, data.covariates, _validate=False)


def critical_value(boot_values: np.ndarray, alpha: float, stat: str) -> tuple[float, int]:
    """Order-statistic critical value; returns (value, order index k)."""
    b = len(boot_values)
    q = alpha * b if stat in _REJECT_SMALL else (1.0 - alpha) * b
    k = max(1, min(b, math.ceil(q - _CEIL_FUZZ)))
    return float(np.sort(boot_values)[k - 1]), k


def _decide(stat: str, observed: float, crit: float) -> bool:
    return observed < crit if stat in _REJECT_SMALL else observed > crit


def _one_replicate(data, cfg, stats, theta, beta_hat, censor, rep_seed):
    boot = resample(data, theta, censor, rep_seed)
    return _compute_stats(
        boot, cfg, stats, rep_seed, warm_theta=theta, warm_beta=beta_hat
    )


def _replicate_batch(args):
    data, cfg, stats, theta, beta_hat, censor, items = args
    out = []
    for j, rep_seed in items:
        try:
            values, _, notes = _one_replicate(
                data, cfg, stats, theta, beta_hat, censor, rep_seed
            )
            out.append((j, values, notes, None))
        except FitError as exc:
            out.append((j, None, None, f"{type(exc).__name__}: {exc}"))
    return out


def bootstrap_reports(
    data: Dataset,
    cfg: TestConfig,
    stats=STATISTICS,
    seed: int = 0,
    workers: int = 1,
) -> dict[str, TestReport]:
    """Run the bootstrap once and report every requested statistic.

    All statistics share the same bootstrap datasets (and, under a
    split, the same per-replicate splits), so asking for several is no
    more expensive than the dearest one.  Results are gathered by
    replicate index, making them identical for any worker count.
    """
    stats = tuple(stats)
    for s in stats:
        if s not in STATISTICS:
            raise ValueError(f"unknown statistic {s!r}")
    if cfg.B < 20:
        raise ValueError("need at least 20 bootstrap replications")
    observed, pieces, obs_notes = _compute_stats(
        data, cfg, stats, derive_seed(seed, _OBSERVED_TAG)
    )
    censor = kaplan_meier(data, "censoring")
    items = [(j, derive_seed(seed, _REPLICATE_TAG, j)) for j in range(cfg.B)]
    results: dict[int, tuple] = {}
    if workers > 1:
        chunk = max(1, math.ceil(len(items) / (workers * 4)))
        batches = [
            (data, cfg, stats, pieces.theta, pieces.beta_hat, censor,
             items[i:i + chunk])
            for i in range(0, len(items), chunk)
        ]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for batch_out in pool.map(_replicate_batch, batches):
                for j, values, notes, err in batch_out:
                    results[j] = (values, notes, err)
    else:
        for j, values, notes, err in _replicate_batch(
            (data, cfg, stats, pieces.theta, pieces.beta_hat, censor, items)
        ):
            results[j] = (values, notes, err)

    failures = [(j, items[j][1], results[j][2]) for j in range(cfg.B) if results[j][2]]
    if len(failures) > 0.05 * cfg.B:
        raise BootstrapError(
            f"{len(failures)} of {cfg.B} bootstrap replicates failed to fit; "
            "failure seeds: " + ", ".join(str(s) for _, s, _ in failures),
            failure_seeds=[s for _, s, _ in failures],
        )

    common_warnings = [
        f"replicate {j} (seed {s}) failed: {msg}" for j, s, msg in failures
    ]
    floored_reps = sum(
        1 for j in range(cfg.B)
        if results[j][1] and results[j][1].get("lr_floored")
    )
    reports = {}
    for stat in stats:
        boot = np.array(
            [results[j][0][stat] for j in range(cfg.B) if results[j][0] is not None]
        )
        crit, _ = critical_value(boot, cfg.alpha, stat)
        warn = list(common_warnings)
        if stat == "LR":
            if obs_notes.get("lr_floored"):
                warn.append(
                    f"observed statistic floored {obs_notes['lr_floored']} "
                    "hazard value(s) inside log"
                )
            if floored_reps:
                warn.append(
                    f"{floored_reps} replicate(s) floored hazard values inside log"
                )
        reports[stat] = TestReport(
            stat=stat,
            statistic=observed[stat],
            boot_values=boot,
            critical_value=crit,
            reject=_decide(stat, observed[stat], crit),
            alpha=cfg.alpha,
            seed=seed,
            B=cfg.B,
            warnings=warn,
        )
    return reports


def bootstrap_critical_value(
    data: Dataset, cfg: TestConfig, stat: str, seed: int = 0, workers: int = 1
) -> TestReport:
    """Bootstrap test for a single statistic; see `bootstrap_reports`."""
    return bootstrap_reports(data, cfg, (stat,), seed, workers)[stat]
