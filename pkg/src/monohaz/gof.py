"""Goodness-of-fit statistics for a Weibull baseline against a monotone
alternative.

Three statistics share one fitting pipeline:

* ``statistic_T``: scaled L_p distance between the monotone hazard
  estimate on a window [eps, M] and the fitted Weibull hazard,
  n2**(p/3) * integral over [eps, M] of |step - parametric|**p.
* ``statistic_LR``: log likelihood ratio of the Weibull fit against the
  monotone fit, small values speaking against the Weibull null.
* ``statistic_S``: Kolmogorov-Smirnov distance between the baseline
  event-time distributions implied by the Weibull fit and the Breslow
  estimator.

With ``split_ratio < 1`` the sample is split once (seed-deterministic):
the Weibull parameters come from the first part and every nonparametric
ingredient from the second; with ``split_ratio == 1`` everything uses
the full sample.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from . import coxfit
from .data import Dataset, split
from .estimators import MonotoneHazard, StepCumHazard, breslow, breslow_cdf, grenander
from .exceptions import ConvergenceError
from .weibull import (
    WeibullTheta,
    _hazard_crossing,
    fit_weibull,
    param_cum_hazard,
    param_hazard,
)

LOG_FLOOR = 1e-12

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class TestConfig:
    """Settings shared by the test statistics and the bootstrap."""

    window: tuple
    p: float = 1.0
    split_ratio: float = 1.0
    alpha: float = 0.05
    B: int = 199
    lr_full_support: bool = True

    def __post_init__(self):
        eps, m = self.window
        if not 0 < eps < m:
            raise ValueError("window must satisfy 0 < eps < M")
        object.__setattr__(self, "window", (float(eps), float(m)))
        if self.p < 1:
            raise ValueError("p must be at least 1")
        if self.p >= 2.5:
            warnings.warn("p >= 2.5 lies outside the supported L_p range", stacklevel=2)
        if not 0 < self.split_ratio <= 1:
            raise ValueError("split_ratio must lie in (0, 1]")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.B < 1:
            raise ValueError("B must be positive")

    def to_dict(self) -> dict:
        return {
            "window": list(self.window),
            "p": self.p,
            "split_ratio": self.split_ratio,
            "alpha": self.alpha,
            "B": self.B,
            "lr_full_support": self.lr_full_support,
        }


def _graded_breaks(lo: float, hi: float, toward: str | None, panels: int = 24):
    """Panel breakpoints, geometrically refined toward one endpoint."""
    if toward is None:
        return np.linspace(lo, hi, 9)
    fracs = np.concatenate(([0.0], 2.0 ** -np.arange(panels, -1, -1, dtype=float)))
    if toward == "lo":
        return lo + (hi - lo) * fracs
    return (hi - (hi - lo) * fracs)[::-1]


def _panel_integral(f, breaks: np.ndarray) -> float:
    half = 0.5 * np.diff(breaks)
    mid = 0.5 * (breaks[:-1] + breaks[1:])
    x = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    return float(((f(x) @ _GL_WEIGHTS) * half).sum())


def _lp_step_vs_hazard(knots, slopes, hazard, cum_hazard, hazard_inverse, p) -> float:
    """Integral over the knot span of |step - hazard|**p.

    `hazard` must be monotone with `hazard_inverse` solving
    hazard(t) = s, so each constant piece of the step function is split
    exactly at its single crossing.  For p = 1 the integral on each
    sign-constant part is |s*dt - d(cum_hazard)|, evaluated in closed
    form; otherwise Gauss-Legendre panels graded toward the crossing are
    used.
    """
    t0, t1, s = knots[:-1], knots[1:], slopes
    tc = np.clip(hazard_inverse(s), t0, t1)
    if p == 1.0:
        c0, cc, c1 = cum_hazard(t0), cum_hazard(tc), cum_hazard(t1)
        left = np.abs(s * (tc - t0) - (cc - c0))
        right = np.abs(s * (t1 - tc) - (c1 - cc))
        return float(left.sum() + right.sum())
    total = 0.0
    for lo, hi, cross, val in zip(t0, t1, tc, s):
        def gap(x, _v=val):
            return np.abs(_v - hazard(x)) ** p
        if cross > lo:
            total += _panel_integral(gap, _graded_breaks(lo, cross, "hi"))
        if hi > cross:
            total += _panel_integral(gap, _graded_breaks(cross, hi, "lo"))
    return total


def lp_distance(est: MonotoneHazard, theta: WeibullTheta, p: float = 1.0) -> float:
    """L_p distance between a monotone step hazard and a Weibull hazard
    over the step estimate's window."""
    if p < 1:
        raise ValueError("p must be at least 1")
    return _lp_step_vs_hazard(
        est.knots,
        est.slopes,
        lambda t: param_hazard(theta, t),
        lambda t: param_cum_hazard(theta, t),
        lambda s: _hazard_crossing(theta, s),
        p,
    )


def lp_distance_to_baseline(est: MonotoneHazard, baseline, p: float = 1.0) -> float:
    """Same as lp_distance but against a scenario baseline hazard."""
    return _lp_step_vs_hazard(
        est.knots, est.slopes,
        baseline.hazard, baseline.cum_hazard, baseline.hazard_inverse, p,
    )


@dataclass
class FittedPieces:
    """Everything the three statistics need, fitted once."""

    theta: WeibullTheta
    beta_hat: np.ndarray
    lam: StepCumHazard
    n2: int


def _fit_pieces(data, cfg, seed, warm_theta=None, warm_beta=None) -> FittedPieces:
    if cfg.split_ratio < 1.0:
        part1, part2 = split(data, cfg.split_ratio, seed)
    else:
        part1 = part2 = data
    cox = coxfit.fit(part2, init=warm_beta)
    if not cox.converged:
        raise ConvergenceError("partial likelihood fit did not converge", cox)
    if part1 is part2:
        theta = fit_weibull(part1, init=warm_theta, beta_init=cox.beta_hat)
    else:
        theta = fit_weibull(part1, init=warm_theta)
    lam = breslow(part2, cox.beta_hat)
    return FittedPieces(theta, cox.beta_hat, lam, part2.n)


def _t_value(pieces: FittedPieces, cfg: TestConfig):
    est = grenander(pieces.lam, cfg.window)
    return pieces.n2 ** (cfg.p / 3.0) * lp_distance(est, pieces.theta, cfg.p), est


def _lr_value(data: Dataset, pieces: FittedPieces, cfg: TestConfig):
    top = float(data.time.max()) if cfg.lr_full_support else cfg.window[1]
    est = grenander(pieces.lam, (0.0, top))
    t, z = data.time, data.covariates
    ev = data.status == 1
    lam_hat = np.asarray(est(t[ev]), dtype=np.float64)
    floored = int(np.count_nonzero(lam_hat < LOG_FLOOR))
    lam_hat = np.maximum(lam_hat, LOG_FLOOR)
    eta_par = z @ pieces.theta.beta_array
    eta_np = z @ pieces.beta_hat
    log_lr = (
        float(np.log(param_hazard(pieces.theta, t[ev])).sum())
        + float(eta_par[ev].sum())
        - float(np.exp(eta_par) @ param_cum_hazard(pieces.theta, t))
        - float(np.log(lam_hat).sum())
        - float(eta_np[ev].sum())
        + float(np.exp(eta_np) @ est.cum(t))
    )
    return log_lr, floored


def _s_value(data: Dataset, pieces: FittedPieces):
    curve = breslow_cdf(pieces.lam)
    top = float(data.time.max())
    grid = np.linspace(0.0, top, 2048)
    f_theta_grid = -np.expm1(-param_cum_hazard(pieces.theta, grid))
    f_n_grid = 1.0 - curve(grid)
    sup = float(np.max(np.abs(f_theta_grid - f_n_grid)))
    jt = curve.jump_times
    f_theta_j = -np.expm1(-param_cum_hazard(pieces.theta, jt))
    f_right = 1.0 - curve.surv
    f_left = 1.0 - np.concatenate(([1.0], curve.surv[:-1]))
    sup = max(sup, float(np.max(np.abs(f_theta_j - f_right))))
    sup = max(sup, float(np.max(np.abs(f_theta_j - f_left))))
    return sup


def _compute_stats(data, cfg, stats, seed, warm_theta=None, warm_beta=None):
    """Fit once, then evaluate the requested statistics.

    Returns (values, pieces, notes) where notes carries per-statistic
    bookkeeping such as the number of floored hazard evaluations.
    """
    pieces = _fit_pieces(data, cfg, seed, warm_theta, warm_beta)
    values: dict[str, float] = {}
    notes: dict[str, int] = {}
    for stat in stats:
        if stat == "T":
            values["T"] = _t_value(pieces, cfg)[0]
        elif stat == "LR":
            values["LR"], floored = _lr_value(data, pieces, cfg)
            if floored:
                notes["lr_floored"] = notes.get("lr_floored", 0) + floored
        elif stat == "S":
            values["S"] = _s_value(data, pieces)
        else:
            raise ValueError(f"unknown statistic {stat!r}")
    return values, pieces, notes


def statistic_T(data: Dataset, cfg: TestConfig, seed: int = 0):
    """Scaled L_p distance statistic.

    Returns (value, fitted Weibull parameters, monotone hazard estimate).
    """
    pieces = _fit_pieces(data, cfg, seed)
    value, est = _t_value(pieces, cfg)
    return value, pieces.theta, est


def statistic_LR(data: Dataset, cfg: TestConfig, seed: int = 0) -> float:
    """Log likelihood-ratio statistic; small values reject the null.

    Monotone hazard values below LOG_FLOOR are floored inside the log
    (flat majorant tails would otherwise send the ratio to +infinity);
    a warning reports how many evaluations were floored.
    """
    pieces = _fit_pieces(data, cfg, seed)
    value, floored = _lr_value(data, pieces, cfg)
    if floored:
        warnings.warn(
            f"floored {floored} monotone hazard value(s) at {LOG_FLOOR} inside log",
            stacklevel=2,
        )
    return value


def statistic_S(data: Dataset, cfg: TestConfig, seed: int = 0) -> float:
    """Kolmogorov-Smirnov distance between fitted baseline distributions.

    Evaluated on the union of the Breslow jump points (both one-sided
    limits) and a 2048-point uniform grid on [0, max T].
    """
    pieces = _fit_pieces(data, cfg, seed)
    return _s_value(data, pieces)
