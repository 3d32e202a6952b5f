"""Nonparametric estimators: at-risk mass, Breslow cumulative hazard,
least-concave-majorant (Grenander-type) monotone hazard, the associated
argmax inverse, and Kaplan-Meier product-limit curves.

The monotone hazard estimator on a window [eps, M] is the left-hand
slope of the least concave majorant of the Breslow estimator restricted
to {eps} + its jump points inside (eps, M) + {M}.  The majorant is built
by a monotone-stack upper-hull pass, so its slopes are nonincreasing by
construction and it touches the input points at every knot.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .coxfit import _rev_cumsum
from .data import Dataset


@dataclass(frozen=True)
class StepCumHazard:
    """Right-continuous nondecreasing step function, 0 before the first jump.

    `values[k]` is the function value at and after `jump_times[k]`.
    """

    jump_times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        jt = np.asarray(self.jump_times, dtype=np.float64)
        v = np.asarray(self.values, dtype=np.float64)
        if jt.shape != v.shape or jt.ndim != 1:
            raise ValueError("jump_times and values must be 1-d of equal length")
        if jt.size and (np.any(np.diff(jt) <= 0) or jt[0] <= 0):
            raise ValueError("jump_times must be positive and strictly ascending")
        if np.any(np.diff(v) < 0) or (v.size and v[0] < 0):
            raise ValueError("values must be nonnegative and nondecreasing")
        object.__setattr__(self, "jump_times", jt)
        object.__setattr__(self, "values", v)

    def __call__(self, x):
        idx = np.searchsorted(self.jump_times, x, side="right")
        padded = np.concatenate(([0.0], self.values))
        return padded[idx]

    def to_csv(self, dest) -> None:
        _write_table(dest, "time,value", zip(self.jump_times, self.values))


@dataclass(frozen=True)
class MonotoneHazard:
    """Left-continuous nonincreasing step hazard on a window (eps, M].

    `slopes[k]` is the value on (knots[k], knots[k+1]]; `heights` are
    the values of the underlying concave majorant at the knots, so the
    cumulative version is the piecewise-linear interpolant of
    (knots, heights).
    """

    knots: np.ndarray
    slopes: np.ndarray
    heights: np.ndarray
    window: tuple

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=np.float64)
        slopes = np.asarray(self.slopes, dtype=np.float64)
        heights = np.asarray(self.heights, dtype=np.float64)
        if knots.size != slopes.size + 1 or knots.size != heights.size:
            raise ValueError("need len(knots) == len(slopes)+1 == len(heights)")
        if np.any(np.diff(knots) <= 0):
            raise ValueError("knots must be strictly ascending")
        if np.any(np.diff(slopes) > 0):
            raise ValueError("slopes must be nonincreasing")
        if slopes.size and slopes[-1] < 0:
            raise ValueError("slopes must be nonnegative")
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "slopes", slopes)
        object.__setattr__(self, "heights", heights)

    def __call__(self, t):
        """Hazard value, left-continuous; clamped to the edge pieces
        outside the window."""
        idx = np.searchsorted(self.knots, t, side="left")
        idx = np.clip(idx - 1, 0, self.slopes.size - 1)
        return self.slopes[idx]

    def cum(self, t):
        """Integral of the hazard from the window start, i.e. the concave
        majorant shifted to heights[0] at the first knot; clamped outside."""
        return np.interp(t, self.knots, self.heights)

    def to_csv(self, dest) -> None:
        rows = zip(self.knots[:-1], self.knots[1:], self.slopes)
        _write_table(dest, "knot_left,knot_right,slope", rows)


@dataclass(frozen=True)
class SurvivalCurve:
    """Right-continuous nonincreasing product-limit curve, 1 before the
    first jump.  `role` records whether censorings or events were
    treated as the terminal occurrences."""

    jump_times: np.ndarray
    surv: np.ndarray
    role: str

    def __post_init__(self):
        jt = np.asarray(self.jump_times, dtype=np.float64)
        s = np.asarray(self.surv, dtype=np.float64)
        if jt.shape != s.shape or jt.ndim != 1:
            raise ValueError("jump_times and surv must be 1-d of equal length")
        if np.any(np.diff(jt) <= 0):
            raise ValueError("jump_times must be strictly ascending")
        if np.any(np.diff(s) > 0) or np.any(s < 0) or np.any(s > 1):
            raise ValueError("surv must be nonincreasing within [0, 1]")
        object.__setattr__(self, "jump_times", jt)
        object.__setattr__(self, "surv", s)

    def __call__(self, t):
        idx = np.searchsorted(self.jump_times, t, side="right")
        padded = np.concatenate(([1.0], self.surv))
        return padded[idx]

    def mass_points(self):
        """Atoms, their probabilities, and the mass left beyond the last
        jump (assigned to +infinity when sampling)."""
        prev = np.concatenate(([1.0], self.surv[:-1]))
        probs = prev - self.surv
        tail = float(self.surv[-1]) if self.surv.size else 1.0
        return self.jump_times, probs, tail


def phi_n(data: Dataset, beta, x):
    """Empirical at-risk mass (1/n) * sum_i 1{T_i >= x} exp(beta'Z_i)."""
    return phi_n_function(data, beta)(x)


def phi_n_function(data: Dataset, beta):
    """The at-risk mass as a fast callable over scalar or array x."""
    beta = np.atleast_1d(np.asarray(beta, dtype=np.float64))
    st, _, sz = data.sorted_arrays()
    suffix = np.concatenate((_rev_cumsum(np.exp(sz @ beta)), [0.0]))
    n = data.n

    def phi(x):
        idx = np.searchsorted(st, x, side="left")
        return suffix[idx] / n

    return phi


def breslow(data: Dataset, beta) -> StepCumHazard:
    """Breslow cumulative baseline hazard at the given coefficients.

    Jumps at each distinct event time t by (#events at t) divided by the
    risk-set sum of exp(beta'Z) over {j : T_j >= t}.
    """
    beta = np.atleast_1d(np.asarray(beta, dtype=np.float64))
    st, ss, sz = data.sorted_arrays()
    gstart = data.risk_group_starts()
    events = np.flatnonzero(ss == 1)
    if events.size == 0:
        raise ValueError("Breslow estimator needs at least one event")
    with np.errstate(over="ignore"):
        w = np.exp(sz @ beta)
    s0 = _rev_cumsum(w)[gstart[events]]
    et = st[events]
    # events are time-sorted; merge increments at tied times
    first = np.concatenate(([True], et[1:] != et[:-1]))
    starts = np.flatnonzero(first)
    jumps = np.add.reduceat(1.0 / s0, starts)
    return StepCumHazard(et[first], np.cumsum(jumps))


def _upper_hull(xs: np.ndarray, ys: np.ndarray):
    """Indices of the least concave majorant's vertices.

    Slope comparisons use the same divisions as the reported slopes, so
    the output slopes are nonincreasing exactly as floats.
    """
    hull = [0]
    slopes = []  # slope of the hull segment ending at hull[k+1]
    for i in range(1, xs.size):
        s_new = (ys[i] - ys[hull[-1]]) / (xs[i] - xs[hull[-1]])
        while slopes and s_new >= slopes[-1]:
            hull.pop()
            slopes.pop()
            s_new = (ys[i] - ys[hull[-1]]) / (xs[i] - xs[hull[-1]])
        hull.append(i)
        slopes.append(s_new)
    return np.asarray(hull, dtype=np.intp), np.asarray(slopes, dtype=np.float64)


def _window_points(lam: StepCumHazard, window) -> tuple[np.ndarray, np.ndarray]:
    eps, m = window
    if not eps < m:
        raise ValueError(f"degenerate window ({eps}, {m})")
    jt = lam.jump_times
    inner = jt[(jt > eps) & (jt < m)]
    xs = np.concatenate(([eps], inner, [m]))
    ys = lam(xs)
    return xs, ys


def grenander(lam: StepCumHazard, window) -> MonotoneHazard:
    """Monotone (nonincreasing) hazard estimate on [eps, M].

    Restricts `lam` to the window's anchor points and interior jumps,
    takes the least concave majorant, and returns its left-hand slope as
    a left-continuous step function.
    """
    xs, ys = _window_points(lam, window)
    hull, slopes = _upper_hull(xs, ys)
    return MonotoneHazard(xs[hull], slopes, ys[hull], (float(window[0]), float(window[1])))


def inverse_process(lam: StepCumHazard, a: float, window) -> float:
    """Largest maximizer of t -> lam(t) - a*t over the window.

    The maximum over [eps, M] is always attained on the candidate set
    consisting of the window endpoints and the interior jump points, so
    the argmax is taken there; ties resolve to the largest t.
    """
    xs, ys = _window_points(lam, window)
    vals = ys - a * xs
    best = vals.max()
    return float(xs[np.flatnonzero(vals == best)[-1]])


def kaplan_meier(data: Dataset, role: str = "event") -> SurvivalCurve:
    """Product-limit estimator.

    With role="censoring" the censoring indicators are treated as the
    events of interest, which estimates the censoring survival curve
    used for bootstrap resampling.
    """
    if role not in ("event", "censoring"):
        raise ValueError("role must be 'event' or 'censoring'")
    st, ss, _ = data.sorted_arrays()
    flag = (ss == 1) if role == "event" else (ss == 0)
    occ = np.flatnonzero(flag)
    if occ.size == 0:
        return SurvivalCurve(np.empty(0), np.empty(0), role)
    ot = st[occ]
    first = np.concatenate(([True], ot[1:] != ot[:-1]))
    times = ot[first]
    d = np.diff(np.concatenate((np.flatnonzero(first), [occ.size])))
    # risk set counts everyone still under observation at each jump time
    at_risk = data.n - np.searchsorted(st, times, side="left")
    surv = np.cumprod(1.0 - d / at_risk)
    return SurvivalCurve(times, surv, role)


def breslow_cdf(lam: StepCumHazard) -> SurvivalCurve:
    """Baseline event-time distribution implied by a cumulative hazard,
    F(t) = 1 - exp(-lam(t)), returned through its survival curve."""
    return SurvivalCurve(lam.jump_times, np.exp(-lam.values), "event")


def _write_table(dest, header: str, rows) -> None:
    lines = [header]
    for row in rows:
        lines.append(",".join("%.17g" % v for v in row))
    text = "\n".join(lines) + "\n"
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        Path(dest).write_text(text)
