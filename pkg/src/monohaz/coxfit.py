"""Maximum partial-likelihood estimation of Cox regression coefficients.

The log partial likelihood is

    l(beta) = sum over events i of [ beta'Z_i - log sum_{j: T_j >= T_i} exp(beta'Z_j) ]

with tied event times sharing the full risk set (Breslow convention).
Risk-set sums are evaluated by one reverse sweep over the time-sorted
sample, so a likelihood/gradient/Hessian evaluation is O(n d^2) after
the one-off sort cached on the Dataset.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .exceptions import ConvergenceError, NonIdentifiableError, SeparationError

_BETA_GUARD = 50.0


@dataclass
class CoxFit:
    """Result of a partial-likelihood fit."""

    beta_hat: np.ndarray
    loglik: float
    gradient_norm: float
    iterations: int
    converged: bool


def _rev_cumsum(x: np.ndarray) -> np.ndarray:
    return np.cumsum(x[::-1], axis=0)[::-1]


def _derivatives(data: Dataset, beta: np.ndarray, order: int):
    """Log partial likelihood and, per `order`, gradient and Hessian."""
    st, ss, sz = data.sorted_arrays()
    gstart = data.risk_group_starts()
    events = np.flatnonzero(ss == 1)
    if events.size == 0:
        raise NonIdentifiableError("no events in the sample")
    eta = sz @ beta
    with np.errstate(over="ignore"):
        w = np.exp(eta)
    s0 = _rev_cumsum(w)[gstart[events]]
    ll = float(eta[events].sum() - np.log(s0).sum())
    if order == 0:
        return ll, None, None
    wz = w[:, None] * sz
    s1 = _rev_cumsum(wz)[gstart[events]]
    ratio = s1 / s0[:, None]
    grad = sz[events].sum(axis=0) - ratio.sum(axis=0)
    if order == 1:
        return ll, grad, None
    wzz = wz[:, :, None] * sz[:, None, :]
    s2 = _rev_cumsum(wzz)[gstart[events]]
    hess = -(s2 / s0[:, None, None]).sum(axis=0) + ratio.T @ ratio
    return ll, grad, hess


def log_partial_likelihood(data: Dataset, beta) -> float:
    """Log partial likelihood at `beta` (Breslow ties)."""
    beta = np.atleast_1d(np.asarray(beta, dtype=np.float64))
    return _derivatives(data, beta, order=0)[0]


def partial_likelihood_gradient(data: Dataset, beta) -> np.ndarray:
    """Analytic gradient of the log partial likelihood at `beta`."""
    beta = np.atleast_1d(np.asarray(beta, dtype=np.float64))
    return _derivatives(data, beta, order=1)[1]


def partial_likelihood_hessian(data: Dataset, beta) -> np.ndarray:
    """Analytic Hessian of the log partial likelihood at `beta`."""
    beta = np.atleast_1d(np.asarray(beta, dtype=np.float64))
    return _derivatives(data, beta, order=2)[2]


def fit(data: Dataset, init=None, tol: float = 1e-8, max_iter: int = 100) -> CoxFit:
    """Newton-Raphson with step halving on the log partial likelihood.

    Stops when the gradient max-norm drops to `tol`.  Raises
    SeparationError when the coefficient norm passes a guard bound
    (monotone likelihood), ConvergenceError after `max_iter` steps.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    d = data.dim
    beta = np.zeros(d) if init is None else np.array(init, dtype=np.float64, copy=True)
    if beta.shape != (d,):
        raise ValueError(f"init must have length {d}")
    ll, grad, hess = _derivatives(data, beta, order=2)
    for it in range(1, max_iter + 1):
        gnorm = float(np.max(np.abs(grad)))
        if gnorm <= tol:
            return CoxFit(beta, ll, gnorm, it - 1, True)
        try:
            step = np.linalg.solve(hess, -grad)
        except np.linalg.LinAlgError:
            step = np.linalg.lstsq(hess, -grad, rcond=None)[0]
        # step halving: accept the first strict improvement
        scale = 1.0
        accepted = False
        for _ in range(40):
            cand = beta + scale * step
            ll_new = _derivatives(data, cand, order=0)[0]
            if np.isfinite(ll_new) and ll_new > ll:
                accepted = True
                break
            scale *= 0.5
        if not accepted:
            # objective flat to rounding; accept the full Newton step when
            # it still shrinks the gradient, otherwise report where we are
            cand = beta + step
            g_new = _derivatives(data, cand, order=1)[1]
            if not (
                np.all(np.isfinite(g_new))
                and np.max(np.abs(g_new)) < np.max(np.abs(grad))
            ):
                gnorm = float(np.max(np.abs(grad)))
                return CoxFit(beta, ll, gnorm, it, gnorm <= tol)
        beta = cand
        if np.max(np.abs(beta)) > _BETA_GUARD:
            raise SeparationError("separation detected: coefficient diverges")
        ll, grad, hess = _derivatives(data, beta, order=2)
    gnorm = float(np.max(np.abs(grad)))
    if gnorm <= tol:
        return CoxFit(beta, ll, gnorm, max_iter, True)
    return CoxFit(beta, ll, gnorm, max_iter, False)
