"""Full maximum likelihood for the Cox model with a Weibull baseline.

The baseline hazard is nu * mu**nu * t**(nu-1), with cumulative hazard
(mu*t)**nu, and the conditional event-time distribution given z is
F(x|z) = 1 - exp(-(mu*x)**nu * exp(beta'z)).  Up to terms free of the
parameters, the censored-data log likelihood is

    sum_i Delta_i * [log nu + nu log mu + (nu-1) log T_i + beta'Z_i]
        - (mu T_i)**nu * exp(beta'Z_i)

which is maximized by Newton's method in (log mu, log nu, beta) so the
positivity constraints never bind.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import coxfit
from .data import Dataset
from .exceptions import ConvergenceError, FitError, NonIdentifiableError

_MAX_ITER_DEFAULT = 200


@dataclass(frozen=True)
class WeibullTheta:
    """Weibull baseline parameters plus regression coefficients."""

    mu: float
    nu: float
    beta: tuple

    def __post_init__(self):
        if self.mu <= 0 or self.nu <= 0:
            raise ValueError("mu and nu must be positive")
        object.__setattr__(
            self, "beta", tuple(float(b) for b in np.atleast_1d(self.beta))
        )

    @property
    def beta_array(self) -> np.ndarray:
        return np.asarray(self.beta)

    def to_dict(self) -> dict:
        return {"mu": self.mu, "nu": self.nu, "beta": list(self.beta)}


def param_hazard(theta: WeibullTheta, t):
    """Baseline hazard nu * mu**nu * t**(nu-1)."""
    t = np.asarray(t, dtype=np.float64)
    if theta.nu < 1 and np.any(t <= 0):
        raise ValueError("hazard diverges at t=0 for nu < 1")
    return theta.nu * theta.mu**theta.nu * t ** (theta.nu - 1.0)


def param_cum_hazard(theta: WeibullTheta, t):
    """Baseline cumulative hazard (mu*t)**nu."""
    return (theta.mu * np.asarray(t, dtype=np.float64)) ** theta.nu


def conditional_cdf(theta: WeibullTheta, x, z):
    """P(X <= x | Z = z) = 1 - exp(-(mu*x)**nu * exp(beta'z))."""
    z = np.atleast_1d(np.asarray(z, dtype=np.float64))
    return -np.expm1(-param_cum_hazard(theta, x) * math.exp(float(z @ theta.beta_array)))


def _hazard_crossing(theta: WeibullTheta, s):
    """Solve param_hazard(t) = s for t (vectorized, inf/0 conventions)."""
    s = np.asarray(s, dtype=np.float64)
    scale = theta.nu * theta.mu**theta.nu
    if theta.nu == 1.0:
        return np.where(s >= scale, np.inf, 0.0)
    with np.errstate(divide="ignore"):
        return (s / scale) ** (1.0 / (theta.nu - 1.0))


def _prepared(data: Dataset):
    t = data.time
    delta = data.status == 1
    if np.any(delta & (t <= 0)):
        raise ValueError("events at time 0 make the Weibull likelihood singular")
    logt = np.zeros_like(t)
    pos = t > 0
    logt[pos] = np.log(t[pos])
    return t, delta.astype(np.float64), logt, pos, data.covariates


def _loglik_terms(a, b, beta, delta, logt, pos, z, order):
    """Value/gradient/Hessian in (a, b, beta) = (log mu, log nu, beta)."""
    nu = math.exp(b)
    d = z.shape[1]
    eta = z @ beta
    big_l = a + logt
    with np.errstate(over="ignore"):
        w = np.where(pos, np.exp(nu * big_l + eta), 0.0)
    n_ev = delta.sum()
    ll = float(
        np.sum(delta * (b + nu * big_l - logt + eta)) - w.sum()
    )
    if order == 0:
        return ll, None, None
    wl = w * big_l
    grad = np.empty(2 + d)
    grad[0] = nu * (n_ev - w.sum())
    grad[1] = n_ev + nu * float((delta * big_l).sum()) - nu * wl.sum()
    grad[2:] = delta @ z - w @ z
    if order == 1:
        return ll, grad, None
    wll = wl * big_l
    hess = np.empty((2 + d, 2 + d))
    hess[0, 0] = -(nu**2) * w.sum()
    hess[0, 1] = hess[1, 0] = nu * (n_ev - w.sum()) - nu**2 * wl.sum()
    hess[1, 1] = (
        nu * float((delta * big_l).sum()) - nu * wl.sum() - nu**2 * wll.sum()
    )
    hzw = z.T @ w
    hess[0, 2:] = hess[2:, 0] = -nu * hzw
    hess[1, 2:] = hess[2:, 1] = -nu * (z.T @ wl)
    hess[2:, 2:] = -(z.T * w) @ z
    return ll, grad, hess


def weibull_loglik(data: Dataset, theta: WeibullTheta) -> float:
    """Censored-data log likelihood at theta (constant terms included
    exactly as written in the module docstring)."""
    t, delta, logt, pos, z = _prepared(data)
    return _loglik_terms(
        math.log(theta.mu), math.log(theta.nu), theta.beta_array,
        delta, logt, pos, z, order=0,
    )[0]


def weibull_loglik_gradient(data: Dataset, theta: WeibullTheta) -> np.ndarray:
    """Analytic gradient with respect to (mu, nu, beta)."""
    t, delta, logt, pos, z = _prepared(data)
    _, g, _ = _loglik_terms(
        math.log(theta.mu), math.log(theta.nu), theta.beta_array,
        delta, logt, pos, z, order=1,
    )
    out = g.copy()
    out[0] /= theta.mu  # d/dmu = (d/d log mu) / mu
    out[1] /= theta.nu
    return out


def _ascent_step(hess, grad):
    """Newton step, damped until it is an ascent direction.

    The likelihood is not globally concave; solving
    (hess - lam*I) step = -grad with lam large enough that the shifted
    matrix is negative definite guarantees step'grad > 0.
    """
    d = grad.size
    scale = float(np.max(np.abs(hess)))
    if not np.isfinite(scale) or scale == 0.0:
        return grad
    lam = 0.0
    eye = np.eye(d)
    for _ in range(60):
        a = -(hess - lam * eye)
        try:
            np.linalg.cholesky(a)
        except np.linalg.LinAlgError:
            lam = 10.0 * lam if lam > 0 else 1e-8 * scale
            continue
        return np.linalg.solve(a, grad)
    return grad / scale


def fit_weibull(
    data: Dataset,
    tol: float = 1e-8,
    max_iter: int = _MAX_ITER_DEFAULT,
    init: WeibullTheta | None = None,
    beta_init=None,
) -> WeibullTheta:
    """Joint Newton fit of (mu, nu, beta) with step halving.

    Without an explicit `init`, starts from nu = 1 and the exponential
    closed form mu = #events / sum(T_i * exp(beta'Z_i)) at the partial
    likelihood coefficients (or `beta_init` when supplied).
    """
    t, delta, logt, pos, z = _prepared(data)
    n_ev = delta.sum()
    if n_ev == 0:
        raise NonIdentifiableError("no events: Weibull likelihood has no maximizer")
    d = z.shape[1]
    # center log-time at its mean: the model is scale-equivariant, and the
    # shift decorrelates log mu from log nu, which matters when the times
    # span many orders of magnitude
    shift = float(logt[pos].mean()) if pos.any() else 0.0
    logt = logt - shift
    t_scaled = t * math.exp(-shift)
    if init is not None:
        a, b = math.log(init.mu) + shift, math.log(init.nu)
        beta = np.array(init.beta, dtype=np.float64)
    else:
        if beta_init is None:
            try:
                beta_init = coxfit.fit(data).beta_hat
            except FitError:
                beta_init = np.zeros(d)
        beta = np.array(beta_init, dtype=np.float64, copy=True)
        denom = float(t_scaled @ np.exp(z @ beta))
        a, b = math.log(n_ev / denom), 0.0
    x = np.concatenate(([a, b], beta))
    ll, grad, hess = _loglik_terms(x[0], x[1], x[2:], delta, logt, pos, z, 2)
    for _ in range(max_iter):
        if np.max(np.abs(grad)) <= tol:
            return WeibullTheta(
                math.exp(x[0] - shift), math.exp(x[1]), tuple(x[2:])
            )
        step = _ascent_step(hess, grad)
        # keep single moves bounded; halving handles the rest
        big = np.max(np.abs(step))
        if big > 4.0:
            step = step * (4.0 / big)
        scale = 1.0
        accepted = False
        for _ in range(50):
            cand = x + scale * step
            ll_new = _loglik_terms(cand[0], cand[1], cand[2:], delta, logt, pos, z, 0)[0]
            if np.isfinite(ll_new) and ll_new > ll:
                accepted = True
                break
            scale *= 0.5
        if not accepted:
            # near the optimum the objective is flat to rounding; take the
            # full Newton step if it still shrinks the gradient
            cand = x + step
            _, g_new, h_new = _loglik_terms(
                cand[0], cand[1], cand[2:], delta, logt, pos, z, 2
            )
            if np.all(np.isfinite(g_new)) and np.max(np.abs(g_new)) < np.max(
                np.abs(grad)
            ):
                x, grad, hess = cand, g_new, h_new
                ll = _loglik_terms(x[0], x[1], x[2:], delta, logt, pos, z, 0)[0]
                continue
            break
        x = cand
        ll, grad, hess = _loglik_terms(x[0], x[1], x[2:], delta, logt, pos, z, 2)
    last = WeibullTheta(math.exp(x[0] - shift), math.exp(x[1]), tuple(x[2:]))
    if np.max(np.abs(grad)) <= tol:
        return last
    raise ConvergenceError(
        f"Weibull fit did not reach tolerance {tol} "
        f"(gradient max-norm {np.max(np.abs(grad)):.3g})",
        last_iterate=last,
    )
