"""Synthetic data generators for the simulation scenarios.

Three baseline hazard families, all decreasing where used:

* Weibull(mu, nu):   hazard nu * mu**nu * t**(nu-1), decreasing iff nu < 1
* AltA(c):           hazard 1 / (t + c)
* AltB(c):           hazard c + 1 / (2 sqrt(t))

Covariates are Uniform[0, 1]^d, censoring is Uniform[0, tau] independent
of the covariates, and event times are drawn by closed-form inversion of
the cumulative hazard against a unit exponential.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from ._rng import derive_seed, observation_uniforms
from .data import Dataset

_SAMPLE_TAG = 0x5347


@dataclass(frozen=True)
class WeibullBaseline:
    """Weibull baseline: cumulative hazard (mu * t) ** nu."""

    mu: float
    nu: float
    kind = "weibull"

    def __post_init__(self):
        if self.mu <= 0 or self.nu <= 0:
            raise ValueError("Weibull baseline needs mu > 0 and nu > 0")

    def hazard(self, t):
        return self.nu * self.mu**self.nu * np.asarray(t, float) ** (self.nu - 1.0)

    def hazard_deriv(self, t):
        t = np.asarray(t, float)
        return self.nu * (self.nu - 1.0) * self.mu**self.nu * t ** (self.nu - 2.0)

    def cum_hazard(self, t):
        return (self.mu * np.asarray(t, float)) ** self.nu

    def inverse_cum_hazard(self, e):
        return np.asarray(e, float) ** (1.0 / self.nu) / self.mu

    def hazard_inverse(self, s):
        """Solve hazard(t) = s; +inf / 0 conventions at the range ends."""
        s = np.asarray(s, float)
        scale = self.nu * self.mu**self.nu
        if self.nu == 1.0:
            return np.where(s >= scale, np.inf, 0.0)
        with np.errstate(divide="ignore"):
            return (s / scale) ** (1.0 / (self.nu - 1.0))

    def params(self):
        return {"mu": self.mu, "nu": self.nu}


@dataclass(frozen=True)
class AltABaseline:
    """Pareto-type baseline: hazard 1/(t + c), cumulative log((t + c)/c)."""

    c: float
    kind = "alt_a"

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError("AltA baseline needs c > 0")

    def hazard(self, t):
        return 1.0 / (np.asarray(t, float) + self.c)

    def hazard_deriv(self, t):
        return -1.0 / (np.asarray(t, float) + self.c) ** 2

    def cum_hazard(self, t):
        return np.log1p(np.asarray(t, float) / self.c)

    def inverse_cum_hazard(self, e):
        return self.c * np.expm1(np.asarray(e, float))

    def hazard_inverse(self, s):
        s = np.asarray(s, float)
        with np.errstate(divide="ignore"):
            return np.maximum(1.0 / s - self.c, 0.0)

    def params(self):
        return {"c": self.c}


@dataclass(frozen=True)
class AltBBaseline:
    """Linear-plus-root baseline: hazard c + 1/(2 sqrt(t)), cumulative c*t + sqrt(t)."""

    c: float
    kind = "alt_b"

    def __post_init__(self):
        if self.c <= 0:
            raise ValueError("AltB baseline needs c > 0")

    def hazard(self, t):
        return self.c + 0.5 / np.sqrt(np.asarray(t, float))

    def hazard_deriv(self, t):
        return -0.25 * np.asarray(t, float) ** -1.5

    def cum_hazard(self, t):
        t = np.asarray(t, float)
        return self.c * t + np.sqrt(t)

    def inverse_cum_hazard(self, e):
        # solve c*t + sqrt(t) = e via the positive root in sqrt(t)
        e = np.asarray(e, float)
        root = (-1.0 + np.sqrt(1.0 + 4.0 * self.c * e)) / (2.0 * self.c)
        return root**2

    def hazard_inverse(self, s):
        s = np.asarray(s, float)
        with np.errstate(divide="ignore"):
            return np.where(s > self.c, 0.25 / (s - self.c) ** 2, np.inf)

    def params(self):
        return {"c": self.c}


_BASELINES = {
    "weibull": WeibullBaseline,
    "alt_a": AltABaseline,
    "alt_b": AltBBaseline,
}


def baseline_from_dict(d: dict):
    kind = d["kind"]
    cls = _BASELINES[kind]
    return cls(**{k: v for k, v in d.items() if k != "kind"})


@dataclass(frozen=True)
class Scenario:
    """A complete data-generating configuration.

    Attributes
    ----------
    baseline : WeibullBaseline | AltABaseline | AltBBaseline
    beta : array-like
        True regression coefficients; its length sets the covariate
        dimension.
    censor_tau : float
        Upper endpoint of the Uniform[0, tau] censoring law (inf allowed
        as a no-censoring proxy).
    window : (float, float)
        Estimation window (eps, M) carried along for downstream use.
    n : int
        Sample size.
    """

    baseline: object
    beta: tuple = (0.5,)
    censor_tau: float = float("inf")
    window: tuple = (0.1, 1.0)
    n: int = 100

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(float(b) for b in np.atleast_1d(self.beta)))
        if self.censor_tau <= 0:
            raise ValueError("censor_tau must be positive")
        eps, m = self.window
        if not 0 <= eps < m:
            raise ValueError("window must satisfy 0 <= eps < M")
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if not eps < m < self.censor_tau:
            warnings.warn(
                "window (eps, M) should sit strictly below censor_tau; "
                f"got eps={eps}, M={m}, tau={self.censor_tau}",
                stacklevel=2,
            )

    @property
    def dim(self) -> int:
        return len(self.beta)

    def to_dict(self) -> dict:
        return {
            "baseline": {"kind": self.baseline.kind, **self.baseline.params()},
            "beta": list(self.beta),
            "censor_tau": self.censor_tau,
            "window": list(self.window),
            "n": self.n,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @staticmethod
    def from_dict(d: dict) -> "Scenario":
        return Scenario(
            baseline=baseline_from_dict(d["baseline"]),
            beta=tuple(d["beta"]),
            censor_tau=d["censor_tau"],
            window=tuple(d["window"]),
            n=d["n"],
        )

    @staticmethod
    def from_json(text: str) -> "Scenario":
        return Scenario.from_dict(json.loads(text))

    def with_n(self, n: int) -> "Scenario":
        return replace(self, n=n)


def cum_hazard_true(scenario: Scenario, t):
    """True cumulative baseline hazard of the scenario at times t."""
    return scenario.baseline.cum_hazard(t)


def sample(scenario: Scenario, seed: int) -> Dataset:
    """Draw a Dataset from the scenario, deterministically in `seed`.

    Per observation i: covariates Z_i ~ U[0,1]^d, a unit exponential E_i,
    the event time solving cum_hazard(X_i) * exp(beta'Z_i) = E_i, and a
    censoring time C_i ~ U[0, tau]; the record is (min(X_i, C_i),
    1{X_i <= C_i}, Z_i).  Each observation consumes its own substream,
    so the result is independent of generation order.
    """
    n, d = scenario.n, scenario.dim
    u = observation_uniforms(derive_seed(seed, _SAMPLE_TAG), n, d + 2)
    z = u[:, :d]
    e = -np.log1p(-u[:, d])
    lin = z @ np.asarray(scenario.beta)
    x = scenario.baseline.inverse_cum_hazard(e * np.exp(-lin))
    if np.isinf(scenario.censor_tau):
        c = np.full(n, np.inf)
    else:
        c = scenario.censor_tau * u[:, d + 1]
    t = np.minimum(x, c)
    status = (x <= c).astype(np.int8)
    return Dataset(t, status, z, _validate=False)
