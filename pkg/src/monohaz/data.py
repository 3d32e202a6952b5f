"""Right-censored survival data with covariates.

A `Dataset` is an immutable sample of triplets (follow-up time, event
indicator, covariate vector).  CSV is the only on-disk format:

    time,status,z1,...,zd
    1.25,1,0.37
    ...

Times are arbitrary nonnegative reals; no rescaling of the time axis is
ever applied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._rng import derive_seed, stream_uniforms
from .exceptions import ParseError

_SPLIT_TAG = 0x5350


@dataclass(frozen=True)
class Observation:
    """One subject: follow-up time, event indicator, covariate vector."""

    time: float
    status: int
    covariates: np.ndarray


class Dataset:
    """Immutable sample of right-censored observations.

    Parameters
    ----------
    time : (n,) array-like
        Nonnegative, finite follow-up times.
    status : (n,) array-like
        1 where the event was observed, 0 where censored.
    covariates : (n, d) or (n,) array-like
        Covariate vectors; a 1-d input is treated as a single covariate.

    Observations keep their construction order.  `sorted_index` is the
    permutation ordering them by ascending time, with events before
    censorings at tied times and input order as the final tie-break, so
    that risk sets of the form {j : T_j >= t} can be read off suffixes
    of the sorted arrays.
    """

    def __init__(self, time, status, covariates, *, _validate: bool = True):
        time = np.ascontiguousarray(time, dtype=np.float64)
        status = np.ascontiguousarray(status, dtype=np.int8)
        covariates = np.asarray(covariates, dtype=np.float64)
        if covariates.ndim == 1:
            covariates = covariates[:, None]
        covariates = np.ascontiguousarray(covariates)
        if _validate:
            self._validate(time, status, covariates)
        order = np.lexsort((np.arange(time.shape[0]), -status, time))
        for arr in (time, status, covariates, order):
            arr.flags.writeable = False
        self.time = time
        self.status = status
        self.covariates = covariates
        self.sorted_index = order
        self._cache: dict = {}

    @staticmethod
    def _validate(time, status, covariates):
        n = time.shape[0]
        if n < 2:
            raise ValueError("a Dataset needs at least 2 observations")
        if status.shape != (n,) or covariates.shape[0] != n:
            raise ValueError("time, status and covariates must share length")
        if covariates.ndim != 2 or covariates.shape[1] < 1:
            raise ValueError("covariates must have at least one column")
        if not np.all(np.isfinite(time)):
            raise ValueError("times must be finite")
        if np.any(time < 0):
            raise ValueError("times must be nonnegative")
        if not np.all((status == 0) | (status == 1)):
            raise ValueError("status must be 0 or 1")
        if not np.all(np.isfinite(covariates)):
            raise ValueError("covariates must be finite")

    @property
    def n(self) -> int:
        return self.time.shape[0]

    @property
    def dim(self) -> int:
        return self.covariates.shape[1]

    @property
    def observations(self) -> list[Observation]:
        return [
            Observation(float(t), int(s), z)
            for t, s, z in zip(self.time, self.status, self.covariates)
        ]

    def take(self, indices) -> "Dataset":
        """Sub-sample by row indices (kept in the given order)."""
        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(
            self.time[idx], self.status[idx], self.covariates[idx], _validate=False
        )

    def sorted_arrays(self):
        """(time, status, covariates) in `sorted_index` order, cached."""
        try:
            return self._cache["sorted"]
        except KeyError:
            o = self.sorted_index
            out = (self.time[o], self.status[o], self.covariates[o])
            self._cache["sorted"] = out
            return out

    def risk_group_starts(self) -> np.ndarray:
        """For each sorted position, the first sorted position tied with it.

        Position i and risk_group_starts()[i] share the same follow-up
        time; suffix sums taken at the group start give sums over the
        risk set {j : T_j >= T_i} including ties.
        """
        try:
            return self._cache["gstart"]
        except KeyError:
            st = self.sorted_arrays()[0]
            new_group = np.empty(st.shape[0], dtype=bool)
            new_group[0] = True
            np.not_equal(st[1:], st[:-1], out=new_group[1:])
            starts = np.where(new_group, np.arange(st.shape[0]), 0)
            starts = np.maximum.accumulate(starts)
            self._cache["gstart"] = starts
            return starts

    def __getstate__(self):
        return (self.time, self.status, self.covariates)

    def __setstate__(self, state):
        time, status, covariates = state
        self.__init__(time, status, covariates, _validate=False)

    def __repr__(self):
        events = int(self.status.sum())
        return f"Dataset(n={self.n}, d={self.dim}, events={events})"


def split(data: Dataset, ratio: float, seed: int) -> tuple[Dataset, Dataset]:
    """Deterministic pseudo-random partition into two subsamples.

    The first part has floor(ratio * n) observations, the second the
    rest; both keep input order.  The same (data, ratio, seed) always
    produces the same partition.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError("ratio must lie strictly between 0 and 1")
    n = data.n
    n1 = math.floor(ratio * n)
    n2 = n - n1
    if n1 < 2 or n2 < 2:
        raise ValueError(f"subsample too small: sizes ({n1}, {n2})")
    keys = stream_uniforms(derive_seed(seed, _SPLIT_TAG), np.arange(n))
    order = np.argsort(keys, kind="stable")
    first = np.sort(order[:n1])
    second = np.sort(order[n1:])
    return data.take(first), data.take(second)


def _parse_header(line: str) -> int:
    fields = [f.strip() for f in line.strip().split(",")]
    if len(fields) < 3 or fields[0] != "time" or fields[1] != "status":
        raise ParseError(
            "header must be 'time,status,z1,...,zd', got " + repr(line.strip())
        )
    for k, name in enumerate(fields[2:], start=1):
        if name != f"z{k}":
            raise ParseError(f"covariate column {k} must be named 'z{k}', got {name!r}")
    return len(fields) - 2


def load_csv(source) -> Dataset:
    """Read a Dataset from a CSV file, path, or open text stream.

    Raises ParseError naming the offending 1-based line on any
    malformed row (wrong field count, non-numeric entries, negative
    time, status outside {0, 1}).
    """
    if hasattr(source, "read"):
        lines = source.read().splitlines()
    else:
        lines = Path(source).read_text().splitlines()
    if not lines:
        raise ParseError("empty file")
    d = _parse_header(lines[0])
    times, statuses, covs = [], [], []
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        fields = raw.split(",")
        if len(fields) != d + 2:
            raise ParseError(
                f"expected {d + 2} fields, got {len(fields)} at line {lineno}"
            )
        try:
            vals = [float(f) for f in fields]
        except ValueError:
            raise ParseError(f"non-numeric value at line {lineno}: {raw!r}") from None
        t, s, z = vals[0], vals[1], vals[2:]
        if not math.isfinite(t):
            raise ParseError(f"non-finite time at line {lineno}")
        if t < 0:
            raise ParseError(f"negative time at line {lineno}")
        if s not in (0.0, 1.0):
            raise ParseError(f"status must be 0 or 1 at line {lineno}")
        times.append(t)
        statuses.append(int(s))
        covs.append(z)
    if len(times) < 2:
        raise ParseError("need at least 2 data rows")
    return Dataset(times, statuses, covs)


def write_csv(data: Dataset, dest) -> None:
    """Write a Dataset to a path or open text stream.

    Floats are written with 17 significant digits so load_csv(write_csv(d))
    reproduces d exactly.
    """
    lines = ["time,status," + ",".join(f"z{k + 1}" for k in range(data.dim))]
    for t, s, z in zip(data.time, data.status, data.covariates):
        lines.append(
            "%.17g,%d,%s" % (t, s, ",".join("%.17g" % v for v in z))
        )
    text = "\n".join(lines) + "\n"
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        Path(dest).write_text(text)
