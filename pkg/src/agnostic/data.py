"""Dataset container, CSV ingestion, standardization and the two-way split."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class DataError(ValueError):
    """Bad input data. The CLI maps every subclass to exit status 1."""


class NonFiniteValue(DataError):
    def __init__(self, row, col):
        self.row, self.col = row, col
        super().__init__(f"non-finite value at row {row}, column {col!r}")


class NonNumericValue(DataError):
    def __init__(self, row, col, text):
        self.row, self.col, self.text = row, col, text
        super().__init__(f"non-numeric value {text!r} at row {row}, column {col!r}")


class DatasetTooSmall(DataError):
    pass


def _frozen(a):
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Design matrix ``x`` (n x p), response ``y`` and column names.

    Arrays are copied and marked read-only on construction.
    """

    x: np.ndarray
    y: np.ndarray
    names: tuple

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        y = np.array(self.y, dtype=float).ravel()
        names = tuple(str(s) for s in self.names)
        if x.ndim != 2:
            raise DataError(f"x must be 2-d, got shape {x.shape}")
        n, p = x.shape
        if n < 1 or p < 1:
            raise DataError(f"need n >= 1 and p >= 1, got n={n}, p={p}")
        if y.shape[0] != n:
            raise DataError(f"y has length {y.shape[0]}, x has {n} rows")
        if len(names) != p:
            raise DataError(f"{len(names)} names for {p} columns")
        if len(set(names)) != p:
            raise DataError("column names must be unique")
        bad = np.argwhere(~np.isfinite(x))
        if bad.size:
            i, j = bad[0]
            raise NonFiniteValue(int(i), names[j])
        bad = np.flatnonzero(~np.isfinite(y))
        if bad.size:
            raise NonFiniteValue(int(bad[0]), "<response>")
        object.__setattr__(self, "x", _frozen(x))
        object.__setattr__(self, "y", _frozen(y))
        object.__setattr__(self, "names", names)

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def p(self):
        return self.x.shape[1]

    def rows(self, idx):
        idx = np.asarray(idx, dtype=np.intp)
        return Dataset(self.x[idx], self.y[idx], self.names)

    def columns(self, idx):
        idx = list(idx)
        return Dataset(self.x[:, idx], self.y, [self.names[j] for j in idx])

    def index_of(self, name):
        try:
            return self.names.index(name)
        except ValueError:
            raise DataError(f"no column named {name!r}") from None


@dataclass(frozen=True, eq=False)
class SplitPair:
    d1: Dataset
    d2: Dataset
    seed: int
    permutation: np.ndarray

    @property
    def m1(self):
        return self.d1.n

    @property
    def m2(self):
        return self.d2.n


@dataclass(frozen=True, eq=False)
class StandardizationRecord:
    """Training-half column means and scales.

    ``zero_variance`` marks columns that were centered but not scaled; their
    stored scale is 1.
    """

    means: np.ndarray
    scales: np.ndarray
    response_mean: float
    zero_variance: np.ndarray
    applied: bool = True

    def transform(self, data):
        if not self.applied:
            return data
        return Dataset((data.x - self.means) / self.scales, data.y, data.names)

    def inverse(self, data):
        if not self.applied:
            return data
        return Dataset(data.x * self.scales + self.means, data.y, data.names)


def load_csv(path, response):
    """Read a headed, comma-separated numeric table; ``response`` becomes y."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        body = [r for r in reader if r and any(c.strip() for c in r)]
    if header.count(response) == 0:
        raise DataError(f"{path}: response column {response!r} not found")
    if header.count(response) > 1:
        raise DataError(f"{path}: response column {response!r} appears more than once")
    if not body:
        raise DataError(f"{path}: no data rows")
    values = np.empty((len(body), len(header)))
    for i, row in enumerate(body):
        if len(row) != len(header):
            raise DataError(f"{path}: row {i} has {len(row)} fields, header has {len(header)}")
        for j, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise NonNumericValue(i, header[j], cell) from None
            if not math.isfinite(v):
                raise NonFiniteValue(i, header[j])
            values[i, j] = v
    k = header.index(response)
    keep = [j for j in range(len(header)) if j != k]
    if not keep:
        raise DataError(f"{path}: no predictor columns besides {response!r}")
    return Dataset(values[:, keep], values[:, k], [header[j] for j in keep])


def split(data, seed):
    """Random halves; the first ceil(n/2) permuted rows go to ``d1``."""
    if data.n < 4:
        raise DatasetTooSmall(f"need at least 4 rows to split, got {data.n}")
    perm = np.random.default_rng(seed).permutation(data.n)
    m1 = (data.n + 1) // 2
    perm.flags.writeable = False
    return SplitPair(data.rows(perm[:m1]), data.rows(perm[m1:]), seed, perm)


def standardize(train, apply_to):
    """Center and scale columns with statistics of ``train`` only.

    Scales are sample standard deviations (divisor m - 1). A column that is
    constant in ``train`` (or a single-row ``train``) is centered but left
    unscaled and flagged. The response is never transformed.
    """
    means = train.x.mean(axis=0)
    if train.n > 1:
        sd = train.x.std(axis=0, ddof=1)
    else:
        sd = np.zeros(train.p)
    flat = ~(sd > 1e-12 * np.maximum(1.0, np.abs(means)))
    scales = np.where(flat, 1.0, sd)
    flat = flat.copy()
    flat.flags.writeable = False
    rec = StandardizationRecord(_frozen(means), _frozen(scales), float(train.y.mean()), flat)
    return rec.transform(train), rec.transform(apply_to), rec
