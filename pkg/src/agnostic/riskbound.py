"""Excess-risk bound for least squares over an l1 ball, and a Monte Carlo check of it.

With every variable bounded by C, the empirical risk minimizer over
B(L) = {b : ||b||_1 <= L} satisfies, with probability at least 1 - delta,

    R(b_hat) <= R(b_star) + sqrt(8 C^2 L^4 / n * log(2 p^2 / delta)),

where R is the squared-error predictive risk and b_star the best predictor in
B(L). Nothing here uses an intercept.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .parallel import pmap
from .selectors import lasso_constrained

MIN_REPS = 100


class BoundHypothesisError(ValueError):
    """A generator produced a value outside [-C, C]."""


@dataclass(frozen=True)
class BoundInputs:
    c_max: float
    l1_budget: float
    n: int
    p: int
    delta: float

    def __post_init__(self):
        if not self.c_max > 0:
            raise ValueError(f"C must be positive, got {self.c_max}")
        if not self.l1_budget > 0:
            raise ValueError(f"L must be positive, got {self.l1_budget}")
        if not (int(self.n) == self.n and self.n >= 1):
            raise ValueError(f"n must be a positive integer, got {self.n}")
        if not (int(self.p) == self.p and self.p >= 1):
            raise ValueError(f"p must be a positive integer, got {self.p}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")


@dataclass(frozen=True)
class BoundCheckReport:
    dgp: str
    bound_value: float
    violation_rate: float
    violations: int
    reps: int
    holdout_size: int
    risk_star: float
    mean_excess: float
    max_excess: float


def excess_risk_bound(inputs):
    """sqrt((8 C^2 L^4 / n) * log(2 p^2 / delta))."""
    c, L, n, p, d = inputs.c_max, inputs.l1_budget, inputs.n, inputs.p, inputs.delta
    return math.sqrt(8.0 * c * c * L ** 4 / n * math.log(2.0 * p * p / d))


# --------------------------------------------------------------------------
# bounded data generators: (rng, n, p, C) -> (x, y), all entries in [-C, C]


def bounded_linear(rng, n, p, c):
    beta = np.zeros(p)
    head = np.array([0.5, -0.3, 0.2])[:p]
    beta[: head.size] = 0.75 * head / np.abs(head).sum()
    x = rng.uniform(-c, c, size=(n, p))
    y = x @ beta + rng.uniform(-0.25 * c, 0.25 * c, size=n)
    return x, y


def bounded_sign(rng, n, p, c):
    x = rng.uniform(-c, c, size=(n, p))
    y = c * np.clip(np.sign(x[:, 0]) + 0.5 * rng.standard_normal(n), -1.0, 1.0)
    return x, y


def bounded_sine(rng, n, p, c):
    x = rng.uniform(-c, c, size=(n, p))
    y = c * np.clip(np.sin(np.pi * x[:, 0] / c) + 0.3 * rng.standard_normal(n), -1.0, 1.0)
    return x, y


DGPS = {
    "bounded-linear": bounded_linear,
    "bounded-sign": bounded_sign,
    "bounded-sine": bounded_sine,
}


def draw(dgp, rng, n, p, c):
    gen = DGPS[dgp] if isinstance(dgp, str) else dgp
    x, y = gen(rng, n, p, c)
    lim = c * (1.0 + 1e-12)
    if np.abs(x).max() > lim or np.abs(y).max() > lim:
        raise BoundHypothesisError(f"generator {dgp!r} left [-{c}, {c}]")
    return x, y


# --------------------------------------------------------------------------
# risk on a fixed holdout


@dataclass(frozen=True, eq=False)
class Holdout:
    """Second moments of a large sample; risk of any b is a quadratic form."""

    gram: np.ndarray  # X'X / N
    xy: np.ndarray  # X'y / N
    yy: float  # y'y / N
    size: int

    @classmethod
    def from_sample(cls, x, y):
        N = x.shape[0]
        return cls(x.T @ x / N, x.T @ y / N, float(y @ y / N), N)

    def risk(self, beta):
        return float(self.yy - 2.0 * self.xy @ beta + beta @ self.gram @ beta)


def holdout_risk(x, y, beta):
    """Mean squared error of ``x @ beta`` and its standard error."""
    sq = (y - x @ beta) ** 2
    return float(sq.mean()), float(sq.std(ddof=1) / math.sqrt(sq.size))


def project_l1_ball(v, radius):
    """Euclidean projection onto {b : ||b||_1 <= radius} by the sort-and-threshold rule."""
    if np.abs(v).sum() <= radius:
        return v.copy()
    u = np.sort(np.abs(v))[::-1]
    css = np.cumsum(u)
    k = np.arange(1, v.size + 1)
    rho = np.nonzero(u * k > css - radius)[0][-1]
    theta = (css[rho] - radius) / (rho + 1.0)
    return np.sign(v) * np.maximum(np.abs(v) - theta, 0.0)


def best_in_ball(holdout, radius, tol=1e-10, max_iter=200_000):
    """Minimize the holdout risk over the l1 ball by accelerated projected gradient."""
    G, c = holdout.gram, holdout.xy
    lip = 2.0 * max(np.linalg.eigvalsh(G)[-1], 1e-300)
    beta = np.zeros(c.size)
    z, t = beta.copy(), 1.0
    for _ in range(max_iter):
        nxt = project_l1_ball(z - 2.0 * (G @ z - c) / lip, radius)
        if np.max(np.abs(nxt - beta)) < tol:
            beta = nxt
            break
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        z = nxt + (t - 1.0) / t_next * (nxt - beta)
        # restart momentum when the objective goes up
        if holdout.risk(nxt) > holdout.risk(beta):
            z, t_next = nxt.copy(), 1.0
        beta, t = nxt, t_next
    return beta


def verify_bound(dgp, inputs, reps=500, seed=0, holdout_size=50_000):
    """Fraction of replications in which the inequality fails.

    Each replication draws n training pairs, fits least squares over B(L) and
    evaluates its risk on one shared holdout. The comparator b_star minimizes
    the same holdout risk over B(L).
    """
    if reps < MIN_REPS:
        raise ValueError(f"reps must be at least {MIN_REPS}, got {reps}")
    c, L, n, p = inputs.c_max, inputs.l1_budget, inputs.n, inputs.p
    bound = excess_risk_bound(inputs)
    streams = np.random.SeedSequence(seed).spawn(reps + 1)
    hx, hy = draw(dgp, np.random.default_rng(streams[0]), holdout_size, p, c)
    hold = Holdout.from_sample(hx, hy)
    risk_star = hold.risk(best_in_ball(hold, L))
    names = [f"x{j}" for j in range(p)]

    def one(stream):
        x, y = draw(dgp, np.random.default_rng(stream), n, p, c)
        model = lasso_constrained(Dataset(x, y, names), L)
        return hold.risk(model.beta_hat) - risk_star

    excess = np.array(pmap(one, streams[1:]))
    viol = int((excess > bound).sum())
    return BoundCheckReport(dgp if isinstance(dgp, str) else getattr(dgp, "__name__", "custom"),
                            bound, viol / reps, viol, reps, holdout_size, risk_star,
                            float(excess.mean()), float(excess.max()))
