"""Full conformal prediction intervals for regression.

For a query point x and a trial response y the predictor is refit on the n
training pairs plus (x, y). The conformity p-value is the fraction of the n + 1
absolute residuals at least as large as the trial point's own. The prediction
set {y : p(y) >= alpha} is found on a grid around the point forecast, and its
convex hull (widened by one grid step on each side) is reported.

OLS fits are linear in the trial value, so a whole grid costs one
factorization. Lasso fits are solved per grid point, each cold-started from the
training solution so that results never depend on evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .parallel import pmap
from .selectors import (CD_MAX_SWEEPS, CD_TOL, ConvergenceError, _cd_grid, gram, lasso_fit,
                        lasso_gram)

# Residual magnitudes within this relative distance of the trial residual
# count as ties (ties are inclusive). The distance is relative to the larger of
# the biggest residual and the response scale, so an exact fit, whose residuals
# are pure round-off, counts as all ties.
TIE_RTOL = 1e-9


class ConformalError(RuntimeError):
    pass


class FitFailure(ConformalError):
    pass


class UnboundedInterval(ConformalError):
    def __init__(self, result):
        self.result = result
        super().__init__(
            f"prediction set still reaches the grid edge after {result.doublings} doublings "
            f"(widest hull [{result.lo:.6g}, {result.hi:.6g}])")


class NoFiniteInterval(ConformalError):
    pass


@dataclass(frozen=True)
class PredictorSpec:
    """Which regression produces the residuals.

    kind is ``ols_full``, ``ols_subset`` (intercept plus ``subset``; an empty
    subset is the intercept-only predictor), ``lasso`` (penalty ``lam``, with
    intercept), or ``custom`` (``fit(x_train, y_train, x_query) -> predictions``,
    which must treat its training rows symmetrically).
    """

    kind: str = "ols_full"
    subset: tuple = ()
    lam: float = 0.0
    fit: object = field(default=None, compare=False)

    @classmethod
    def ols_full(cls):
        return cls("ols_full")

    @classmethod
    def ols_subset(cls, subset):
        return cls("ols_subset", tuple(int(j) for j in subset))

    @classmethod
    def intercept_only(cls):
        return cls("ols_subset", ())

    @classmethod
    def lasso(cls, lam):
        return cls("lasso", lam=float(lam))

    @classmethod
    def custom(cls, fit):
        return cls("custom", fit=fit)

    def describe(self):
        if self.kind == "ols_subset":
            return "ols_subset(" + ",".join(map(str, self.subset)) + ")"
        if self.kind == "lasso":
            return f"lasso({self.lam:.12g})"
        return self.kind


@dataclass(frozen=True)
class GridSpec:
    """Search grid: ``points`` (rounded up to odd so the forecast is on it),
    doubling cap, and an optional fixed initial half-width."""

    points: int = 1000
    max_doublings: int = 10
    half_width: float | None = None

    def __post_init__(self):
        if self.points < 16:
            raise ValueError(f"grid needs at least 16 points, got {self.points}")
        if self.max_doublings < 0:
            raise ValueError("max_doublings must be >= 0")


@dataclass(frozen=True, eq=False)
class ConformalResult:
    grid: np.ndarray
    p_values: np.ndarray
    lo: float
    hi: float
    alpha: float
    x_new: np.ndarray
    center: float
    half_width: float
    doublings: int
    step: float
    empty: bool = False

    @property
    def accepted_hull(self):
        return (self.lo, self.hi)

    @property
    def length(self):
        return self.hi - self.lo

    def contains(self, y):
        return self.lo <= y <= self.hi


def _design(x, predictor):
    if predictor.kind == "ols_full":
        cols = x
    elif predictor.kind == "ols_subset":
        cols = x[:, list(predictor.subset)]
    else:
        raise ValueError(predictor.kind)
    return np.column_stack([np.ones(x.shape[0]), cols])


def _annihilate(a, v):
    """(I - H) v for the column space of ``a``; raises if ``a`` is rank deficient."""
    coef, _, rank, _ = np.linalg.lstsq(a, v, rcond=None)
    if rank < a.shape[1]:
        raise FitFailure(f"augmented design has rank {rank} < {a.shape[1]} columns")
    return v - a @ coef


def augmented_residuals(x, y, x_new, ys, predictor):
    """Residuals of the n + 1 augmented points, one row per trial value in ``ys``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ys = np.atleast_1d(np.asarray(ys, dtype=float))
    x_aug = np.vstack([x, np.asarray(x_new, dtype=float).reshape(1, -1)])
    n1 = x_aug.shape[0]
    base = np.append(y, 0.0)
    if predictor.kind in ("ols_full", "ols_subset"):
        a = _design(x_aug, predictor)
        unit = np.zeros(n1)
        unit[-1] = 1.0
        r = _annihilate(a, np.column_stack([base, unit]))
        return r[:, 0][None, :] + ys[:, None] * r[:, 1][None, :]
    if predictor.kind == "lasso":
        xm = x_aug.mean(axis=0)
        xc = x_aug - xm
        G = np.ascontiguousarray(xc.T @ xc / n1)
        c0 = xc.T @ base / n1
        v = np.ascontiguousarray(xc[-1] / n1)
        beta0, _ = lasso_gram(*gram(x - x.mean(axis=0), y - y.mean()), predictor.lam)
        betas = np.zeros((ys.size, x.shape[1]))
        fails = _cd_grid(G, c0, v, np.ascontiguousarray(ys), predictor.lam, beta0, CD_TOL,
                         CD_MAX_SWEEPS, betas)
        if fails:
            raise ConvergenceError(predictor.lam)
        y_aug = base[None, :] + ys[:, None] * np.eye(n1)[-1][None, :]
        ybar = y_aug.mean(axis=1, keepdims=True)
        return y_aug - ybar - betas @ xc.T
    if predictor.kind == "custom":
        out = np.empty((ys.size, n1))
        for g, yt in enumerate(ys):
            y_aug = np.append(y, yt)
            out[g] = y_aug - np.asarray(predictor.fit(x_aug, y_aug, x_aug), dtype=float)
        return out
    raise ValueError(f"unknown predictor kind {predictor.kind!r}")


def pvalues_from_residuals(resid, scale=0.0):
    """Row-wise p(y) = #{i : |e_i| >= |e_{n+1}|} / (n + 1), ties inclusive."""
    a = np.abs(resid)
    tol = TIE_RTOL * np.maximum(a.max(axis=1, keepdims=True), scale)
    counts = (a >= a[:, -1:] - tol).sum(axis=1)
    return counts / a.shape[1]


def conformal_pvalue(data, x_new, y_trial, predictor=PredictorSpec()):
    x_new = np.asarray(x_new, dtype=float).ravel()
    if x_new.size != data.p:
        raise ValueError(f"x_new has {x_new.size} entries, data has {data.p} columns")
    r = augmented_residuals(data.x, data.y, x_new, [y_trial], predictor)
    return float(pvalues_from_residuals(r, _scale(data.y, y_trial))[0])


def _scale(y, *extra):
    return float(np.abs(np.append(y, extra)).max()) if len(y) or extra else 0.0


def point_forecast(data, x_new, predictor):
    """Fit on the training rows only; returns (forecast at x_new, training residuals)."""
    x_new = np.asarray(x_new, dtype=float).ravel()
    if predictor.kind in ("ols_full", "ols_subset"):
        a = _design(data.x, predictor)
        coef = np.linalg.lstsq(a, data.y, rcond=None)[0]
        fc = float(_design(x_new.reshape(1, -1), predictor)[0] @ coef)
        return fc, data.y - a @ coef
    if predictor.kind == "lasso":
        beta, b0 = lasso_fit(data, predictor.lam)
        return float(x_new @ beta + b0), data.y - data.x @ beta - b0
    if predictor.kind == "custom":
        pred = np.asarray(predictor.fit(data.x, data.y, np.vstack([data.x, x_new])), dtype=float)
        return float(pred[-1]), data.y - pred[:-1]
    raise ValueError(f"unknown predictor kind {predictor.kind!r}")


def conformal_interval(data, x_new, alpha=0.1, predictor=PredictorSpec(), grid=GridSpec()):
    """Prediction interval for the response at ``x_new`` by grid inversion.

    The grid is centered at the point forecast with initial half-width
    3 * (max |training residual| + sd of training residuals) and is doubled
    until p(y) < alpha at both ends, at most ``grid.max_doublings`` times.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    x_new = np.asarray(x_new, dtype=float).ravel()
    if x_new.size != data.p:
        raise ValueError(f"x_new has {x_new.size} entries, data has {data.p} columns")
    center, resid = point_forecast(data, x_new, predictor)
    if grid.half_width is not None:
        h = float(grid.half_width)
    else:
        sd = resid.std(ddof=1) if resid.size > 1 else 0.0
        h = 3.0 * (np.abs(resid).max() + sd)
    h = max(h, 1e-8 * max(1.0, abs(center)))
    pts = grid.points | 1
    unit = np.linspace(-1.0, 1.0, pts)
    for d in range(grid.max_doublings + 1):
        ys = center + h * unit
        pv = pvalues_from_residuals(augmented_residuals(data.x, data.y, x_new, ys, predictor),
                                    _scale(data.y, center))
        if pv[0] < alpha and pv[-1] < alpha:
            break
        if d < grid.max_doublings:
            h *= 2.0
    acc = pv >= alpha
    step = ys[1] - ys[0]
    if acc.any():
        lo, hi, empty = ys[acc].min() - step, ys[acc].max() + step, False
    else:
        lo = hi = center
        empty = True
    res = ConformalResult(ys, pv, float(lo), float(hi), alpha, x_new, center, h, d, float(step),
                          empty)
    if pv[0] >= alpha or pv[-1] >= alpha:
        raise UnboundedInterval(res)
    return res


def path_intervals(data, x_new, alpha, lambdas, grid=GridSpec()):
    """Conformal interval for every penalty; None where it is unbounded."""

    def one(lam):
        try:
            return conformal_interval(data, x_new, alpha, PredictorSpec.lasso(lam), grid)
        except UnboundedInterval:
            return None

    return pmap(one, np.asarray(lambdas, dtype=float))


def choose_lambda_by_length(data, x_new, alpha, path, grid=GridSpec(), results=None):
    """Pick the path penalty whose conformal interval at ``x_new`` is shortest.

    Ties go to the larger penalty. Returns (lambda, ConformalResult).
    """
    lambdas = np.asarray(path.lambdas, dtype=float)
    if lambdas.size == 0:
        raise ValueError("empty lambda path")
    if results is None:
        results = path_intervals(data, x_new, alpha, lambdas, grid)
    lengths = np.array([np.inf if r is None else r.length for r in results])
    if not np.isfinite(lengths).any():
        raise NoFiniteInterval(f"no penalty on the path gives a bounded interval at alpha={alpha}")
    order = np.argsort(-lambdas, kind="stable")
    k = order[np.argmin(lengths[order])]
    return float(lambdas[k]), results[k]


def variable_effect_lengths(data, x_new, alpha, subset, grid=GridSpec()):
    """Change in interval length when each variable of ``subset`` is dropped.

    Positive values mean the interval widens without the variable.
    """
    subset = tuple(int(j) for j in subset)
    if not subset:
        raise ValueError("subset must be nonempty")

    def length(s, tag):
        try:
            return conformal_interval(data, x_new, alpha, PredictorSpec.ols_subset(s), grid).length
        except ConformalError as exc:
            raise ConformalError(f"variable {tag}: {exc}") from exc

    base = length(subset, "(full subset)")
    out = {}
    for j in subset:
        out[j] = length(tuple(k for k in subset if k != j), j) - base
    return out
