"""Split-sample inference after selection.

Select on the first half, then use the second half, conditionally on the
first, to estimate and bound:

* the predictive risk R of the selected predictor,
* the risk inflation R_j from zeroing each selected coefficient,
* the projected parameter, the least-squares coefficients on the selected columns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import data as data_mod
from .selectors import SelectedModel, SelectorSpec, select
from .stats import median_ci_ranks, z_two_sided


class HarnessError(RuntimeError):
    pass


class InfeasibleLevel(HarnessError):
    pass


class EmptySelection(HarnessError):
    pass


class SingularDesign(HarnessError):
    def __init__(self, cond):
        self.cond = cond
        super().__init__(f"second-half design is singular (condition number {cond:.3g})")


class TooFewRows(HarnessError):
    pass


class StageError(RuntimeError):
    """Failure inside ``run_harness``, tagged with the pipeline stage."""

    def __init__(self, stage, cause):
        self.stage, self.cause = stage, cause
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")


@dataclass(frozen=True)
class IntervalReport:
    label: str
    estimate: float
    lower: float
    upper: float
    level: float
    correction: str = "none"  # "none" or "bonferroni(k)"
    method: str = "normal"  # normal | order_statistic | least_squares

    def __post_init__(self):
        if not 0.0 < self.level < 1.0:
            raise ValueError(f"level must lie in (0, 1), got {self.level}")
        if not self.lower <= self.estimate <= self.upper:
            raise ValueError(f"{self.label}: need lower <= estimate <= upper, got "
                             f"{self.lower}, {self.estimate}, {self.upper}")

    @property
    def width(self):
        return self.upper - self.lower

    def contains(self, value):
        return self.lower <= value <= self.upper


@dataclass(frozen=True, eq=False)
class RiskReport:
    risk: IntervalReport
    deltas: np.ndarray
    scale: str
    null_risk: IntervalReport
    null_deltas: np.ndarray


@dataclass(frozen=True, eq=False)
class InflationReport:
    per_variable: dict  # column index -> IntervalReport
    e_values: dict  # column index -> np.ndarray


@dataclass(frozen=True, eq=False)
class ProjectedReport:
    beta_star_hat: np.ndarray  # intercept first, then the subset in model order
    intervals: list
    covariance: np.ndarray
    labels: tuple
    subset: tuple


@dataclass(frozen=True, eq=False)
class HarnessResult:
    split: data_mod.SplitPair
    model: SelectedModel
    risk: RiskReport
    inflation: InflationReport | None
    projected: ProjectedReport
    standardization: data_mod.StandardizationRecord | None = None

    def __iter__(self):
        return iter((self.split, self.model, self.risk, self.inflation, self.projected))


@dataclass
class HarnessConfig:
    alpha: float = 0.05
    bonferroni: bool = True
    risk_scale: str = "absolute"
    covariance: str = "robust"
    standardize: bool = True
    coefficients: str = "d1"  # "d2" refits the selected columns on the second half


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")


def _loss(resid, scale):
    if scale == "absolute":
        return np.abs(resid)
    if scale == "squared":
        return resid * resid
    raise ValueError(f"unknown risk scale {scale!r}")


def normal_interval(values, alpha, label, correction="none"):
    """Mean +- z_{alpha/2} * sd / sqrt(m), sd with divisor m - 1."""
    _check_alpha(alpha)
    values = np.asarray(values, dtype=float)
    m = values.size
    est = float(values.mean())
    s = float(values.std(ddof=1)) if m > 1 else 0.0
    half = z_two_sided(alpha) * s / np.sqrt(m)
    return IntervalReport(label, est, est - half, est + half, 1.0 - alpha, correction, "normal")


def risk_interval(d2, model, alpha=0.05, scale="absolute"):
    """Normal-approximation interval for the predictive risk on the second half.

    The null model predicts the first-half response mean everywhere.
    """
    _check_alpha(alpha)
    deltas = _loss(d2.y - model.predict(d2.x), scale)
    null_deltas = _loss(d2.y - model.null_intercept, scale)
    return RiskReport(
        normal_interval(deltas, alpha, "R"),
        deltas,
        scale,
        normal_interval(null_deltas, alpha, "R_null"),
        null_deltas,
    )


def median_risk_interval(d2, model, alpha=0.05, scale="absolute"):
    """Distribution-free interval for the median loss from order statistics."""
    _check_alpha(alpha)
    deltas = np.sort(_loss(d2.y - model.predict(d2.x), scale))
    ranks = median_ci_ranks(deltas.size, alpha)
    if ranks is None:
        raise InfeasibleLevel(
            f"{deltas.size} points cannot give a two-sided {1 - alpha:.4g} interval for the median")
    lo, hi, _ = ranks
    return IntervalReport("R_median", float(np.median(deltas)), float(deltas[lo - 1]),
                          float(deltas[hi - 1]), 1.0 - alpha, "none", "order_statistic")


def risk_inflation(d2, model, alpha=0.05, bonferroni=True, scale="absolute"):
    """Increase in second-half loss when each selected coefficient is zeroed."""
    _check_alpha(alpha)
    if not model.subset:
        raise EmptySelection("risk inflation needs a nonempty selected subset")
    k = len(model.subset)
    level_alpha = alpha / k if bonferroni else alpha
    corr = f"bonferroni({k})" if bonferroni else "none"
    fitted = model.predict(d2.x)
    base = _loss(d2.y - fitted, scale)
    per_var, e_values = {}, {}
    for j in model.subset:
        dropped = fitted - d2.x[:, j] * model.beta_hat[j]
        e = _loss(d2.y - dropped, scale) - base
        if model.beta_hat[j] == 0.0:
            e = np.zeros_like(e)
        e_values[j] = e
        per_var[j] = normal_interval(e, level_alpha, model.names[j], corr)
    return InflationReport(per_var, e_values)


def projected_params(d2, model, alpha=0.05, bonferroni=True, covariance="robust", max_cond=1e12):
    """Least squares of y on [1, X_S] using the second half only.

    ``covariance="robust"`` gives the sandwich (A'A)^-1 (sum a_i a_i' e_i^2) (A'A)^-1,
    valid without a correct linear model; ``"classical"`` gives s^2 (A'A)^-1.
    Bonferroni divides alpha by |S| (or 1 for the intercept-only fit).
    """
    _check_alpha(alpha)
    cols = list(model.subset)
    m2 = d2.n
    if len(cols) + 1 >= m2:
        raise TooFewRows(f"{len(cols) + 1} coefficients need more than {m2} rows")
    a = np.column_stack([np.ones(m2), d2.x[:, cols]])
    ata = a.T @ a
    cond = np.linalg.cond(ata)
    if not cond < max_cond:
        raise SingularDesign(cond)
    ata_inv = np.linalg.inv(ata)
    beta = ata_inv @ (a.T @ d2.y)
    resid = d2.y - a @ beta
    if covariance == "robust":
        meat = (a * (resid ** 2)[:, None]).T @ a
        cov = ata_inv @ meat @ ata_inv
    elif covariance == "classical":
        cov = ata_inv * (resid @ resid) / (m2 - a.shape[1])
    else:
        raise ValueError(f"unknown covariance {covariance!r}")
    cov = 0.5 * (cov + cov.T)
    k = max(len(cols), 1)
    level_alpha = alpha / k if bonferroni else alpha
    corr = f"bonferroni({k})" if bonferroni else "none"
    z = z_two_sided(level_alpha)
    labels = ("(Intercept)",) + tuple(model.names[j] for j in cols)
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    intervals = [
        IntervalReport(lab, float(b), float(b - z * s), float(b + z * s), 1.0 - level_alpha, corr,
                       "least_squares")
        for lab, b, s in zip(labels, beta, se)
    ]
    return ProjectedReport(beta, intervals, cov, labels, tuple(cols))


def _refit_on(d2, model):
    cols = list(model.subset)
    a = np.column_stack([np.ones(d2.n), d2.x[:, cols]])
    coef = np.linalg.lstsq(a, d2.y, rcond=None)[0]
    beta = np.zeros(d2.p)
    beta[cols] = coef[1:]
    diag = dict(model.diagnostics, coefficients="d2")
    return SelectedModel(model.subset, beta, coef[0], model.selector_id, model.names,
                         model.null_intercept, diag)


def run_harness(data, spec=None, alpha=0.05, seed=0, config=None):
    """Split, select on the first half, infer on the second.

    Returns a ``HarnessResult`` (iterable as split, model, risk, inflation,
    projected). ``inflation`` is None when nothing was selected.
    """
    spec = SelectorSpec() if spec is None else spec
    config = HarnessConfig(alpha=alpha) if config is None else config
    alpha = config.alpha
    stage = "split"
    try:
        pair = data_mod.split(data, seed)
        d1, d2, rec = pair.d1, pair.d2, None
        if config.standardize:
            stage = "standardize"
            d1, d2, rec = data_mod.standardize(d1, d2)
        stage = "select"
        model = select(d1, spec)
        if config.coefficients == "d2":
            model = _refit_on(d2, model)
        stage = "risk"
        risk = risk_interval(d2, model, alpha, config.risk_scale)
        stage = "inflation"
        inflation = (risk_inflation(d2, model, alpha, config.bonferroni, config.risk_scale)
                     if model.subset else None)
        stage = "projected"
        projected = projected_params(d2, model, alpha, config.bonferroni, config.covariance)
    except (data_mod.DataError, HarnessError, ArithmeticError, RuntimeError,
            np.linalg.LinAlgError) as exc:
        raise StageError(stage, exc) from exc
    # keep the standardized halves so callers see exactly what was analysed
    pair = data_mod.SplitPair(d1, d2, pair.seed, pair.permutation)
    return HarnessResult(pair, model, risk, inflation, projected, rec)
