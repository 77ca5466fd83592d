"""Variable selection on the first half: forward stepwise + Mallows Cp, and the lasso.

All lasso solvers work on the Gram form

    0.5 * b' G b - c' b + lam * ||b||_1,    G = X'X / m,  c = X'y / m

which equals (1/(2m)) ||y - X b||^2 + lam ||b||_1 up to a constant. Once G and c
are formed the cost no longer depends on m.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .data import DataError

CD_TOL = 1e-8
CD_MAX_SWEEPS = 10_000


class SelectionError(RuntimeError):
    """Numerical failure inside a selector (CLI exit status 2)."""


class ConvergenceError(SelectionError):
    def __init__(self, lam, index=None):
        self.lam, self.index = lam, index
        where = f" (path index {index})" if index is not None else ""
        super().__init__(f"coordinate descent did not converge at lambda={lam:.6g}{where}")


class BisectionError(SelectionError):
    pass


class SigmaUnavailable(SelectionError):
    pass


class UnknownSelector(KeyError):
    pass


@dataclass(frozen=True, eq=False)
class SelectedModel:
    """Selected subset, coefficients over all p columns, and provenance."""

    subset: tuple
    beta_hat: np.ndarray
    intercept: float
    selector_id: str
    names: tuple
    null_intercept: float = 0.0
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        subset = tuple(int(j) for j in self.subset)
        beta = np.array(self.beta_hat, dtype=float)
        if len(set(subset)) != len(subset):
            raise ValueError(f"duplicate indices in subset {subset}")
        if any(j < 0 or j >= beta.size for j in subset):
            raise ValueError(f"subset {subset} out of range for p={beta.size}")
        off = np.ones(beta.size, bool)
        off[list(subset)] = False
        if np.any(beta[off] != 0.0):
            raise ValueError("beta_hat must be exactly zero outside the subset")
        beta.flags.writeable = False
        object.__setattr__(self, "subset", subset)
        object.__setattr__(self, "beta_hat", beta)
        object.__setattr__(self, "intercept", float(self.intercept))
        object.__setattr__(self, "names", tuple(self.names))

    @property
    def selected_names(self):
        return [self.names[j] for j in self.subset]

    def predict(self, x):
        return np.asarray(x) @ self.beta_hat + self.intercept


@dataclass(frozen=True, eq=False)
class LassoPath:
    lambdas: np.ndarray
    betas: np.ndarray  # (K, p)
    intercepts: np.ndarray
    l1_norms: np.ndarray
    sweeps: np.ndarray


@dataclass(frozen=True, eq=False)
class CpTrace:
    steps: np.ndarray
    rss: np.ndarray
    cp: np.ndarray
    sigma2_hat: float
    order: tuple  # column index added at each step
    sigma2_source: str
    best_k: int


@dataclass
class SelectorSpec:
    """Selector configuration.

    ``lambda_rule`` applies to ``kind="lasso"``: ``"cv"`` (10-fold CV error),
    ``"conformal"`` (shortest conformal interval at the column means), or
    ``"fixed"`` (use ``lam``). Setting ``l1_budget`` switches the lasso to the
    constrained, intercept-free form.
    """

    kind: str = "stepwise"
    max_steps: int | None = None
    sigma2: float | None = None
    lam: float | None = None
    lambda_rule: str = "cv"
    k_lambdas: int = 100
    lambda_min_ratio: float = 1e-3
    l1_budget: float | None = None
    alpha: float = 0.1
    grid_points: int = 200
    seed: int = 0


# --------------------------------------------------------------------------
# coordinate descent kernels


@njit(cache=True, nogil=True)
def _soft(z, t):
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


@njit(cache=True, nogil=True)
def _cd_gram(G, c, lam, beta, tol, max_sweeps):
    """In-place CD on beta; returns the sweep count, or -1 on hitting the cap."""
    p = c.shape[0]
    q = G @ beta
    for sweep in range(max_sweeps):
        max_step = 0.0
        for j in range(p):
            gjj = G[j, j]
            old = beta[j]
            if gjj <= 0.0:
                new = 0.0
            else:
                new = _soft(c[j] - q[j] + gjj * old, lam) / gjj
            d = new - old
            if d != 0.0:
                for k in range(p):
                    q[k] += d * G[k, j]
                beta[j] = new
                if abs(d) > max_step:
                    max_step = abs(d)
        if max_step < tol:
            return sweep + 1
    return -1


@njit(cache=True, nogil=True)
def _cd_grid(G, c0, v, ys, lam, beta0, tol, max_sweeps, out):
    """Solve one problem per entry of ``ys`` with linear term c0 + v * y.

    Each solve cold-starts from ``beta0`` so the results do not depend on the
    order of ``ys``. Returns the number of solves that hit the sweep cap.
    """
    failures = 0
    for g in range(ys.shape[0]):
        c = c0 + v * ys[g]
        b = beta0.copy()
        if _cd_gram(G, c, lam, b, tol, max_sweeps) < 0:
            failures += 1
        out[g, :] = b
    return failures


def gram(x, y):
    m = x.shape[0]
    return x.T @ x / m, x.T @ y / m


def lasso_gram(G, c, lam, beta0=None, tol=CD_TOL, max_sweeps=CD_MAX_SWEEPS, index=None):
    beta = np.zeros(c.shape[0]) if beta0 is None else np.array(beta0, dtype=float)
    sweeps = _cd_gram(np.ascontiguousarray(G), np.asarray(c, dtype=float), float(lam), beta,
                      tol, max_sweeps)
    if sweeps < 0:
        raise ConvergenceError(lam, index)
    return beta, sweeps


def lasso_objective(x, y, beta, lam=0.0, intercept=0.0):
    r = y - x @ beta - intercept
    return 0.5 * r @ r / x.shape[0] + lam * np.abs(beta).sum()


def _centered(data, intercept):
    if not intercept:
        return data.x, data.y, np.zeros(data.p), 0.0
    xm, ym = data.x.mean(axis=0), data.y.mean()
    return data.x - xm, data.y - ym, xm, ym


def lambda_max(data, intercept=True):
    x, y, _, _ = _centered(data, intercept)
    return float(np.max(np.abs(x.T @ y)) / data.n)


def lambda_grid(lam_max, k_lambdas=100, lambda_min_ratio=1e-3):
    if k_lambdas < 2:
        raise ValueError("k_lambdas must be >= 2")
    if not 0 < lambda_min_ratio < 1:
        raise ValueError("lambda_min_ratio must lie in (0, 1)")
    lam_max = max(lam_max, np.finfo(float).tiny)
    return lam_max * np.logspace(0.0, np.log10(lambda_min_ratio), k_lambdas)


def lasso_fit(data, lam, intercept=True, beta0=None, tol=CD_TOL):
    """Single-lambda penalized fit; returns (beta, intercept)."""
    x, y, xm, ym = _centered(data, intercept)
    G, c = gram(x, y)
    beta, _ = lasso_gram(G, c, lam, beta0, tol=tol)
    return beta, (ym - xm @ beta if intercept else 0.0)


def lasso_path(data, k_lambdas=100, lambda_min_ratio=1e-3, intercept=True, lambdas=None):
    """Penalized lasso over a log-spaced decreasing grid with warm starts.

    The grid starts at lambda_max, the smallest penalty whose solution is
    identically zero. Pass ``lambdas`` to reuse an existing grid.
    """
    x, y, xm, ym = _centered(data, intercept)
    G, c = gram(x, y)
    if lambdas is None:
        lambdas = lambda_grid(float(np.max(np.abs(c))), k_lambdas, lambda_min_ratio)
    lambdas = np.asarray(lambdas, dtype=float)
    betas = np.zeros((lambdas.size, data.p))
    sweeps = np.zeros(lambdas.size, dtype=int)
    beta = np.zeros(data.p)
    for k, lam in enumerate(lambdas):
        beta, sweeps[k] = lasso_gram(G, c, lam, beta, index=k)
        betas[k] = beta
    intercepts = ym - betas @ xm if intercept else np.zeros(lambdas.size)
    return LassoPath(lambdas, betas, intercepts, np.abs(betas).sum(axis=1), sweeps)


def _null_model(data, selector_id, **diag):
    return SelectedModel((), np.zeros(data.p), data.y.mean(), selector_id, data.names,
                         null_intercept=data.y.mean(), diagnostics=diag)


def lasso_constrained(data, l1_budget, tol=1e-10):
    """Least squares over the l1 ball {b : ||b||_1 <= L}, no intercept.

    When the unconstrained least-squares solution already lies in the ball it is
    returned as is. Otherwise the penalty is bisected (geometrically) until the
    penalized solution's l1 norm meets the budget, always keeping the feasible
    end of the bracket.
    """
    L = float(l1_budget)
    if not L > 0:
        raise ValueError(f"l1 budget must be positive, got {l1_budget}")
    G, c = gram(data.x, data.y)
    b_ls = np.linalg.lstsq(data.x, data.y, rcond=None)[0]
    diag = {"l1_budget": L, "binding": False, "lambda": 0.0, "bisection_steps": 0}

    def done(beta, **more):
        nz = np.flatnonzero(beta)
        diag.update(more, l1_norm=float(np.abs(beta).sum()))
        return SelectedModel(tuple(nz), beta, 0.0, "lasso_constrained", data.names,
                             null_intercept=0.0, diagnostics=diag)

    if np.abs(b_ls).sum() <= L:
        return done(b_ls)

    hi = float(np.max(np.abs(c)))
    if hi == 0.0:
        return done(np.zeros(data.p))
    # Walk the penalty down from lambda_max, warm-started, until the solution
    # leaves the ball. With p >= n the small-penalty limit is the minimum-l1
    # interpolant, which may fit inside the ball even though the minimum-l2
    # one does not; then that limit is itself a constrained minimizer.
    b_hi, n_hi = np.zeros(data.p), 0.0
    lo, b_lo = hi, b_hi
    while True:
        lo /= 10.0
        if lo < hi * 1e-10:
            return done(b_lo, **{"lambda": lo * 10.0})
        b_lo, _ = lasso_gram(G, c, lo, b_lo, tol=tol)
        n_lo = np.abs(b_lo).sum()
        if n_lo > L:
            break
        hi, n_hi, b_hi = lo, n_lo, b_lo
    for step in range(400):
        if abs(n_hi - L) <= 1e-8 * max(1.0, L):
            break
        mid = np.sqrt(lo * hi)
        if not lo < mid < hi:
            break
        b_mid, _ = lasso_gram(G, c, mid, b_hi, tol=tol)
        n_mid = np.abs(b_mid).sum()
        if n_mid > n_lo + 1e-6 or n_mid < n_hi - 1e-6:
            raise BisectionError(
                f"l1 norm not monotone in lambda: {n_mid:.9g} outside [{n_hi:.9g}, {n_lo:.9g}]")
        if n_mid > L:
            lo, n_lo = mid, n_mid
        else:
            hi, n_hi, b_hi = mid, n_mid, b_mid
    if abs(n_hi - L) > 1e-6:
        raise BisectionError(f"bisection stalled with l1 norm {n_hi:.9g} for budget {L:.9g}")
    return done(b_hi, binding=True, bisection_steps=step, **{"lambda": hi})


# --------------------------------------------------------------------------
# cross-validation (lambda choice and the sigma^2 fallback for Cp)


def cv_lasso(data, k_lambdas=100, lambda_min_ratio=1e-3, folds=10, seed=0):
    """K-fold CV over the full-data lambda grid; returns (lambdas, cv_mse, best_index)."""
    if data.n < folds:
        raise SigmaUnavailable(f"{folds}-fold CV needs at least {folds} rows, got {data.n}")
    lambdas = lambda_grid(lambda_max(data), k_lambdas, lambda_min_ratio)
    fold_of = np.random.default_rng(seed).permutation(data.n) % folds
    sq_err = np.zeros(lambdas.size)
    for f in range(folds):
        train, test = data.rows(np.flatnonzero(fold_of != f)), data.rows(np.flatnonzero(fold_of == f))
        path = lasso_path(train, lambdas=lambdas)
        pred = path.betas @ test.x.T + path.intercepts[:, None]
        sq_err += ((test.y[None, :] - pred) ** 2).sum(axis=1)
    mse = sq_err / data.n
    return lambdas, mse, int(np.argmin(mse))


# --------------------------------------------------------------------------
# forward stepwise


def _sigma2(data, sigma2):
    if sigma2 is not None:
        if not sigma2 > 0:
            raise ValueError("sigma2 must be positive")
        return float(sigma2), "user"
    m, p = data.n, data.p
    if m > p + 1:
        a = np.column_stack([np.ones(m), data.x])
        r = data.y - a @ np.linalg.lstsq(a, data.y, rcond=None)[0]
        return float(r @ r / (m - p - 1)), "ols"
    _, mse, best = cv_lasso(data)
    return float(mse[best]), "cv_lasso"


def forward_stepwise(data, max_steps=None, sigma2=None):
    """Greedy forward selection with an intercept, stopped by Mallows Cp.

    Each step adds the column with the largest drop in residual sum of squares
    (lowest index on ties). The returned subset is the prefix minimizing
    Cp = RSS_k / sigma2 + 2k - m; sigma2 comes from ``sigma2`` if given,
    otherwise the full OLS fit (m > p + 1), otherwise 10-fold CV lasso error.
    """
    m, p = data.n, data.p
    if m < 3:
        raise DataError(f"forward stepwise needs at least 3 rows, got {m}")
    cap = min(p, m - 2)
    if max_steps is None:
        max_steps = cap
    if not 0 <= max_steps <= cap:
        raise ValueError(f"max_steps must lie in [0, {cap}], got {max_steps}")
    s2, source = _sigma2(data, sigma2)
    tss = float(((data.y - data.y.mean()) ** 2).sum())
    s2 = max(s2, 1e-10 * tss / m, np.finfo(float).tiny)

    x = data.x - data.x.mean(axis=0)
    r = data.y - data.y.mean()
    col_ss = (x * x).sum(axis=0)
    basis = np.zeros((m, 0))
    order, rss = [], [float(r @ r)]
    for _ in range(max_steps):
        z = x - basis @ (basis.T @ x)
        z -= basis @ (basis.T @ z)
        zz = (z * z).sum(axis=0)
        gain = np.zeros(p)
        ok = zz > 1e-10 * np.maximum(col_ss, np.finfo(float).tiny)
        gain[ok] = (z[:, ok].T @ r) ** 2 / zz[ok]
        gain[order] = -1.0
        if not np.any(ok & (gain >= 0)):
            break
        j = int(np.argmax(gain))
        q = z[:, j] / np.sqrt(zz[j])
        basis = np.column_stack([basis, q])
        r = r - q * (q @ r)
        order.append(j)
        rss.append(float(r @ r))
    rss = np.minimum.accumulate(np.array(rss))
    steps = np.arange(rss.size)
    cp = rss / s2 + 2 * steps - m
    best = int(np.argmin(cp))
    subset = tuple(order[:best])
    beta = np.zeros(p)
    a = np.column_stack([np.ones(m), data.x[:, list(subset)]])
    coef = np.linalg.lstsq(a, data.y, rcond=None)[0]
    beta[list(subset)] = coef[1:]
    trace = CpTrace(steps, rss, cp, s2, tuple(order), source, best)
    model = SelectedModel(subset, beta, coef[0], "stepwise", data.names,
                          null_intercept=data.y.mean(), diagnostics={"cp_trace": trace})
    return model, trace


# --------------------------------------------------------------------------
# registry

SELECTORS = {}


def register_selector(name):
    def deco(fn):
        SELECTORS[name] = fn
        return fn
    return deco


@register_selector("stepwise")
def _select_stepwise(data, spec):
    return forward_stepwise(data, spec.max_steps, spec.sigma2)[0]


@register_selector("lasso")
def _select_lasso(data, spec):
    if spec.l1_budget is not None:
        return lasso_constrained(data, spec.l1_budget)
    diag = {"lambda_rule": spec.lambda_rule}
    if spec.lambda_rule == "fixed":
        if spec.lam is None:
            raise ValueError("lambda_rule='fixed' needs lam")
        lam = float(spec.lam)
    elif spec.lambda_rule == "cv":
        lambdas, mse, best = cv_lasso(data, spec.k_lambdas, spec.lambda_min_ratio, seed=spec.seed)
        lam = float(lambdas[best])
        diag["cv_mse"] = mse
    elif spec.lambda_rule == "conformal":
        from .conformal import GridSpec, choose_lambda_by_length

        path = lasso_path(data, spec.k_lambdas, spec.lambda_min_ratio)
        lam, res = choose_lambda_by_length(data, data.x.mean(axis=0), spec.alpha, path,
                                           GridSpec(points=spec.grid_points))
        diag["conformal_length"] = res.length
        diag["path"] = path
    else:
        raise ValueError(f"unknown lambda_rule {spec.lambda_rule!r}")
    beta, b0 = lasso_fit(data, lam)
    nz = tuple(int(j) for j in np.flatnonzero(beta))
    diag["lambda"] = lam
    return SelectedModel(nz, beta, b0, "lasso", data.names, null_intercept=data.y.mean(),
                         diagnostics=diag)


def select(data, spec):
    """Dispatch to a registered selector; ``selector_id`` records which one ran."""
    if isinstance(spec, str):
        spec = SelectorSpec(kind=spec)
    try:
        fn = SELECTORS[spec.kind]
    except KeyError:
        raise UnknownSelector(f"unknown selector {spec.kind!r}; known: {sorted(SELECTORS)}") from None
    return fn(data, spec)
