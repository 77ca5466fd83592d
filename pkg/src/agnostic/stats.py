"""Small distributional helpers: normal quantiles and order-statistic ranks."""

import math

from scipy.stats import binom

# Acklam's rational approximation to the inverse normal CDF.
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def norm_cdf(x):
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def norm_ppf(q):
    """Inverse standard normal CDF, accurate to about 1e-15 in the bulk.

    Rational approximation (relative error ~1e-9) followed by one Halley step.
    """
    if not 0.0 < q < 1.0:
        raise ValueError(f"quantile level must lie in (0, 1), got {q}")
    if q < _P_LOW:
        t = math.sqrt(-2.0 * math.log(q))
        x = (((((_C[0] * t + _C[1]) * t + _C[2]) * t + _C[3]) * t + _C[4]) * t + _C[5]) / \
            ((((_D[0] * t + _D[1]) * t + _D[2]) * t + _D[3]) * t + 1.0)
    elif q <= 1.0 - _P_LOW:
        s = q - 0.5
        r = s * s
        x = (((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * s / \
            (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0)
    else:
        t = math.sqrt(-2.0 * math.log1p(-q))
        x = -(((((_C[0] * t + _C[1]) * t + _C[2]) * t + _C[3]) * t + _C[4]) * t + _C[5]) / \
            ((((_D[0] * t + _D[1]) * t + _D[2]) * t + _D[3]) * t + 1.0)
    # refinement against the erfc-based CDF
    e = norm_cdf(x) - q
    u = e * math.sqrt(2.0 * math.pi) * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def z_two_sided(alpha):
    """z such that P(|Z| > z) = alpha."""
    return -norm_ppf(alpha / 2.0)


def median_ci_ranks(m, alpha):
    """Symmetric 1-based ranks (l, m + 1 - l) bracketing the median.

    Picks the largest l with P(l <= Bin(m, 1/2) <= m - l) >= 1 - alpha and
    returns (l, u, coverage), or None when even (1, m) falls short.
    """
    best = None
    for l in range(1, m // 2 + 1):
        cov = 1.0 - 2.0 * binom.cdf(l - 1, m, 0.5)
        if cov < 1.0 - alpha:
            break
        best = (l, m + 1 - l, float(cov))
    return best
