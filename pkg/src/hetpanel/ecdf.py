"""Empirical CDF, inf-form quantiles and the two-sample Kolmogorov-Smirnov test."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput

KOLMOGOROV_TOL = 1e-12
KOLMOGOROV_MAX_TERMS = 1000
THETA_CUTOFF = 1.0


@dataclass(frozen=True)
class Ecdf:
    sorted_values: np.ndarray
    n: int

    def __call__(self, a):
        return ecdf_eval(self, a)


def ecdf_build(values) -> Ecdf:
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        raise InvalidInput("cannot build an empirical CDF from an empty sample")
    if not np.all(np.isfinite(x)):
        raise InvalidInput("empirical CDF input must be finite")
    x = np.sort(x)
    x.setflags(write=False)
    return Ecdf(x, x.size)


def ecdf_eval(ecdf: Ecdf, a):
    """Fraction of sample values ``<= a``; vectorised over ``a``."""
    counts = np.searchsorted(ecdf.sorted_values, a, side="right")
    out = counts / ecdf.n
    return float(out) if np.ndim(out) == 0 else out


def quantile_rank(n: int, tau: float) -> int:
    """Smallest ``k`` in ``1..n`` with ``k / n >= tau``."""
    if not 0.0 < tau <= 1.0:
        raise InvalidInput(f"quantile level must lie in (0, 1], got {tau}")
    k = max(1, min(n, math.ceil(tau * n)))
    # guard against tau * n landing just above an integer
    while k > 1 and (k - 1) / n >= tau:
        k -= 1
    while k / n < tau:
        k += 1
    return k


def quantile(ecdf: Ecdf, tau: float) -> float:
    """``inf{a : F(a) >= tau}`` without interpolation."""
    return float(ecdf.sorted_values[quantile_rank(ecdf.n, tau) - 1])


def sample_quantile(values, tau: float) -> float:
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        raise InvalidInput("cannot take a quantile of an empty sample")
    k = quantile_rank(x.size, tau)
    return float(np.partition(x, k - 1)[k - 1])


def _kolmogorov_theta(a: float) -> float:
    # Jacobi-transformed series; converges fast where the alternating one does not
    c = -(math.pi ** 2) / (8.0 * a * a)
    total = 0.0
    for j in range(1, KOLMOGOROV_MAX_TERMS + 1):
        term = math.exp(c * (2 * j - 1) ** 2)
        total += term
        if term < KOLMOGOROV_TOL:
            break
    return math.sqrt(2.0 * math.pi) / a * total


def kolmogorov_cdf(a: float) -> float:
    """Limiting CDF of the scaled KS statistic, ``1 - 2 sum (-1)^(j-1) exp(-2 j^2 a^2)``.

    The alternating series is summed until the next term drops below 1e-12
    (at most 1000 terms).  For ``a < 1`` it cancels many terms near 1/2
    down to a tiny value and loses ~1e-12 absolute accuracy, enough to
    break monotonicity, so there the equivalent theta-function form is used.
    """
    a = float(a)
    if a <= 0.0:
        return 0.0
    if a < THETA_CUTOFF:
        return min(1.0, max(0.0, _kolmogorov_theta(a)))
    total = 0.0
    converged = False
    for j in range(1, KOLMOGOROV_MAX_TERMS + 1):
        term = math.exp(-2.0 * j * j * a * a)
        total += term if j % 2 else -term
        if math.exp(-2.0 * (j + 1) ** 2 * a * a) < KOLMOGOROV_TOL:
            converged = True
            break
    value = 1.0 - 2.0 * total if converged else _kolmogorov_theta(a)
    return min(1.0, max(0.0, value))


@dataclass(frozen=True)
class KsResult:
    statistic: float
    raw_sup: float
    p_value: float
    n1: int
    n2: int

    def to_dict(self) -> dict:
        return {"statistic": self.statistic, "raw_sup": self.raw_sup,
                "p_value": self.p_value, "n1": self.n1, "n2": self.n2}


def sup_distance(a: Ecdf, b: Ecdf) -> float:
    """Exact ``sup |F_a - F_b|``, checked at every jump and its left limit."""
    points = np.union1d(a.sorted_values, b.sorted_values)
    right = np.abs(np.searchsorted(a.sorted_values, points, side="right") / a.n
                   - np.searchsorted(b.sorted_values, points, side="right") / b.n)
    left = np.abs(np.searchsorted(a.sorted_values, points, side="left") / a.n
                  - np.searchsorted(b.sorted_values, points, side="left") / b.n)
    return float(max(right.max(), left.max()))


def ks_two_sample(group_a, group_b) -> KsResult:
    fa, fb = ecdf_build(group_a), ecdf_build(group_b)
    raw = sup_distance(fa, fb)
    stat = math.sqrt(fa.n * fb.n / (fa.n + fb.n)) * raw
    p = 1.0 if stat == 0.0 else 1.0 - kolmogorov_cdf(stat)
    return KsResult(stat, raw, p, fa.n, fb.n)
