"""Balanced panel container, per-unit sample moments and split-panel rules."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateVariance, InvalidInput, InvalidLag, PanelTooShort

MIN_T = {"half": 4, "thirds": 6}


@dataclass(frozen=True)
class Panel:
    """Balanced ``N x T`` panel with unit and time labels.

    ``values[i, t]`` is the observation of unit ``i`` at period ``t``.
    Time labels must be strictly increasing.
    """

    values: np.ndarray
    unit_ids: tuple = field(default=None)
    time_ids: tuple = field(default=None)

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim == 1:
            values = values[None, :]
        if values.ndim != 2:
            raise InvalidInput("panel values must be a 2-d array")
        n, t = values.shape
        if n < 1 or t < 2:
            raise InvalidInput(f"panel needs N >= 1 and T >= 2, got N={n}, T={t}")
        if not np.all(np.isfinite(values)):
            raise InvalidInput("panel contains missing or non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

        unit_ids = tuple(range(n)) if self.unit_ids is None else tuple(self.unit_ids)
        time_ids = tuple(range(t)) if self.time_ids is None else tuple(self.time_ids)
        if len(unit_ids) != n:
            raise InvalidInput(f"expected {n} unit ids, got {len(unit_ids)}")
        if len(time_ids) != t:
            raise InvalidInput(f"expected {t} time ids, got {len(time_ids)}")
        if any(not a < b for a, b in zip(time_ids, time_ids[1:])):
            raise InvalidInput("time ids must be strictly increasing")
        object.__setattr__(self, "unit_ids", unit_ids)
        object.__setattr__(self, "time_ids", time_ids)

    @property
    def n_units(self) -> int:
        return self.values.shape[0]

    @property
    def n_periods(self) -> int:
        return self.values.shape[1]

    def window(self, start: int, stop: int) -> "Panel":
        """Sub-panel over periods ``start <= t < stop`` (0-based)."""
        return Panel(self.values[:, start:stop], self.unit_ids, self.time_ids[start:stop])

    def take_units(self, index) -> "Panel":
        index = np.asarray(index)
        return Panel(self.values[index], [self.unit_ids[i] for i in index], self.time_ids)


def _as_series(series) -> np.ndarray:
    y = np.asarray(series, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise InvalidInput("series must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(y)):
        raise InvalidInput("series contains non-finite values")
    return y


def unit_mean(series) -> float:
    return float(np.mean(_as_series(series)))


def unit_autocov(series, k: int) -> float:
    """Lag-``k`` sample autocovariance with divisor ``T - k``.

    Both factors are demeaned by the full-sample mean.
    """
    y = _as_series(series)
    n = y.size
    if not 0 <= k < n:
        raise InvalidLag(f"lag {k} outside [0, {n - 1}]")
    # a constant series has exactly zero deviations (the float mean may not)
    d = np.zeros_like(y) if y.min() == y.max() else y - y.mean()
    return float(np.dot(d[k:], d[: n - k]) / (n - k))


def unit_autocorr(series, k: int) -> float:
    y = _as_series(series)
    if not 1 <= k < y.size:
        raise InvalidLag(f"lag {k} outside [1, {y.size - 1}]")
    g0 = unit_autocov(y, 0)
    if g0 == 0.0:
        raise DegenerateVariance("series has zero sample variance")
    return unit_autocov(y, k) / g0


@dataclass(frozen=True)
class UnitStats:
    """Per-unit estimates for a batch of ``N`` units (struct of arrays).

    Attributes
    ----------
    mu : (N,) sample means
    gamma : (N, K+1) sample autocovariances for lags 0..K
    rho : (N, K) sample autocorrelations for lags 1..K; NaN for degenerate units
    degenerate : (N,) True where ``gamma[:, 0] == 0``
    """

    mu: np.ndarray
    gamma: np.ndarray
    rho: np.ndarray
    degenerate: np.ndarray

    @property
    def max_lag(self) -> int:
        return self.gamma.shape[1] - 1

    def __len__(self) -> int:
        return self.mu.shape[0]

    def __getitem__(self, index) -> "UnitStats":
        index = np.atleast_1d(np.asarray(index))
        return UnitStats(self.mu[index], self.gamma[index], self.rho[index],
                         self.degenerate[index])

    @property
    def n_degenerate(self) -> int:
        return int(np.count_nonzero(self.degenerate))

    def quantity(self, name: str, lag: int = 0) -> np.ndarray:
        """Column for ``mu``, ``gamma`` (lag >= 0) or ``rho`` (lag >= 1)."""
        if name == "mu":
            return self.mu
        if name == "gamma":
            if not 0 <= lag <= self.max_lag:
                raise InvalidLag(f"gamma lag {lag} not computed (max_lag={self.max_lag})")
            return self.gamma[:, lag]
        if name == "rho":
            if not 1 <= lag <= self.max_lag:
                raise InvalidLag(f"rho lag {lag} not computed (max_lag={self.max_lag})")
            return self.rho[:, lag - 1]
        raise InvalidInput(f"unknown quantity {name!r}")


def autocov_matrix(values: np.ndarray, max_lag: int) -> np.ndarray:
    """Row-wise sample autocovariances, shape ``(N, max_lag + 1)``."""
    t = values.shape[1]
    if not 0 <= max_lag < t:
        raise InvalidLag(f"max_lag {max_lag} outside [0, {t - 1}]")
    dev = values - values.mean(axis=1, keepdims=True)
    dev[values.min(axis=1) == values.max(axis=1)] = 0.0
    out = np.empty((values.shape[0], max_lag + 1))
    for k in range(max_lag + 1):
        out[:, k] = np.einsum("ij,ij->i", dev[:, k:], dev[:, : t - k]) / (t - k)
    return out


def compute_unit_stats(panel: Panel | np.ndarray, max_lag: int = 1) -> UnitStats:
    values = panel.values if isinstance(panel, Panel) else np.atleast_2d(np.asarray(panel, float))
    gamma = autocov_matrix(values, max_lag)
    mu = values.mean(axis=1)
    degenerate = gamma[:, 0] == 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = gamma[:, 1:] / gamma[:, :1]
    rho[degenerate] = np.nan
    return UnitStats(mu, gamma, rho, degenerate)


@dataclass(frozen=True)
class SplitScheme:
    """Subpanel layout: groups of 0-based half-open ``(start, stop)`` windows.

    Each group partitions the full period range.  ``half-even`` has one group
    of two halves; ``half-odd-fourway`` has a ceil-split and a floor-split
    group; ``thirds`` has one group of three blocks, or three rotations of the
    uneven block lengths when ``T`` is not a multiple of 3.
    """

    kind: str
    segments: tuple

    @property
    def windows(self) -> list:
        return [w for group in self.segments for w in group]


def _blocks(lengths: Sequence[int]) -> tuple:
    edges = np.concatenate([[0], np.cumsum(lengths)])
    return tuple((int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]))


def split_scheme(n_periods: int, kind: str) -> SplitScheme:
    t = n_periods
    if kind not in MIN_T:
        raise InvalidInput(f"unknown split kind {kind!r}")
    if t < MIN_T[kind]:
        raise PanelTooShort(f"{kind} split needs T >= {MIN_T[kind]}, got T={t}")
    if kind == "half":
        if t % 2 == 0:
            return SplitScheme("half-even", (_blocks([t // 2, t // 2]),))
        hi, lo = (t + 1) // 2, t // 2
        return SplitScheme("half-odd-fourway", (_blocks([hi, t - hi]), _blocks([lo, t - lo])))
    m, r = divmod(t, 3)
    if r == 0:
        return SplitScheme("thirds", (_blocks([m, m, m]),))
    base = [m + 1] * r + [m] * (3 - r)
    rotations = tuple(_blocks(np.roll(base, s)) for s in range(3))
    return SplitScheme("thirds", rotations)


def split_panel(panel: Panel, kind: str) -> list:
    """Subpanels grouped as in :func:`split_scheme` (list of lists of Panel)."""
    scheme = split_scheme(panel.n_periods, kind)
    return [[panel.window(a, b) for a, b in group] for group in scheme.segments]
