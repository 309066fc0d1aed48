"""Cross-sectional bootstrap over per-unit estimate tuples.

A draw resamples whole units with replacement, carrying each unit's
full-panel and subpanel estimates together, and recomputes the ED, HPJ and
TOJ statistics.  Draws are evaluated in fixed-size chunks from multinomial
unit counts, which is equivalent to materialising the resampled bundle.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from . import rng
from .ecdf import quantile_rank
from .errors import InvalidInput
from .jackknife import TOJ32_WEIGHTS, JackknifeBundle, correct_bundle
from .stats import QUANTILE_LEVELS, StatisticSpec

KINDS = ("ED", "HPJ", "TOJ", "TOJ32")
INTERVALS = ("basic", "percentile")
CHUNK = 100
MISSING_LIMIT = 0.01


def thread_count(threads: int | None = None) -> int:
    if threads is None:
        threads = int(os.environ.get("HETPANEL_THREADS", "1") or 1)
    return max(1, int(threads))


@dataclass(frozen=True)
class BootstrapConfig:
    B: int = 1000
    seed: int = 0
    level: float = 0.95
    target_estimator: str = "HPJ"
    interval: str = "basic"

    def __post_init__(self):
        if self.interval not in INTERVALS:
            raise InvalidInput(f"unknown interval {self.interval!r}; use one of {INTERVALS}")
        if int(self.B) < 1:
            raise InvalidInput("bootstrap B must be >= 1")
        if not 0.0 < self.level < 1.0:
            raise InvalidInput("confidence level must lie in (0, 1)")
        kind = self.target_estimator.upper()
        if kind not in KINDS:
            raise InvalidInput(f"unknown estimator {self.target_estimator!r}")
        object.__setattr__(self, "target_estimator", kind)
        object.__setattr__(self, "B", int(self.B))


@dataclass
class BootstrapResult:
    point: float
    ci_lower: float
    ci_upper: float
    q_low: float
    q_high: float
    draws: np.ndarray = field(repr=False)
    estimator_kind: str = "HPJ"
    level: float = 0.95
    n_missing: int = 0
    interval: str = "basic"

    @property
    def unreliable(self) -> bool:
        return self.n_missing > MISSING_LIMIT * len(self.draws)


def percentile_interval(point: float, draws, level: float, method: str = "basic"):
    """``(lower, upper, q_low, q_high)`` from the centred draws ``draws - point``.

    ``method="basic"`` reflects the centred quantiles around the point,
    ``[point - q_high, point - q_low]``; ``"percentile"`` uses the draw
    quantiles directly, ``[point + q_low, point + q_high]``.  Missing (NaN)
    draws are ignored.
    """
    if method not in INTERVALS:
        raise InvalidInput(f"unknown interval {method!r}")
    theta = np.sort(np.asarray(draws, dtype=float) - point)
    theta = theta[~np.isnan(theta)]
    if theta.size == 0 or not math.isfinite(point):
        return math.nan, math.nan, math.nan, math.nan
    n = theta.size
    q_low = float(theta[quantile_rank(n, (1.0 - level) / 2.0) - 1])
    q_high = float(theta[quantile_rank(n, (1.0 + level) / 2.0) - 1])
    if method == "percentile":
        return point + q_low, point + q_high, q_low, q_high
    return point - q_high, point - q_low, q_low, q_high


def resample_units(bundle: JackknifeBundle, key: int, draw: int = 0) -> JackknifeBundle:
    """Bootstrap bundle for draw ``draw`` of stream ``key`` (rows kept jointly)."""
    index = rng.uniform_indices(key, [draw], bundle.n_units)[0]
    return bundle.take(index)


def counts_from_index(index: np.ndarray) -> np.ndarray:
    """Per-draw unit multiplicities ``(n_draws, n)`` from an index matrix."""
    n = index.shape[1]
    rows = np.arange(index.shape[0])[:, None] * n
    counts = np.bincount((rows + index).ravel(), minlength=index.size)
    return counts.reshape(index.shape).astype(float)


class _ChunkEvaluator:
    """Evaluates statistics on every group for a block of draws given unit counts."""

    def __init__(self, bundle: JackknifeBundle, index: np.ndarray):
        self.bundle = bundle
        self.groups = bundle.groups
        self.index = index
        self.counts = counts_from_index(index)
        self._masked = {}
        self._cache = {}

    def _weights(self, spec: StatisticSpec):
        mask_key = spec.uses_rho
        if mask_key not in self._masked:
            mask = self.bundle.usable_mask(spec)
            c = self.counts if mask.all() else self.counts[:, mask]
            self._masked[mask_key] = (mask, c, c.sum(axis=1))
        return self._masked[mask_key]

    def _column(self, g: int, q, spec):
        mask, _, _ = self._weights(spec)
        col = self.groups[g].quantity(q.name, q.lag)
        return col if mask.all() else col[mask]

    def _sum(self, g, spec, *qs):
        key = ("sum", g, spec.uses_rho, qs)
        if key not in self._cache:
            _, c, _ = self._weights(spec)
            cols = [self._column(g, q, spec) for q in qs]
            if len(cols) == 1 and len(qs) == 1:
                v = cols[0]
            else:
                v = np.ones_like(cols[0])
                for col in cols:
                    v = v * (col - col[0])
            self._cache[key] = c @ v
        return self._cache[key]

    def _shifted_sum(self, g, spec, q):
        key = ("ssum", g, spec.uses_rho, q)
        if key not in self._cache:
            _, c, _ = self._weights(spec)
            col = self._column(g, q, spec)
            self._cache[key] = c @ (col - col[0])
        return self._cache[key]

    def _comoment(self, g, spec, a, b):
        _, _, n = self._weights(spec)
        return self._sum(g, spec, a, b) / n - self._shifted_sum(g, spec, a) * \
            self._shifted_sum(g, spec, b) / (n * n)

    def _quantile(self, g, spec, q, tau):
        key = ("sorted", g, spec.uses_rho, q)
        mask, c, n = self._weights(spec)
        if key not in self._cache:
            col = self._column(g, q, spec)
            order = np.argsort(col, kind="stable")
            if self.index is not None and mask.all():
                rank = np.empty(order.size, dtype=np.int32)
                rank[order] = np.arange(order.size, dtype=np.int32)
                self._cache[key] = (col[order], np.sort(rank[self.index], axis=1))
            else:
                cum = np.cumsum(c[:, order].astype(np.int64), axis=1)
                self._cache[key] = (col[order], cum)
        values, table = self._cache[key]
        if table.dtype == np.int32:
            k = quantile_rank(int(n[0]), tau)
            return values[table[:, k - 1]]
        out = np.full(n.shape, np.nan)
        for row, m in enumerate(n):
            if m > 0:
                k = quantile_rank(int(m), tau)
                out[row] = values[np.searchsorted(table[row], k, side="left")]
        return out

    def statistic(self, g: int, spec: StatisticSpec) -> np.ndarray:
        _, _, n = self._weights(spec)
        target = spec.target
        with np.errstate(divide="ignore", invalid="ignore"):
            if target == "mean":
                return np.where(n >= 1, self._sum(g, spec, spec.quantities[0]) / n, np.nan)
            if target in QUANTILE_LEVELS:
                return self._quantile(g, spec, spec.quantities[0], QUANTILE_LEVELS[target])
            a = spec.quantities[0]
            if target == "std":
                var = np.maximum(self._comoment(g, spec, a, a), 0.0)
                return np.where(n >= 2, np.sqrt(var), np.nan)
            b = spec.quantities[1]
            va, vb = self._comoment(g, spec, a, a), self._comoment(g, spec, b, b)
            r = np.clip(self._comoment(g, spec, a, b) / np.sqrt(va * vb), -1.0, 1.0)
            return np.where((n >= 2) & (va > 0) & (vb > 0), r, np.nan)

    def estimators(self, spec: StatisticSpec) -> np.ndarray:
        """``(n_draws, 4)`` array of ED, HPJ, TOJ, TOJ32 (NaN without thirds)."""
        b = self.bundle
        ed = self.statistic(0, spec)
        n_half = len(b.halves)
        halves = np.mean([self.statistic(1 + j, spec) for j in range(n_half)], axis=0)
        out = np.full((ed.shape[0], len(KINDS)), np.nan)
        out[:, 0] = ed
        out[:, 1] = 2.0 * ed - halves
        if b.has_thirds:
            thirds = np.mean([self.statistic(1 + n_half + j, spec)
                              for j in range(len(b.thirds))], axis=0)
            out[:, 2] = 3.0 * ed - 3.0 * halves + thirds
            a, b_, c = TOJ32_WEIGHTS
            out[:, 3] = a * ed + b_ * halves + c * thirds
        return out


def draw_matrix(bundle: JackknifeBundle, specs, key: int, B: int,
                threads: int | None = None) -> np.ndarray:
    """Bootstrap statistics ``(B, len(specs), len(KINDS))``.

    Chunks of :data:`CHUNK` draws are independent and deterministic, so the
    result does not depend on ``threads``.
    """
    specs = list(specs)
    starts = list(range(0, B, CHUNK))

    def run(start):
        draws = np.arange(start, min(B, start + CHUNK))
        ev = _ChunkEvaluator(bundle, rng.uniform_indices(key, draws, bundle.n_units))
        return np.stack([ev.estimators(s) for s in specs], axis=1)

    with threadpool_limits(limits=1, user_api="blas"):
        workers = thread_count(threads)
        if workers == 1 or len(starts) == 1:
            blocks = [run(s) for s in starts]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                blocks = list(pool.map(run, starts))
    return np.concatenate(blocks, axis=0)


def point_estimates(bundle: JackknifeBundle, spec: StatisticSpec) -> dict:
    est = correct_bundle(bundle, spec)
    return estimate_dict(est)


def estimate_dict(est) -> dict:
    nan = math.nan
    return {"ED": est.ed, "HPJ": est.hpj, "TOJ": nan if est.toj is None else est.toj,
            "TOJ32": nan if est.toj32 is None else est.toj32}


def bootstrap_all(bundle: JackknifeBundle, specs, config: BootstrapConfig, kinds=KINDS,
                  threads: int | None = None, points=None, key: int | None = None) -> dict:
    """``{(spec.label, kind): BootstrapResult}`` sharing one set of resamples."""
    specs = list(specs)
    if key is None:
        key = rng.derive_key(config.seed, rng.BOOTSTRAP)
    mat = draw_matrix(bundle, specs, key, config.B, threads)
    out = {}
    for j, spec in enumerate(specs):
        pts = points[j] if points is not None else point_estimates(bundle, spec)
        for kind in kinds:
            kind = kind.upper()
            draws = mat[:, j, KINDS.index(kind)]
            lo, hi, ql, qh = percentile_interval(pts[kind], draws, config.level, config.interval)
            out[(spec.label, kind)] = BootstrapResult(
                pts[kind], lo, hi, ql, qh, draws, kind, config.level,
                int(np.count_nonzero(np.isnan(draws))), config.interval)
    return out


def bootstrap_statistic(bundle: JackknifeBundle, spec: StatisticSpec,
                        config: BootstrapConfig, threads: int | None = None) -> BootstrapResult:
    kind = config.target_estimator
    if kind.startswith("TOJ") and not bundle.has_thirds:
        raise InvalidInput(f"{kind} bootstrap needs a bundle with third subpanels")
    return bootstrap_all(bundle, [spec], config, (kind,), threads)[(spec.label, kind)]
