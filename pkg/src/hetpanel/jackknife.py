"""Split-panel jackknife bias correction (half-panel and third-order)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, PanelTooShort
from .panel import Panel, SplitScheme, UnitStats, compute_unit_stats, split_scheme
from .stats import StatisticSpec, columns, evaluate_columns

ORDERS = ("half", "thirds-and-half")


def jackknife_weights(powers=(1.0, 2.0), splits=(1, 2, 3)) -> np.ndarray:
    """Weights on full/half/third averages that cancel bias terms ``T**-p``.

    A subpanel of length ``T / g`` carries bias ``b g**p / T**p`` per power
    ``p``, so the weights solve ``sum w = 1`` and ``sum w g**p = 0``.
    """
    g = np.asarray(splits, dtype=float)
    system = np.vstack([np.ones_like(g)] + [g ** p for p in powers])
    rhs = np.zeros(len(g))
    rhs[0] = 1.0
    return np.linalg.solve(system, rhs)


HPJ_WEIGHTS = (2.0, -1.0)
TOJ_WEIGHTS = (3.0, -3.0, 1.0)
# cancels T^-1 and T^-3/2; this is the weighting behind the published TOJ columns
TOJ32_WEIGHTS = tuple(float(w) for w in jackknife_weights((1.0, 1.5)))
TOJ_NOTE = ("TOJ uses weights (3, -3, 1) on full, half and third subpanel averages "
            "(cancels 1/T and 1/T^2 bias); TOJ32 uses weights "
            f"({TOJ32_WEIGHTS[0]:.4f}, {TOJ32_WEIGHTS[1]:.4f}, {TOJ32_WEIGHTS[2]:.4f}) "
            "(cancels 1/T and 1/T^1.5 bias); thirds are rotation-averaged when T is "
            "not a multiple of 3")


@dataclass(frozen=True)
class JackknifeBundle:
    """Per-unit estimates on the full panel and on every subpanel, same unit order."""

    full: UnitStats
    halves: tuple
    thirds: tuple = None
    half_scheme: SplitScheme = None
    third_scheme: SplitScheme = None

    @property
    def n_units(self) -> int:
        return len(self.full)

    @property
    def has_thirds(self) -> bool:
        return self.thirds is not None

    @property
    def groups(self) -> list:
        return [self.full, *self.halves, *(self.thirds or ())]

    @property
    def degenerate(self) -> np.ndarray:
        """Units degenerate in the full panel or any subpanel."""
        out = np.zeros(self.n_units, dtype=bool)
        for g in self.groups:
            out |= g.degenerate
        return out

    def usable_mask(self, spec: StatisticSpec) -> np.ndarray:
        if spec.uses_rho:
            return ~self.degenerate
        return np.ones(self.n_units, dtype=bool)

    def take(self, index) -> "JackknifeBundle":
        """Rows ``index`` of every group jointly (the bootstrap resampling unit)."""
        index = np.asarray(index)
        return JackknifeBundle(
            self.full[index],
            tuple(g[index] for g in self.halves),
            None if self.thirds is None else tuple(g[index] for g in self.thirds),
            self.half_scheme,
            self.third_scheme,
        )


def _check_windows(scheme: SplitScheme, max_lag: int):
    shortest = min(b - a for a, b in scheme.windows)
    if shortest < max_lag + 1:
        raise PanelTooShort(
            f"{scheme.kind} subpanels of length {shortest} are too short for max_lag={max_lag}")


def build_bundle(panel: Panel, max_lag: int = 1, order: str = "thirds-and-half") -> JackknifeBundle:
    if order not in ORDERS:
        raise InvalidInput(f"unknown jackknife order {order!r}; use one of {ORDERS}")
    t = panel.n_periods
    half = split_scheme(t, "half")
    _check_windows(half, max_lag)
    third = None
    if order == "thirds-and-half":
        third = split_scheme(t, "thirds")
        _check_windows(third, max_lag)
    values = panel.values
    full = compute_unit_stats(values, max_lag)
    halves = tuple(compute_unit_stats(values[:, a:b], max_lag) for a, b in half.windows)
    thirds = None
    if third is not None:
        thirds = tuple(compute_unit_stats(values[:, a:b], max_lag) for a, b in third.windows)
    return JackknifeBundle(full, halves, thirds, half, third)


def hpj(ed: float, half_estimates) -> float:
    half_estimates = list(half_estimates)
    if len(half_estimates) not in (2, 4):
        raise InvalidInput(f"HPJ needs 2 or 4 half-panel estimates, got {len(half_estimates)}")
    return 2.0 * ed - float(np.mean(half_estimates))


def toj(ed: float, half_estimates, third_estimates) -> float:
    half_estimates = list(half_estimates)
    third_estimates = list(third_estimates) if third_estimates is not None else []
    if len(half_estimates) not in (2, 4):
        raise InvalidInput(f"TOJ needs 2 or 4 half-panel estimates, got {len(half_estimates)}")
    if len(third_estimates) not in (3, 9):
        raise InvalidInput(f"TOJ needs 3 or 9 third-panel estimates, got {len(third_estimates)}")
    return 3.0 * ed - 3.0 * float(np.mean(half_estimates)) + float(np.mean(third_estimates))


def toj32(ed: float, half_estimates, third_estimates) -> float:
    """Third-order variant cancelling ``1/T`` and ``1/T**1.5`` bias terms."""
    if len(list(half_estimates)) not in (2, 4) or len(list(third_estimates or [])) not in (3, 9):
        raise InvalidInput("TOJ32 needs 2 or 4 half-panel and 3 or 9 third-panel estimates")
    a, b, c = TOJ32_WEIGHTS
    return a * ed + b * float(np.mean(half_estimates)) + c * float(np.mean(third_estimates))


@dataclass(frozen=True)
class CorrectedEstimate:
    ed: float
    sbar_half: float
    hpj: float
    sbar_third: float = math.nan
    toj: float = None
    toj32: float = None
    n_units_used: int = 0
    degenerate_units_dropped: int = 0
    smooth: bool = True

    def get(self, kind: str) -> float:
        kind = kind.upper()
        if kind == "ED":
            return self.ed
        if kind == "HPJ":
            return self.hpj
        if kind in ("TOJ", "TOJ32"):
            value = self.toj if kind == "TOJ" else self.toj32
            if value is None:
                raise InvalidInput(f"{kind} requested but third subpanels were not built")
            return value
        raise InvalidInput(f"unknown estimator {kind!r}")


def group_estimates(bundle: JackknifeBundle, spec: StatisticSpec, mask=None):
    """``(ed, half estimates, third estimates or None)`` for ``spec``."""
    if mask is None:
        mask = bundle.usable_mask(spec)

    def ev(stats):
        return evaluate_columns(spec.target, columns(stats, spec, mask))

    ed = ev(bundle.full)
    halves = [ev(g) for g in bundle.halves]
    thirds = None if bundle.thirds is None else [ev(g) for g in bundle.thirds]
    return ed, halves, thirds


def correct_bundle(bundle: JackknifeBundle, spec: StatisticSpec) -> CorrectedEstimate:
    mask = bundle.usable_mask(spec)
    ed, halves, thirds = group_estimates(bundle, spec, mask)
    used = int(mask.sum())
    common = dict(n_units_used=used, degenerate_units_dropped=bundle.n_units - used,
                  smooth=spec.smooth)
    if thirds is None:
        return CorrectedEstimate(ed, float(np.mean(halves)), hpj(ed, halves), **common)
    return CorrectedEstimate(ed, float(np.mean(halves)), hpj(ed, halves),
                             float(np.mean(thirds)), toj(ed, halves, thirds),
                             toj32(ed, halves, thirds), **common)


def corrected_estimate(panel: Panel, spec: StatisticSpec, order: str = "thirds-and-half",
                       max_lag: int | None = None) -> CorrectedEstimate:
    if max_lag is None:
        max_lag = max(1, max(q.lag for q in spec.quantities))
    return correct_bundle(build_bundle(panel, max_lag, order), spec)
