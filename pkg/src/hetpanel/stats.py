"""Plug-in estimators of cross-sectional features of the per-unit estimates.

Every target is ``h(mean g(theta_i))`` over units: means, standard
deviations (divisor ``N``), moment-form correlations, and inf-form quantiles.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .ecdf import sample_quantile
from .errors import DegenerateVariance, HetPanelError, InsufficientUnits, InvalidInput
from .panel import UnitStats

QUANTILE_LEVELS = {"q25": 0.25, "q50": 0.5, "q75": 0.75}
TARGETS = ("mean", "std", "q25", "q50", "q75", "corr")

_SELECTOR_RE = re.compile(r"^(mu|gamma|rho)(\d*)$")


@dataclass(frozen=True, order=True)
class Quantity:
    """Selects ``mu``, ``gamma[lag]`` or ``rho[lag]`` from a :class:`UnitStats`."""

    name: str
    lag: int = 0

    def __post_init__(self):
        if self.name not in ("mu", "gamma", "rho"):
            raise InvalidInput(f"unknown quantity {self.name!r}")
        if self.name == "mu" and self.lag != 0:
            raise InvalidInput("mu takes no lag")
        if self.name == "rho" and self.lag < 1:
            raise InvalidInput("rho needs a lag >= 1")
        if self.lag < 0:
            raise InvalidInput("lag must be nonnegative")

    @classmethod
    def parse(cls, text: str) -> "Quantity":
        m = _SELECTOR_RE.match(text.strip())
        if not m:
            raise InvalidInput(f"cannot parse quantity {text!r} (use mu, gammaK, rhoK)")
        name, digits = m.groups()
        if name == "mu":
            if digits:
                raise InvalidInput("mu takes no lag")
            return cls("mu")
        if not digits:
            raise InvalidInput(f"{name} needs an explicit lag, e.g. {name}1")
        return cls(name, int(digits))

    def __str__(self):
        return "mu" if self.name == "mu" else f"{self.name}{self.lag}"

    @property
    def uses_rho(self) -> bool:
        return self.name == "rho"


@dataclass(frozen=True)
class StatisticSpec:
    target: str
    quantities: tuple

    def __post_init__(self):
        if self.target not in TARGETS:
            raise InvalidInput(f"unknown target {self.target!r}")
        qs = tuple(q if isinstance(q, Quantity) else Quantity.parse(q) for q in self.quantities)
        object.__setattr__(self, "quantities", qs)
        if self.target == "corr":
            if len(qs) != 2 or qs[0] == qs[1]:
                raise InvalidInput("corr needs two distinct quantities")
        elif len(qs) != 1:
            raise InvalidInput(f"{self.target} takes exactly one quantity")

    @classmethod
    def parse(cls, text: str) -> "StatisticSpec":
        """Parse ``target:quantity`` or ``corr:quantity:quantity``."""
        parts = [p.strip() for p in text.split(":")]
        if len(parts) < 2:
            raise InvalidInput(f"cannot parse statistic {text!r}")
        return cls(parts[0], tuple(parts[1:]))

    @property
    def label(self) -> str:
        return ":".join([self.target] + [str(q) for q in self.quantities])

    @property
    def smooth(self) -> bool:
        return self.target not in QUANTILE_LEVELS

    @property
    def uses_rho(self) -> bool:
        return any(q.uses_rho for q in self.quantities)

    @property
    def min_units(self) -> int:
        return 2 if self.target in ("std", "corr") else 1

    def __str__(self):
        return self.label


def default_menu(lag: int = 1) -> list:
    """Means, stds, quartiles of mu, gamma0, rho_lag plus their three correlations."""
    qs = [Quantity("mu"), Quantity("gamma", 0), Quantity("rho", lag)]
    specs = [StatisticSpec(t, (q,)) for q in qs for t in ("mean", "std", "q25", "q50", "q75")]
    specs += [StatisticSpec("corr", (qs[0], qs[1])), StatisticSpec("corr", (qs[0], qs[2])),
              StatisticSpec("corr", (qs[1], qs[2]))]
    return specs


def parse_menu(text: str | None, lag: int = 1) -> list:
    if text is None or text.strip() in ("", "default", "all"):
        return default_menu(lag)
    return [StatisticSpec.parse(tok) for tok in text.split(",") if tok.strip()]


@dataclass
class EstimateResult:
    point: float
    estimator_kind: str = "ED"
    n_units_used: int = 0
    degenerate_units_dropped: int = 0
    spec: StatisticSpec | None = None
    error: HetPanelError | None = field(default=None, repr=False)


def usable_mask(stats: UnitStats, spec: StatisticSpec) -> np.ndarray:
    """Units that enter ``spec``; degenerate units are dropped only for rho targets."""
    if spec.uses_rho:
        return ~stats.degenerate
    return np.ones(len(stats), dtype=bool)


def columns(stats: UnitStats, spec: StatisticSpec, mask=None) -> list:
    cols = [stats.quantity(q.name, q.lag) for q in spec.quantities]
    if mask is not None:
        cols = [c[mask] for c in cols]
    return cols


def evaluate_columns(target: str, cols) -> float:
    """Apply ``target`` to per-unit value columns (already filtered)."""
    x = np.asarray(cols[0], dtype=float)
    n = x.size
    need = 2 if target in ("std", "corr") else 1
    if n < need:
        raise InsufficientUnits(f"{target} needs at least {need} usable units, got {n}")
    if target == "mean":
        return float(np.mean(x))
    if target in QUANTILE_LEVELS:
        return sample_quantile(x, QUANTILE_LEVELS[target])
    if target == "std":
        return math.sqrt(max(comoment(x, x), 0.0))
    y = np.asarray(cols[1], dtype=float)
    vx, vy = comoment(x, x), comoment(y, y)
    if vx <= 0.0 or vy <= 0.0:
        raise DegenerateVariance("correlation with a constant quantity")
    # clip rounding excursions outside [-1, 1]
    return min(1.0, max(-1.0, comoment(x, y) / math.sqrt(vx * vy)))


def comoment(x, y) -> float:
    """``mean(xy) - mean(x) mean(y)``, on data shifted by its first value."""
    xs, ys = x - x[0], y - y[0]
    return float(np.mean(xs * ys) - np.mean(xs) * np.mean(ys))


def plug_in(stats: UnitStats, spec: StatisticSpec, estimator_kind: str = "ED") -> EstimateResult:
    mask = usable_mask(stats, spec)
    point = evaluate_columns(spec.target, columns(stats, spec, mask))
    used = int(mask.sum())
    return EstimateResult(point, estimator_kind, used, len(stats) - used, spec)


def evaluate_all(stats: UnitStats, specs) -> list:
    """Plug-in estimate for each spec; failures are recorded per spec, not raised."""
    specs = list(specs)
    if not specs:
        raise InvalidInput("no statistics requested")
    out = []
    for spec in specs:
        try:
            out.append(plug_in(stats, spec))
        except HetPanelError as exc:
            mask = usable_mask(stats, spec)
            used = int(mask.sum())
            out.append(EstimateResult(math.nan, "ED", used, len(stats) - used, spec, exc))
    return out
