"""Synthetic city-by-item price-deviation panels for end-to-end checks.

The layout follows a law-of-one-price study: 48 cities x 51 items observed
for 72 periods, items split into goods and services.  Values are simulated
from heterogeneous AR(1) processes; services are given more persistent and
more volatile deviations than goods so the groups' dynamics differ.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import rng
from .io import write_long_csv
from .montecarlo import DgpConfig, default_cov, sample_unit_params, simulate_panel
from .panel import Panel

N_CITIES = 48
N_ITEMS = 51
N_GOODS = 31
T_PERIODS = 72

# (mean, sd) of (level, variance, persistence) per group
GROUP_PARAMS = {
    "goods": ((0.0, 0.02, 0.45), (0.05, 0.01, 0.2)),
    "services": ((0.0, 0.03, 0.62), (0.08, 0.015, 0.15)),
}


def lop_panels(seed: int = 2448, n_cities: int = N_CITIES, n_items: int = N_ITEMS,
               n_goods: int = N_GOODS, T: int = T_PERIODS) -> dict:
    """``{"goods": Panel, "services": Panel}`` with units labelled ``city-item``."""
    out = {}
    items = {"goods": range(n_goods), "services": range(n_goods, n_items)}
    for tag, (group, (mean, sd)) in enumerate(GROUP_PARAMS.items(), start=1):
        n = n_cities * len(items[group])
        cfg = DgpConfig(N=n, T=T, replications=1, seed=seed, mean_vec=mean,
                        cov=default_cov(sd))
        params = sample_unit_params(cfg, rng.generator(seed, tag, rng.PARAMS))
        values = simulate_panel(params, T, rng.generator(seed, tag, rng.INNOVATIONS)).values
        units = [f"c{c:02d}-i{i:02d}" for i in items[group] for c in range(n_cities)]
        out[group] = Panel(np.round(values, 6), units, list(range(1, T + 1)))
    return out


def write_lop_fixture(directory, seed: int = 2448, compress: bool = True) -> dict:
    """Write ``goods`` and ``services`` long CSVs; returns ``{group: path}``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    suffix = ".csv.gz" if compress else ".csv"
    paths = {}
    for group, panel in lop_panels(seed).items():
        path = directory / f"lop_{group}{suffix}"
        write_long_csv(panel, path, unit_col="unit", time_col="month", value_col="lop")
        paths[group] = path
    return paths
