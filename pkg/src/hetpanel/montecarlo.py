"""Heterogeneous AR(1) simulation study with bias, rmse and coverage tables."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .bootstrap import KINDS, BootstrapConfig, bootstrap_all, estimate_dict, thread_count
from .errors import ConfigError, HetPanelError
from .jackknife import build_bundle, correct_bundle
from .panel import Panel
from .stats import StatisticSpec, evaluate_columns, default_menu

PARAM_MEAN = (-1.0, 1.5, 0.4)
PARAM_SD = (1.0, 0.7, 0.2)
# correlations of (varsigma, sigma^2), (varsigma, phi), (sigma^2, phi); this
# assignment reproduces the reported population values (corr(mu, rho1) = 0.405)
PARAM_CORR = (0.2, 0.4, -0.3)


def default_cov(sd=PARAM_SD, corr=PARAM_CORR) -> np.ndarray:
    r = np.eye(3)
    r[0, 1] = r[1, 0] = corr[0]
    r[0, 2] = r[2, 0] = corr[1]
    r[1, 2] = r[2, 1] = corr[2]
    sd = np.asarray(sd, dtype=float)
    return r * np.outer(sd, sd)


@dataclass(frozen=True)
class DgpConfig:
    """Unit parameters ``(varsigma, sigma^2, phi)`` ~ N(mean_vec, cov) given
    ``sigma^2 > 0`` and ``|phi| < 1``; panels of ``N`` units and ``T`` periods."""

    N: int = 250
    T: int = 12
    replications: int = 1000
    seed: int = 0
    mean_vec: tuple = PARAM_MEAN
    cov: np.ndarray = field(default_factory=default_cov)

    def __post_init__(self):
        cov = np.asarray(self.cov, dtype=float)
        mean = np.asarray(self.mean_vec, dtype=float)
        if mean.shape != (3,) or cov.shape != (3, 3):
            raise ConfigError("mean_vec must have 3 entries and cov must be 3x3")
        if not np.allclose(cov, cov.T, rtol=0, atol=1e-12):
            raise ConfigError("covariance matrix is not symmetric")
        try:
            np.linalg.cholesky(cov)
        except np.linalg.LinAlgError:
            raise ConfigError("covariance matrix is not positive definite") from None
        if int(self.N) < 1 or int(self.T) < 2 or int(self.replications) < 1:
            raise ConfigError("need N >= 1, T >= 2 and replications >= 1")
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "mean_vec", tuple(float(m) for m in mean))


def sample_unit_params(config: DgpConfig, gen: np.random.Generator, n: int | None = None,
                       truncate: bool = True) -> np.ndarray:
    """``(n, 3)`` accepted draws of ``(varsigma, sigma^2, phi)`` by joint rejection."""
    n = config.N if n is None else int(n)
    chol = np.linalg.cholesky(config.cov)
    mean = np.asarray(config.mean_vec)
    out = np.empty((n, 3))
    filled = 0
    while filled < n:
        batch = max(64, int((n - filled) * 1.05) + 16)
        draw = mean + gen.standard_normal((batch, 3)) @ chol.T
        if truncate:
            draw = draw[(draw[:, 1] > 0.0) & (np.abs(draw[:, 2]) < 1.0)]
        take = min(n - filled, draw.shape[0])
        out[filled:filled + take] = draw[:take]
        filled += take
    return out


def simulate_panel(params: np.ndarray, T: int, gen: np.random.Generator) -> Panel:
    """Stationary AR(1) paths, one per row of ``params``; returns periods 1..T."""
    params = np.atleast_2d(params)
    level, var, phi = params[:, 0], params[:, 1], params[:, 2]
    n = params.shape[0]
    y = level + np.sqrt(var) * gen.standard_normal(n)
    gen.standard_normal(n)  # u_{i0}: drawn to keep the stream layout, unused
    shocks = gen.standard_normal((n, T))
    scale = np.sqrt((1.0 - phi ** 2) * var)
    drift = (1.0 - phi) * level
    out = np.empty((n, T))
    for t in range(T):
        y = drift + phi * y + scale * shocks[:, t]
        out[:, t] = y
    return Panel(out)


def population_column(params: np.ndarray, name: str, lag: int) -> np.ndarray:
    if name == "mu":
        return params[:, 0]
    if name == "gamma":
        return params[:, 1] * params[:, 2] ** lag
    return params[:, 2] ** lag


def true_parameter_oracle(config: DgpConfig, specs=None, draws: int = 10 ** 6,
                          seed: int | None = None) -> dict:
    """``{spec.label: value}`` evaluated on ``draws`` accepted parameter vectors."""
    specs = default_menu() if specs is None else list(specs)
    seed = config.seed if seed is None else seed
    params = sample_unit_params(config, rng.generator(seed, rng.TRUTH), draws)
    out = {}
    for spec in specs:
        cols = [population_column(params, q.name, q.lag) for q in spec.quantities]
        out[spec.label] = evaluate_columns(spec.target, cols)
    return out


def run_replication(config: DgpConfig, specs, kinds, boot: BootstrapConfig, rep: int) -> np.ndarray:
    """``(len(specs), len(kinds), 5)`` of estimate, ci_lower, ci_upper and the
    alternative interval's lower/upper bounds (NaN on failure)."""
    path = (config.N, config.T, rep)
    params = sample_unit_params(config, rng.generator(config.seed, *path, rng.PARAMS))
    panel = simulate_panel(params, config.T, rng.generator(config.seed, *path, rng.INNOVATIONS))
    order = "thirds-and-half" if any(k.startswith("TOJ") for k in kinds) else "half"
    bundle = build_bundle(panel, max(1, max(q.lag for s in specs for q in s.quantities)), order)
    out = np.full((len(specs), len(kinds), 5), np.nan)
    points, ok = [], []
    for spec in specs:
        try:
            est = correct_bundle(bundle, spec)
            points.append(estimate_dict(est))
            ok.append(spec)
        except HetPanelError:
            points.append(None)
    if not ok:
        return out
    key = rng.derive_key(config.seed, *path, rng.BOOTSTRAP)
    good = [j for j, p in enumerate(points) if p is not None]
    res = bootstrap_all(bundle, ok, boot, kinds, threads=1,
                        points=[points[j] for j in good], key=key)
    for j in good:
        for k, kind in enumerate(kinds):
            r = res[(specs[j].label, kind)]
            if r.interval == "basic":
                alt = (r.point + r.q_low, r.point + r.q_high)
            else:
                alt = (r.point - r.q_high, r.point - r.q_low)
            out[j, k] = (r.point, r.ci_lower, r.ci_upper, *alt)
    return out


def _replication_task(args):
    return run_replication(*args)


@dataclass
class StudyTable:
    rows: list
    metadata: dict = field(default_factory=dict)

    COLUMNS = ("statistic", "estimator", "N", "T", "true", "bias", "rmse", "cp",
               "cp_alt", "replications", "failed")

    def row(self, statistic: str, estimator: str, N: int, T: int) -> dict:
        for r in self.rows:
            if (r["statistic"], r["estimator"], r["N"], r["T"]) == (statistic, estimator, N, T):
                return r
        raise KeyError((statistic, estimator, N, T))

    def extend(self, other: "StudyTable"):
        self.rows.extend(other.rows)
        cells = self.metadata.setdefault("cells", [])
        cells.extend(c for c in other.metadata.get("cells", []) if c not in cells)

    def to_csv(self) -> str:
        from .io import format_float

        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.COLUMNS)
        for r in self.rows:
            writer.writerow([format_float(r[c]) if isinstance(r[c], float) else r[c]
                             for c in self.COLUMNS])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"schema": "hetpanel.study/1", "metadata": self.metadata,
                "rows": [{c: r[c] for c in self.COLUMNS} for r in self.rows]}


def summarize(results: np.ndarray, truth: dict, specs, kinds, N: int, T: int) -> list:
    """Aggregate ``(R, n_specs, n_kinds, 5)`` replication results into table rows.

    ``cp`` is the coverage of the configured interval and ``cp_alt`` that of
    the other bootstrap interval built from the same draws.
    """
    rows = []
    for j, spec in enumerate(specs):
        true = truth[spec.label]
        for k, kind in enumerate(kinds):
            est, lo, hi = results[:, j, k, 0], results[:, j, k, 1], results[:, j, k, 2]
            good = ~np.isnan(est)
            err = est[good] - true
            covered = (lo[good] <= true) & (true <= hi[good])
            alt_lo, alt_hi = results[:, j, k, 3][good], results[:, j, k, 4][good]
            covered_alt = (alt_lo <= true) & (true <= alt_hi)
            n = int(good.sum())
            rows.append({
                "statistic": spec.label, "estimator": kind, "N": N, "T": T,
                "true": float(true),
                "bias": float(err.mean()) if n else math.nan,
                "rmse": float(math.sqrt(np.mean(err ** 2))) if n else math.nan,
                "cp": float(covered.mean()) if n else math.nan,
                "cp_alt": float(covered_alt.mean()) if n else math.nan,
                "replications": n, "failed": int(results.shape[0] - n),
            })
    return rows


def run_study(config: DgpConfig, specs=None, estimators=KINDS,
              bootstrap_config: BootstrapConfig | None = None, truth: dict | None = None,
              true_draws: int = 10 ** 6, workers: int | None = None) -> StudyTable:
    specs = default_menu() if specs is None else [
        s if isinstance(s, StatisticSpec) else StatisticSpec.parse(s) for s in specs]
    kinds = tuple(k.upper() for k in estimators)
    boot = bootstrap_config or BootstrapConfig(seed=config.seed)
    if truth is None:
        truth = true_parameter_oracle(config, specs, true_draws)
    tasks = [(config, specs, kinds, boot, r) for r in range(config.replications)]
    workers = thread_count(workers)
    if workers == 1:
        results = [run_replication(*t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_replication_task, tasks, chunksize=8))
    results = np.stack(results)
    meta = {"cells": [[config.N, config.T]], "replications": config.replications,
            "seed": config.seed, "bootstrap_b": boot.B, "level": boot.level,
            "interval": boot.interval,
            "estimators": list(kinds), "true_draws": true_draws}
    return StudyTable(summarize(results, truth, specs, kinds, config.N, config.T), meta)
