"""End-to-end analysis of one panel: unit moments, corrections and bootstrap CIs."""

from __future__ import annotations

from .bootstrap import KINDS, BootstrapConfig, bootstrap_all, estimate_dict
from .errors import PanelTooShort
from .jackknife import TOJ_NOTE, build_bundle, correct_bundle
from .panel import Panel
from .stats import StatisticSpec, parse_menu

REPORT_SCHEMA = "hetpanel.report/1"


def _bundle_for(panel: Panel, max_lag: int, estimator: str):
    """Bundle with thirds when the panel is long enough (always for TOJ targets)."""
    if estimator.startswith("TOJ"):
        return build_bundle(panel, max_lag, "thirds-and-half")
    try:
        return build_bundle(panel, max_lag, "thirds-and-half")
    except PanelTooShort:
        return build_bundle(panel, max_lag, "half")


def _flags(spec: StatisticSpec, est, results, has_thirds: bool) -> list:
    flags = []
    if not spec.smooth:
        flags += ["non_smooth", "theory_light_ci"]
    if est.degenerate_units_dropped:
        flags.append("degenerate_units_dropped")
    if not has_thirds:
        flags.append("toj_unavailable")
    if any(r.unreliable for r in results):
        flags.append("unreliable_bootstrap")
    return flags


def analyze_panel(panel: Panel, specs=None, estimator: str = "HPJ", B: int = 1000,
                  seed: int = 0, level: float = 0.95, max_lag: int = 1,
                  interval: str = "basic", threads: int | None = None,
                  inputs=()) -> dict:
    """Analysis report (a JSON-ready dict) for ``panel``.

    Every statistic carries ED, HPJ and both third-order estimates plus a
    bootstrap interval for each estimator; ``ci_lower``/``ci_upper`` at the
    top of a block are the ones centred on ``estimator``.
    """
    if specs is None or isinstance(specs, str):
        specs = parse_menu(specs, max_lag)
    specs = [s if isinstance(s, StatisticSpec) else StatisticSpec.parse(s) for s in specs]
    need = max(q.lag for s in specs for q in s.quantities)
    max_lag = max(int(max_lag), need, 1)
    estimator = estimator.upper()
    config = BootstrapConfig(B=B, seed=seed, level=level, target_estimator=estimator,
                             interval=interval)
    bundle = _bundle_for(panel, max_lag, estimator)
    kinds = KINDS if bundle.has_thirds else ("ED", "HPJ")

    estimates = [correct_bundle(bundle, spec) for spec in specs]
    points = [estimate_dict(e) for e in estimates]
    boot = bootstrap_all(bundle, specs, config, kinds, threads=threads, points=points)

    blocks = []
    for spec, est, pts in zip(specs, estimates, points):
        results = [boot[(spec.label, k)] for k in kinds]
        head = boot[(spec.label, estimator)]
        blocks.append({
            "target": spec.label,
            "smooth": spec.smooth,
            "ED": pts["ED"], "HPJ": pts["HPJ"],
            "TOJ": pts["TOJ"] if bundle.has_thirds else None,
            "TOJ32": pts["TOJ32"] if bundle.has_thirds else None,
            "estimator_kind": estimator,
            "ci_lower": head.ci_lower,
            "ci_upper": head.ci_upper,
            "intervals": {r.estimator_kind: {"ci_lower": r.ci_lower, "ci_upper": r.ci_upper,
                                             "n_missing": r.n_missing} for r in results},
            "n_units_used": est.n_units_used,
            "degenerate_units_dropped": est.degenerate_units_dropped,
            "flags": _flags(spec, est, results, bundle.has_thirds),
        })
    metadata = {
        "N": panel.n_units, "T": panel.n_periods, "max_lag": max_lag, "seed": int(seed),
        "B": config.B, "level": float(level), "interval": interval, "estimator": estimator,
        "dropped_units": int(bundle.degenerate.sum()),
        "toj_weights_note": TOJ_NOTE,
        "inputs": [str(p) for p in inputs],
    }
    return {"schema": REPORT_SCHEMA, "metadata": metadata, "statistics": blocks}


def _fmt(x, width=9):
    return f"{x:{width}.3f}" if x is not None and x == x else " " * (width - 3) + "n/a"


def _group_key(label: str) -> str:
    parts = label.split(":")
    return "corr" if parts[0] == "corr" else parts[1]


def format_report(report: dict) -> str:
    """Aligned text tables: one per quantity, estimate and CI rows per estimator."""
    blocks = report["statistics"]
    meta = report["metadata"]
    groups = {}
    for b in blocks:
        groups.setdefault(_group_key(b["target"]), []).append(b)
    kinds = [k for k in KINDS if any(b[k] is not None for b in blocks)]
    pct = f"{100 * meta['level']:g}% CI"
    lines = [f"N = {meta['N']}, T = {meta['T']}, B = {meta['B']}, seed = {meta['seed']}, "
             f"{meta['interval']} bootstrap intervals"]
    for name, members in groups.items():
        heads = [b["target"].split(":", 1)[0] if name != "corr" else b["target"][5:]
                 for b in members]
        width = max(19, *(len(h) + 2 for h in heads))
        lines.append("")
        lines.append(name)
        lines.append(f"{'':<8}" + "".join(f"{h:>{width}}" for h in heads))
        for kind in kinds:
            lines.append(f"{kind:<8}" + "".join(
                f"{_fmt(b[kind]):>{width}}" for b in members))
            cis = []
            for b in members:
                ci = b["intervals"].get(kind)
                if ci is None:
                    cis.append(f"{'n/a':>{width}}")
                else:
                    cis.append(f"{'[' + _fmt(ci['ci_lower'], 7).strip() + ', ' + _fmt(ci['ci_upper'], 7).strip() + ']':>{width}}")
            lines.append(f"{pct:<8}" + "".join(cis))
    flagged = [b["target"] for b in blocks if "non_smooth" in b["flags"]]
    if flagged:
        lines.append("")
        lines.append("non-smooth targets (jackknife and CI not covered by smooth theory): "
                     + ", ".join(flagged))
    if meta["dropped_units"]:
        lines.append(f"{meta['dropped_units']} unit(s) with zero variance dropped from "
                     "autocorrelation statistics")
    return "\n".join(lines) + "\n"
