"""Command-line interface: ``hetpanel analyze | kstest | simulate | make-fixture``.

Every option can also be given in a flat TOML file passed with ``--config``
(keys are the long option names with ``-`` replaced by ``_``); options on
the command line take precedence.

Exit codes: 0 success, 1 other package error, 2 usage error, 3 input error,
4 configuration error, 5 numerical degeneracy.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import io
from .errors import EXIT_INPUT, ConfigError, HetPanelError, InvalidInput

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover - exercised on 3.10
    import tomli as tomllib

ESTIMATORS = ("ed", "hpj", "toj", "toj32")

ANALYZE_DEFAULTS = {
    "input": None, "unit_col": "unit", "time_col": "time", "value_col": "value",
    "stats": "default", "estimator": "hpj", "bootstrap_b": 1000, "seed": 0, "level": 0.95,
    "max_lag": 1, "interval": "basic", "out": None, "format": "table", "threads": None,
}
KSTEST_DEFAULTS = {
    "group_a": None, "group_b": None, "unit_col": "unit", "time_col": "time",
    "value_col": "value", "quantity": "rho", "lag": 1, "out": None, "format": "text",
}
SIMULATE_DEFAULTS = {
    "N": [250], "T": [12], "replications": 1000, "seed": 0, "bootstrap_b": 1000,
    "level": 0.95, "interval": "basic", "stats": "default",
    "estimators": ["ED", "HPJ", "TOJ", "TOJ32"], "true_draws": 1_000_000, "out": "study",
    "threads": None, "mean": None, "cov": None,
}


def load_config(path) -> dict:
    """Flat key/value settings from a TOML file."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid TOML: {exc}") from None
    nested = [k for k, v in data.items() if isinstance(v, dict)]
    if nested:
        raise ConfigError(f"config file {path} must be flat; found tables {nested}")
    return data


def merge_settings(args: argparse.Namespace, defaults: dict) -> dict:
    """defaults < config file < command line."""
    settings = dict(defaults)
    if getattr(args, "config", None):
        config = load_config(args.config)
        unknown = sorted(set(config) - set(defaults))
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
        settings.update(config)
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    return settings


def _as_list(value):
    if value is None:
        return []
    return list(value) if isinstance(value, (list, tuple)) else [value]


def _emit(text: str, out, document: dict | None = None):
    if out and document is not None:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        io.write_json(document, out)
    sys.stdout.write(text)


def cmd_analyze(args) -> int:
    from .analysis import analyze_panel, format_report

    s = merge_settings(args, ANALYZE_DEFAULTS)
    inputs = _as_list(s["input"])
    if not inputs:
        raise InvalidInput("analyze needs --input (or 'input' in the config file)")
    if str(s["estimator"]).lower() not in ESTIMATORS:
        raise ConfigError(f"estimator must be one of {ESTIMATORS}")
    panel = io.read_panels(inputs, s["unit_col"], s["time_col"], s["value_col"])
    report = analyze_panel(
        panel, s["stats"], estimator=s["estimator"], B=int(s["bootstrap_b"]),
        seed=int(s["seed"]), level=float(s["level"]), max_lag=int(s["max_lag"]),
        interval=s["interval"], threads=s["threads"],
        inputs=[Path(p).name for p in inputs])
    text = io.dumps(report) if s["format"] == "json" else format_report(report)
    _emit(text, s["out"], report)
    return 0


def cmd_kstest(args) -> int:
    from .ecdf import ks_two_sample
    from .panel import compute_unit_stats
    from .stats import Quantity

    s = merge_settings(args, KSTEST_DEFAULTS)
    if not s["group_a"] or not s["group_b"]:
        raise InvalidInput("kstest needs two group files")
    text = str(s["quantity"])
    q = Quantity.parse(text) if text[-1:].isdigit() else Quantity.parse(
        text if text == "mu" else f"{text}{int(s['lag'])}")
    samples, dropped = [], []
    for path in (s["group_a"], s["group_b"]):
        panel = io.read_long_csv(path, s["unit_col"], s["time_col"], s["value_col"])
        stats = compute_unit_stats(panel, max(1, q.lag))
        keep = ~stats.degenerate if q.uses_rho else slice(None)
        samples.append(stats.quantity(q.name, q.lag)[keep])
        dropped.append(int(stats.degenerate.sum()) if q.uses_rho else 0)
    res = ks_two_sample(*samples)
    doc = {"schema": "hetpanel.ks/1", "quantity": str(q), **res.to_dict(),
           "dropped_units": dropped, "inputs": [Path(s["group_a"]).name, Path(s["group_b"]).name]}
    if s["format"] == "json":
        out = io.dumps(doc)
    else:
        out = (f"two-sample KS test on {q}: n1 = {res.n1}, n2 = {res.n2}\n"
               f"  sup |F1 - F2|     {res.raw_sup:.3f}\n"
               f"  scaled statistic  {res.statistic:.3f}\n"
               f"  p-value           {res.p_value:.3g}\n")
    _emit(out, s["out"], doc)
    return 0


def _cov_from(value):
    import numpy as np

    if value is None:
        return None
    cov = np.asarray(value, dtype=float)
    if cov.shape != (3, 3):
        raise ConfigError("cov must be a 3x3 matrix")
    return cov


def cmd_simulate(args) -> int:
    from .bootstrap import KINDS, BootstrapConfig
    from .montecarlo import (PARAM_MEAN, DgpConfig, StudyTable, default_cov, run_study,
                             true_parameter_oracle)
    from .stats import parse_menu

    s = merge_settings(args, SIMULATE_DEFAULTS)
    try:
        specs = parse_menu(s["stats"]) if isinstance(s["stats"], str) else parse_menu(
            ",".join(s["stats"]))
        mean = PARAM_MEAN if s["mean"] is None else tuple(s["mean"])
        cov = _cov_from(s["cov"])
        cov = default_cov() if cov is None else cov
        cells = [(int(n), int(t)) for n in _as_list(s["N"]) for t in _as_list(s["T"])]
        base = DgpConfig(N=cells[0][0], T=cells[0][1], replications=int(s["replications"]),
                         seed=int(s["seed"]), mean_vec=mean, cov=cov)
        boot = BootstrapConfig(B=int(s["bootstrap_b"]), seed=int(s["seed"]),
                               level=float(s["level"]), interval=s["interval"])
        kinds = [str(k).upper() for k in _as_list(s["estimators"])]
        if not kinds or any(k not in KINDS for k in kinds):
            raise ConfigError(f"estimators must be chosen from {KINDS}")
    except (TypeError, ValueError) as exc:
        if isinstance(exc, HetPanelError):
            raise ConfigError(str(exc)) from None
        raise ConfigError(f"invalid simulation settings: {exc}") from None
    truth = true_parameter_oracle(base, specs, int(s["true_draws"]))
    table = StudyTable([], {})
    for n, t in cells:
        cfg = DgpConfig(N=n, T=t, replications=base.replications, seed=base.seed,
                        mean_vec=mean, cov=cov)
        part = run_study(cfg, specs, kinds, boot, truth=truth,
                         true_draws=int(s["true_draws"]), workers=s["threads"])
        if not table.rows:
            table.metadata = dict(part.metadata)
        table.extend(part)
    prefix = Path(s["out"])
    prefix.parent.mkdir(parents=True, exist_ok=True)
    csv_path, json_path = prefix.with_suffix(".csv"), prefix.with_suffix(".json")
    csv_path.write_text(table.to_csv(), encoding="utf-8")
    io.write_json(table.to_dict(), json_path)
    sys.stdout.write(format_study(table))
    sys.stdout.write(f"wrote {csv_path} and {json_path}\n")
    return 0


def format_study(table) -> str:
    lines = [f"{'statistic':<18}{'est':<7}{'N':>6}{'T':>5}{'true':>9}{'bias':>9}"
             f"{'rmse':>9}{'cp':>8}"]
    for r in table.rows:
        vals = [r["true"], r["bias"], r["rmse"]]
        lines.append(f"{r['statistic']:<18}{r['estimator']:<7}{r['N']:>6}{r['T']:>5}"
                     + "".join(f"{v:>9.3f}" for v in vals) + f"{r['cp']:>8.3f}")
    return "\n".join(lines) + "\n"


def cmd_make_fixture(args) -> int:
    from .fixtures import write_lop_fixture

    paths = write_lop_fixture(args.out_dir, seed=args.seed, compress=not args.no_gzip)
    for group, path in paths.items():
        sys.stdout.write(f"{group}: {path}\n")
    return 0


def _panel_options(p):
    p.add_argument("--unit-col", help="unit column name (default: unit)")
    p.add_argument("--time-col", help="time column name (default: time)")
    p.add_argument("--value-col", help="value column name (default: value)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hetpanel",
        description="Distributions of heterogeneous dynamics in panel data.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="estimate the statistic menu with bootstrap CIs")
    p.add_argument("--input", action="append",
                   help="long CSV (unit,time,value; .gz allowed); repeat to stack files")
    _panel_options(p)
    p.add_argument("--stats", help="comma-separated statistics, e.g. mean:rho1,corr:mu:gamma0 "
                                   "(default: the 18-statistic menu)")
    p.add_argument("--estimator", type=str.lower, choices=ESTIMATORS,
                   help="estimator the headline CI is centred on (default: hpj)")
    p.add_argument("--bootstrap-b", type=int, help="bootstrap draws (default: 1000)")
    p.add_argument("--seed", type=int, help="random seed (default: 0)")
    p.add_argument("--level", type=float, help="confidence level (default: 0.95)")
    p.add_argument("--max-lag", type=int, help="largest autocovariance lag (default: 1)")
    p.add_argument("--interval", choices=("basic", "percentile"),
                   help="bootstrap interval (default: basic)")
    p.add_argument("--threads", type=int, help="worker threads (default: $HETPANEL_THREADS or 1)")
    p.add_argument("--format", choices=("table", "json"), help="stdout format (default: table)")
    p.add_argument("--out", help="write the JSON report here")
    p.add_argument("--config", help="TOML file with any of the above options")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("kstest", help="two-sample KS test on per-unit estimates")
    p.add_argument("group_a", nargs="?", help="long CSV of group A")
    p.add_argument("group_b", nargs="?", help="long CSV of group B")
    _panel_options(p)
    p.add_argument("--quantity", help="mu, gamma or rho, or with a lag such as rho1 "
                                      "(default: rho)")
    p.add_argument("--lag", type=int, help="lag for gamma/rho (default: 1)")
    p.add_argument("--format", choices=("text", "json"), help="stdout format (default: text)")
    p.add_argument("--out", help="write the JSON result here")
    p.add_argument("--config", help="TOML file with any of the above options")
    p.set_defaults(func=cmd_kstest)

    p = sub.add_parser("simulate", help="run the AR(1) Monte Carlo study")
    p.add_argument("--config", help="TOML study configuration")
    p.add_argument("--N", type=int, nargs="+", help="cross-section sizes")
    p.add_argument("--T", type=int, nargs="+", help="time-series lengths")
    p.add_argument("--replications", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--bootstrap-b", type=int)
    p.add_argument("--level", type=float)
    p.add_argument("--interval", choices=("basic", "percentile"))
    p.add_argument("--stats")
    p.add_argument("--estimators", nargs="+")
    p.add_argument("--true-draws", type=int)
    p.add_argument("--threads", type=int, help="worker processes (default: $HETPANEL_THREADS or 1)")
    p.add_argument("--out", help="output prefix; writes PREFIX.csv and PREFIX.json")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("make-fixture", help="write the synthetic goods/services panels")
    p.add_argument("out_dir")
    p.add_argument("--seed", type=int, default=2448)
    p.add_argument("--no-gzip", action="store_true")
    p.set_defaults(func=cmd_make_fixture)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except HetPanelError as exc:
        sys.stderr.write(f"hetpanel: {type(exc).__name__}: {exc}\n")
        return exc.exit_code
    except OSError as exc:
        sys.stderr.write(f"hetpanel: cannot read {exc.filename}: {exc.strerror}\n")
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
