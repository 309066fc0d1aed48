"""Model-free analysis of heterogeneous dynamics in panel data.

Per-unit means, autocovariances and autocorrelations; plug-in estimates of
their cross-sectional distribution; split-panel jackknife bias correction;
cross-sectional bootstrap intervals; two-sample KS tests; and a Monte Carlo
harness for the heterogeneous AR(1) design.
"""

from .analysis import analyze_panel, format_report
from .bootstrap import BootstrapConfig, BootstrapResult, bootstrap_all, bootstrap_statistic
from .ecdf import Ecdf, KsResult, ecdf_build, ecdf_eval, kolmogorov_cdf, ks_two_sample, quantile
from .errors import (ConfigError, DegenerateVariance, DuplicateKey, HetPanelError,
                     InsufficientUnits, InvalidInput, InvalidLag, PanelTooShort, ParseError,
                     UnbalancedPanel)
from .io import read_long_csv, write_long_csv
from .jackknife import CorrectedEstimate, build_bundle, corrected_estimate, hpj, toj, toj32
from .montecarlo import DgpConfig, StudyTable, run_study, true_parameter_oracle
from .panel import (Panel, UnitStats, compute_unit_stats, split_panel, unit_autocorr,
                    unit_autocov, unit_mean)
from .stats import Quantity, StatisticSpec, evaluate_all, default_menu, plug_in

__version__ = "0.1.0"
