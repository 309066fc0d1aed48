import math

import numpy as np
import pytest

from hetpanel import rng
from hetpanel.bootstrap import BootstrapConfig
from hetpanel.errors import ConfigError
from hetpanel.montecarlo import (DgpConfig, StudyTable, default_cov, run_replication, run_study,
                                 sample_unit_params, simulate_panel, summarize,
                                 true_parameter_oracle)
from hetpanel.panel import compute_unit_stats
from hetpanel.stats import StatisticSpec, default_menu


def test_config_validation():
    with pytest.raises(ConfigError):
        DgpConfig(cov=np.array([[1, 2, 0], [2, 1, 0], [0, 0, 1.0]]))  # indefinite
    with pytest.raises(ConfigError):
        DgpConfig(cov=np.array([[1, 0.1, 0], [0, 1, 0], [0, 0, 1.0]]))  # asymmetric
    with pytest.raises(ConfigError):
        DgpConfig(replications=0)
    cov = default_cov()
    np.testing.assert_allclose(np.sqrt(np.diag(cov)), [1.0, 0.7, 0.2])


def test_truncation_and_untruncated_means():
    cfg = DgpConfig()
    p = sample_unit_params(cfg, rng.generator(0, 99), 200_000)
    assert (p[:, 1] > 0).all() and (np.abs(p[:, 2]) < 1).all()
    np.testing.assert_allclose(p.mean(axis=0), [-0.993, 1.529, 0.397], atol=0.01)
    np.testing.assert_allclose(p.std(axis=0), [0.997, 0.668, 0.198], atol=0.01)
    raw = sample_unit_params(cfg, rng.generator(0, 98), 200_000, truncate=False)
    np.testing.assert_allclose(raw.mean(axis=0), [-1.0, 1.5, 0.4], atol=0.01)


def test_iid_unit_has_no_dynamics():
    panel = simulate_panel(np.array([[0.0, 2.0, 0.0]]), 20_000, rng.generator(1))
    stats = compute_unit_stats(panel, 1)
    assert abs(stats.rho[0, 0]) < 0.03
    assert stats.gamma[0, 0] == pytest.approx(2.0, rel=0.05)


def test_long_ar1_moments():
    panel = simulate_panel(np.array([[0.0, 2.0, 0.5]]), 10 ** 6, rng.generator(2))
    stats = compute_unit_stats(panel, 1)
    assert stats.gamma[0, 0] == pytest.approx(2.0, abs=0.02)
    assert stats.rho[0, 0] == pytest.approx(0.5, abs=0.01)


def test_simulation_is_deterministic():
    params = sample_unit_params(DgpConfig(N=5), rng.generator(3, rng.PARAMS))
    a = simulate_panel(params, 12, rng.generator(3, rng.INNOVATIONS)).values
    b = simulate_panel(params, 12, rng.generator(3, rng.INNOVATIONS)).values
    assert a.tobytes() == b.tobytes()


def test_oracle_small():
    truth = true_parameter_oracle(DgpConfig(), [StatisticSpec.parse("mean:rho1")], 200_000)
    assert truth["mean:rho1"] == pytest.approx(0.397, abs=0.005)


def test_summarize_by_hand():
    specs = [StatisticSpec.parse("mean:mu")]
    res = np.zeros((4, 1, 1, 5))
    res[:, 0, 0, 0] = [1.0, 2.0, 3.0, np.nan]
    res[:, 0, 0, 1] = [0.0, 2.0, 2.5, np.nan]  # lower
    res[:, 0, 0, 2] = [2.0, 3.0, 3.5, np.nan]  # upper; truth 2 covered inclusively twice
    res[:, 0, 0, 3] = [5.0, 5.0, 5.0, np.nan]
    res[:, 0, 0, 4] = [6.0, 6.0, 6.0, np.nan]
    (row,) = summarize(res, {"mean:mu": 2.0}, specs, ["ED"], 10, 6)
    assert row["bias"] == pytest.approx(0.0)
    assert row["rmse"] == pytest.approx(math.sqrt(2 / 3))
    assert row["cp"] == pytest.approx(2 / 3)
    assert row["cp_alt"] == 0.0
    assert (row["replications"], row["failed"]) == (3, 1)


def test_replication_shape_and_study_smoke():
    cfg = DgpConfig(N=30, T=12, replications=2, seed=4)
    specs = default_menu()
    boot = BootstrapConfig(B=50, seed=4)
    out = run_replication(cfg, specs, ("ED", "HPJ", "TOJ", "TOJ32"), boot, 0)
    assert out.shape == (18, 4, 5) and np.isfinite(out).all()
    assert (out[:, :, 1] <= out[:, :, 2]).all()

    table = run_study(DgpConfig(N=30, T=12, replications=1, seed=4), specs, bootstrap_config=boot,
                      true_draws=10_000)
    assert len(table.rows) == 18 * 4
    for r in table.rows:
        assert r["cp"] in (0.0, 1.0)
        assert r["rmse"] >= abs(r["bias"]) - 1e-15
    assert table.row("mean:rho1", "HPJ", 30, 12)["replications"] == 1


def test_study_independent_of_workers():
    cfg = DgpConfig(N=25, T=8, replications=3, seed=5)
    kw = dict(specs=default_menu()[:6], bootstrap_config=BootstrapConfig(B=30), true_draws=5000)
    one = run_study(cfg, workers=1, **kw)
    two = run_study(cfg, workers=2, **kw)
    assert one.to_dict() == two.to_dict()


def test_study_table_outputs():
    t = StudyTable([{"statistic": "mean:mu", "estimator": "ED", "N": 1, "T": 2, "true": 0.1,
                     "bias": 1 / 3, "rmse": 0.5, "cp": 1.0, "cp_alt": 1.0, "replications": 1,
                     "failed": 0}], {"cells": [[1, 2]]})
    lines = t.to_csv().splitlines()
    assert lines[0].split(",") == list(StudyTable.COLUMNS)
    assert "0.33333333333333331" in lines[1]
    assert t.to_dict()["schema"] == "hetpanel.study/1"
    with pytest.raises(KeyError):
        t.row("mean:mu", "HPJ", 1, 2)
