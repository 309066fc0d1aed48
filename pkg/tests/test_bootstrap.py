import math

import numpy as np
import pytest

from hetpanel import rng
from hetpanel.bootstrap import (CHUNK, KINDS, BootstrapConfig, bootstrap_all, bootstrap_statistic,
                                counts_from_index, draw_matrix, percentile_interval,
                                resample_units)
from hetpanel.ecdf import sample_quantile
from hetpanel.errors import InvalidInput
from hetpanel.jackknife import build_bundle, correct_bundle
from hetpanel.panel import Panel
from hetpanel.stats import StatisticSpec, default_menu


def make_bundle(n=40, t=13, seed=0, degenerate=()):
    v = np.random.default_rng(seed).normal(size=(n, t)).cumsum(axis=1) * 0.3
    for i in degenerate:
        v[i, : t // 2] = 2.0
    return build_bundle(Panel(v), 1)


def reference_draws(bundle, specs, key, B):
    """Materialise each resampled bundle and rerun the point estimators."""
    out = np.full((B, len(specs), len(KINDS)), np.nan)
    for b in range(B):
        boot = resample_units(bundle, key, b)
        for j, spec in enumerate(specs):
            try:
                est = correct_bundle(boot, spec)
            except Exception:
                continue
            out[b, j] = (est.ed, est.hpj, est.toj, est.toj32)
    return out


@pytest.mark.parametrize("degenerate", [(), (3, 17)])
def test_engine_matches_reference(degenerate):
    bundle = make_bundle(degenerate=degenerate)
    specs = default_menu()
    key = rng.derive_key(42, rng.BOOTSTRAP)
    B = CHUNK + 30  # crosses a chunk boundary
    fast = draw_matrix(bundle, specs, key, B)
    slow = reference_draws(bundle, specs, key, B)
    np.testing.assert_allclose(fast, slow, rtol=1e-10, atol=1e-12)


def test_counts_from_index():
    idx = np.array([[0, 0, 2], [1, 2, 2]])
    np.testing.assert_array_equal(counts_from_index(idx), [[2, 0, 1], [0, 1, 2]])


def test_percentile_interval_by_hand():
    draws = np.arange(1.0, 101.0)  # theta = draws - 50
    lo, hi, ql, qh = percentile_interval(50.0, draws, 0.90)
    # inf-form ranks: ceil(0.05*100)=5, ceil(0.95*100)=95
    assert (ql, qh) == (5.0 - 50.0, 95.0 - 50.0)
    assert (lo, hi) == (50.0 - 45.0, 50.0 + 45.0)
    lo, hi, _, _ = percentile_interval(50.0, draws, 0.90, "percentile")
    assert (lo, hi) == (5.0, 95.0)
    with pytest.raises(InvalidInput):
        percentile_interval(0.0, draws, 0.9, "bca")


def test_percentile_interval_asymmetric_draws_reflect():
    draws = np.array([0.0, 0.0, 0.0, 10.0])
    lo, hi, _, _ = percentile_interval(1.0, draws, 0.5)
    # theta = (-1,-1,-1,9): q_.25 = -1, q_.75 = -1 -> basic interval is [2, 2]
    assert (lo, hi) == (2.0, 2.0)


def test_percentile_interval_missing_draws():
    draws = np.array([1.0, np.nan, 2.0, 3.0])
    lo, hi, _, _ = percentile_interval(2.0, draws, 0.5)
    assert math.isfinite(lo) and math.isfinite(hi)
    assert all(math.isnan(x) for x in percentile_interval(2.0, [np.nan], 0.5))


def test_config_validation():
    with pytest.raises(InvalidInput):
        BootstrapConfig(B=0)
    with pytest.raises(InvalidInput):
        BootstrapConfig(level=1.0)
    with pytest.raises(InvalidInput):
        BootstrapConfig(target_estimator="abc")
    with pytest.raises(InvalidInput):
        BootstrapConfig(interval="bca")
    assert BootstrapConfig(target_estimator="toj").target_estimator == "TOJ"


def test_deterministic_across_threads():
    bundle = make_bundle(n=60)
    cfg = BootstrapConfig(B=350, seed=7)
    results = [bootstrap_all(bundle, default_menu(), cfg, threads=t) for t in (1, 3, 16)]
    for other in results[1:]:
        for key, r in results[0].items():
            np.testing.assert_array_equal(r.draws, other[key].draws)
            assert (r.ci_lower, r.ci_upper) == (other[key].ci_lower, other[key].ci_upper)


def test_prefix_stability():
    # draw b depends only on (key, b): a longer run extends a shorter one
    bundle = make_bundle()
    key = rng.derive_key(1)
    short = draw_matrix(bundle, default_menu()[:3], key, 120)
    long = draw_matrix(bundle, default_menu()[:3], key, 250)
    np.testing.assert_array_equal(short, long[:120])


def test_bootstrap_statistic_point_and_interval():
    bundle = make_bundle(n=80)
    spec = StatisticSpec.parse("mean:rho1")
    r = bootstrap_statistic(bundle, spec, BootstrapConfig(B=400, seed=3))
    assert r.estimator_kind == "HPJ"
    assert r.point == pytest.approx(correct_bundle(bundle, spec).hpj)
    assert r.ci_lower <= r.point <= r.ci_upper
    assert len(r.draws) == 400 and r.n_missing == 0 and not r.unreliable


def test_toj_needs_thirds():
    b = build_bundle(Panel(np.random.default_rng(0).normal(size=(10, 12))), 1, "half")
    with pytest.raises(InvalidInput):
        bootstrap_statistic(b, StatisticSpec.parse("mean:mu"),
                            BootstrapConfig(B=10, target_estimator="TOJ"))


def test_unreliable_flag_when_many_draws_fail():
    # 2 units, one degenerate: rho stats are undefined when only the bad unit is drawn
    v = np.array([[1.0, 3.0, 2.0, 5.0, 4.0, 6.0], [2.0] * 6])
    b = build_bundle(Panel(v), 1)
    r = bootstrap_statistic(b, StatisticSpec.parse("mean:rho1"), BootstrapConfig(B=200))
    assert 20 < r.n_missing < 80  # about a quarter of the draws
    ok = r.draws[~np.isnan(r.draws)]
    np.testing.assert_allclose(ok, r.point)  # otherwise only the good unit counts
    v = np.random.default_rng(5).normal(size=(2, 6))
    r = bootstrap_statistic(build_bundle(Panel(v), 1), StatisticSpec.parse("corr:mu:gamma0"),
                            BootstrapConfig(B=200, target_estimator="ED"))
    # half the draws repeat one unit, making the correlation undefined
    assert r.n_missing > 2 and r.unreliable


def test_quantile_draw_is_sample_quantile_of_resample():
    bundle = make_bundle(n=25, t=12)
    key = rng.derive_key(8)
    spec = StatisticSpec.parse("q75:gamma0")
    mat = draw_matrix(bundle, [spec], key, 5)
    for b in range(5):
        boot = resample_units(bundle, key, b)
        assert mat[b, 0, 0] == sample_quantile(boot.full.gamma[:, 0], 0.75)
