import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from hetpanel.errors import DegenerateVariance, InvalidInput, InvalidLag, PanelTooShort
from hetpanel.panel import (Panel, compute_unit_stats, split_panel, split_scheme, unit_autocorr,
                            unit_autocov, unit_mean)


def direct_autocov(y, k):
    """Textbook double loop over the definition."""
    T = len(y)
    m = sum(y) / T
    return sum((y[t] - m) * (y[t - k] - m) for t in range(k, T)) / (T - k)


finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
panels = arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(4, 20)), elements=finite)


# -- single series ---------------------------------------------------------

def test_unit_mean_examples():
    assert unit_mean([1, 2, 3, 4]) == 2.5
    assert unit_mean([5, 5, 5]) == 5.0
    with pytest.raises(InvalidInput):
        unit_mean([])


def test_unit_autocov_examples():
    assert unit_autocov([1, 2, 3, 4], 0) == pytest.approx(1.25, rel=1e-15)
    assert unit_autocov([1, 2, 3, 4], 1) == pytest.approx(5 / 12, rel=1e-15)
    assert unit_autocov([3.3] * 9, 4) == 0.0
    with pytest.raises(InvalidLag):
        unit_autocov([1, 2, 3], 3)
    with pytest.raises(InvalidLag):
        unit_autocov([1, 2, 3], -1)


def test_unit_autocorr_examples():
    assert unit_autocorr([1, 2, 3, 4], 1) == pytest.approx(1 / 3, rel=1e-15)
    with pytest.raises(DegenerateVariance):
        unit_autocorr([7, 7, 7, 7], 1)
    with pytest.raises(InvalidLag):
        unit_autocorr([1, 2, 3, 4], 0)


def test_constant_series_is_exactly_degenerate():
    # float demeaning of a constant can leave tiny residuals; they must not leak
    for v in (0.1, 1 / 3, -123.456, 7e5):
        for T in (5, 12, 13, 48):
            stats = compute_unit_stats(np.full((1, T), v))
            assert stats.gamma[0, 0] == 0.0
            assert stats.degenerate[0]
            assert np.isnan(stats.rho[0, 0])


def test_batch_matches_direct_formula():
    rng = np.random.default_rng(1)
    for _ in range(50):
        T = int(rng.integers(3, 30))
        y = rng.normal(size=T)
        K = int(rng.integers(1, T))
        stats = compute_unit_stats(y[None, :], K)
        for k in range(K + 1):
            assert stats.gamma[0, k] == pytest.approx(direct_autocov(list(y), k), rel=1e-12,
                                                      abs=1e-14)


def test_compute_unit_stats_example():
    stats = compute_unit_stats(Panel([[1, 2, 3, 4], [4, 3, 2, 1]]), 1)
    np.testing.assert_allclose(stats.mu, [2.5, 2.5])
    np.testing.assert_allclose(stats.gamma[:, 0], [1.25, 1.25])
    np.testing.assert_allclose(stats.rho[:, 0], [1 / 3, 1 / 3])
    assert not stats.degenerate.any()


def test_degenerate_row_is_isolated():
    stats = compute_unit_stats(Panel([[1, 2, 3, 5], [2, 2, 2, 2]]), 1)
    assert stats.degenerate.tolist() == [False, True]
    assert np.isfinite(stats.rho[0, 0]) and np.isnan(stats.rho[1, 0])
    assert stats.n_degenerate == 1


def test_max_lag_too_large():
    with pytest.raises(InvalidLag):
        compute_unit_stats(Panel([[1.0, 2.0, 3.0]]), 3)


def test_quantity_selectors():
    stats = compute_unit_stats(Panel([[1, 2, 4, 3, 5]]), 2)
    assert stats.quantity("gamma", 2)[0] == stats.gamma[0, 2]
    assert stats.quantity("rho", 2)[0] == stats.rho[0, 1]
    with pytest.raises(InvalidLag):
        stats.quantity("rho", 3)
    with pytest.raises(InvalidInput):
        stats.quantity("sigma")


# -- Panel invariants ------------------------------------------------------

def test_panel_validation():
    with pytest.raises(InvalidInput):
        Panel([[1.0]])
    with pytest.raises(InvalidInput):
        Panel([[1.0, np.nan]])
    with pytest.raises(InvalidInput):
        Panel([[1.0, 2.0]], time_ids=[2, 1])
    p = Panel([[1.0, 2.0], [3.0, 4.0]], unit_ids=["a", "b"], time_ids=[10, 20])
    assert (p.n_units, p.n_periods) == (2, 2)
    with pytest.raises(ValueError):
        p.values[0, 0] = 9.0


# -- splits ----------------------------------------------------------------

def test_split_even_half():
    groups = split_panel(Panel(np.arange(6.0)[None, :]), "half")
    assert [[g.time_ids for g in grp] for grp in groups] == [[(0, 1, 2), (3, 4, 5)]]


def test_split_odd_half_fourway():
    scheme = split_scheme(7, "half")
    assert scheme.kind == "half-odd-fourway"
    # (1..4),(5..7) and (1..3),(4..7) in 1-based periods
    assert scheme.segments == (((0, 4), (4, 7)), ((0, 3), (3, 7)))
    assert [b - a for a, b in scheme.windows] == [4, 3, 3, 4]


def test_split_thirds():
    assert split_scheme(6, "thirds").segments == (((0, 2), (2, 4), (4, 6)),)
    rot = split_scheme(13, "thirds")
    assert len(rot.segments) == 3
    lengths = sorted(tuple(b - a for a, b in g) for g in rot.segments)
    assert lengths == [(4, 4, 5), (4, 5, 4), (5, 4, 4)]


@pytest.mark.parametrize("T", range(6, 40))
@pytest.mark.parametrize("kind", ["half", "thirds"])
def test_split_groups_partition(T, kind):
    for group in split_scheme(T, kind).segments:
        assert group[0][0] == 0 and group[-1][1] == T
        assert all(a[1] == b[0] for a, b in zip(group, group[1:]))


def test_split_too_short():
    with pytest.raises(PanelTooShort):
        split_scheme(3, "half")
    with pytest.raises(PanelTooShort):
        split_scheme(5, "thirds")


# -- properties ------------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(panels)
def test_half_means_average_to_full_mean(values):
    if values.shape[1] % 2:
        values = values[:, :-1]
    full = compute_unit_stats(values, 1).mu
    a, b = split_panel(Panel(values), "half")[0]
    halves = (compute_unit_stats(a, 1).mu + compute_unit_stats(b, 1).mu) / 2
    np.testing.assert_allclose(full, halves, rtol=1e-12, atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(panels, st.floats(-100, 100), st.floats(0.1, 10))
def test_location_and_scale(values, c, s):
    base = compute_unit_stats(values, 2)
    shifted = compute_unit_stats(values + c, 2)
    scaled = compute_unit_stats(values * s, 2)
    np.testing.assert_allclose(shifted.mu, base.mu + c, rtol=1e-12, atol=1e-9)
    np.testing.assert_allclose(shifted.gamma, base.gamma, rtol=1e-7, atol=1e-7)
    np.testing.assert_allclose(scaled.gamma, base.gamma * s * s, rtol=1e-9, atol=1e-9)
    ok = ~base.degenerate & (base.gamma[:, 0] > 1e-6)
    np.testing.assert_allclose(scaled.rho[ok], base.rho[ok], rtol=1e-8, atol=1e-10)
    assert (base.gamma[:, 0] >= 0).all()


@settings(max_examples=40, deadline=None)
@given(panels, st.randoms(use_true_random=False))
def test_unit_permutation_equivariance(values, rnd):
    perm = list(range(values.shape[0]))
    rnd.shuffle(perm)
    a = compute_unit_stats(values, 1)
    b = compute_unit_stats(values[perm], 1)
    np.testing.assert_array_equal(a.gamma[perm], b.gamma)
    np.testing.assert_array_equal(a.mu[perm], b.mu)
