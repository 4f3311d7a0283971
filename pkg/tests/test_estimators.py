"""Dispersion, Pearson and asynchronous-covariance estimators."""

import math

import numpy as np
import pytest

from comove import (
    BinGrid,
    BinnedReturnPanel,
    CorrelationMatrix,
    DailyPanel,
    EstimationWarning,
    InsufficientDataError,
    TickSeries,
    ValidationError,
    WindowSpec,
    average_correlations,
    average_pairwise_correlation,
    binwise_correlation,
    binwise_correlations,
    dispersion,
    hayashi_yoshida,
    hy_bin_matrices,
    hy_correlation_matrix,
    normalize_panel,
    pearson_windowed,
    realized_covariance,
    sync_grid,
    temporal_moments,
)
from _helpers import brute_hy_sum, random_walk_ticks, strict_times

NS = 1_000_000_000


def make_panel(values, bin_width=60):
    values = np.asarray(values, dtype=np.float64)
    n, k, t = values.shape
    days = [str(np.datetime64("2020-01-06") + i) for i in range(t)]
    grid = BinGrid(0, bin_width * k, bin_width, tuple(days))
    symbols = tuple(f"S{i:02d}" for i in range(n))
    return BinnedReturnPanel(symbols, grid, values)


def walk_ticks(symbol, times, prices):
    return TickSeries(symbol, np.asarray(times, dtype=np.int64),
                      np.asarray(prices, dtype=np.float64))


class TestMoments:
    def test_hand_example(self):
        # one asset, one bin, three days: values 1, 2, 3
        panel = make_panel(np.array([[[1.0, 2.0, 3.0]]]))
        mom = temporal_moments(panel)
        assert mom.mu[0, 0] == pytest.approx(2.0)
        assert mom.sigma[0, 0] == pytest.approx(math.sqrt(2.0 / 3.0))

    def test_ignores_missing(self):
        panel = make_panel(np.array([[[1.0, np.nan, 3.0]]]))
        mom = temporal_moments(panel)
        assert mom.mu[0, 0] == pytest.approx(2.0)
        assert mom.sigma[0, 0] == pytest.approx(1.0)

    def test_all_missing(self):
        panel = make_panel(np.array([[[np.nan, np.nan]]]))
        mom = temporal_moments(panel)
        assert np.isnan(mom.mu[0, 0]) and np.isnan(mom.sigma[0, 0])


class TestDispersion:
    def test_hand_example(self):
        # three assets in one (bin, day): returns 1, 2, 3
        panel = make_panel(np.array([[[1.0]], [[2.0]], [[3.0]]]))
        disp = dispersion(panel)
        assert disp.mu_d[0, 0] == pytest.approx(2.0)
        assert disp.sigma_d[0, 0] == pytest.approx(math.sqrt(2.0 / 3.0))

    def test_min_assets(self):
        panel = make_panel(np.array([[[1.0]], [[np.nan]], [[np.nan]]]))
        assert np.isnan(dispersion(panel, min_assets=2).mu_d[0, 0])
        assert dispersion(panel, min_assets=1).mu_d[0, 0] == 1.0

    def test_day_averages(self):
        panel = make_panel(np.array([[[1.0, 5.0]], [[-1.0, 1.0]]]))
        disp = dispersion(panel)
        # mu_d per day: 0 and 3; sigma_d per day: 1 and 2
        assert disp.mean_abs_mu()[0] == pytest.approx(1.5)
        assert disp.mean_sigma()[0] == pytest.approx(1.5)

    def test_normalize_variance_is_one(self):
        rng = np.random.default_rng(3)
        panel = make_panel(rng.standard_normal((6, 4, 30)) * 0.01)
        scaled = normalize_panel(panel, dispersion(panel))
        for k in range(4):
            for t in range(30):
                col = scaled.values[:, k, t]
                assert np.var(col) == pytest.approx(1.0, abs=1e-12)

    def test_normalize_warns_on_lost_cells(self):
        values = np.zeros((3, 1, 1))  # zero dispersion wipes the cell
        panel = make_panel(values)
        with pytest.warns(EstimationWarning, match="dropped 3"):
            scaled = normalize_panel(panel, dispersion(panel))
        assert np.isnan(scaled.values).all()


class TestBinwisePearson:
    def test_perfect_pairs(self):
        t = np.arange(10, dtype=np.float64)
        values = np.stack([t, 2.0 * t + 1.0, -t])[:, None, :]
        corr = binwise_correlation(make_panel(values), 0)
        assert corr.values[0, 1] == pytest.approx(1.0, abs=1e-12)
        assert corr.values[0, 2] == pytest.approx(-1.0, abs=1e-12)
        assert corr.estimator == "pearson-binned"

    def test_support_counts_common_days(self):
        x = np.array([1.0, 2.0, np.nan, 4.0, 5.0])
        y = np.array([2.0, np.nan, 3.0, 5.0, 4.0])
        values = np.stack([x, y])[:, None, :]
        corr = binwise_correlation(make_panel(values), 0)
        assert corr.support[0, 1] == 3

    def test_pairwise_complete_matches_manual(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal(40)
        y = x * 0.6 + rng.standard_normal(40) * 0.8
        y[::7] = np.nan
        values = np.stack([x, y])[:, None, :]
        corr = binwise_correlation(make_panel(values), 0)
        good = np.isfinite(y)
        manual = np.corrcoef(x[good], y[good])[0, 1]
        assert corr.values[0, 1] == pytest.approx(manual, abs=1e-12)

    def test_thin_overlap_is_nan(self):
        x = np.array([1.0, np.nan, np.nan, 4.0])
        y = np.array([np.nan, 2.0, 3.0, 5.0])
        values = np.stack([x, y])[:, None, :]
        corr = binwise_correlation(make_panel(values), 0)
        assert np.isnan(corr.values[0, 1])
        assert corr.support[0, 1] == 1

    def test_zero_variance_warns(self):
        values = np.stack([np.ones(5), np.arange(5.0)])[:, None, :]
        with pytest.warns(EstimationWarning, match="zero variance"):
            corr = binwise_correlation(make_panel(values), 0)
        assert np.isnan(corr.values[0, 1])

    def test_bin_out_of_range(self):
        panel = make_panel(np.zeros((2, 3, 4)))
        with pytest.raises(ValidationError):
            binwise_correlation(panel, 3)

    def test_one_matrix_per_bin(self):
        panel = make_panel(np.random.default_rng(0).standard_normal((3, 4, 9)))
        mats = binwise_correlations(panel)
        assert len(mats) == 4
        assert all(m.estimator == "pearson-binned" for m in mats)


class TestWindowed:
    def daily(self, values):
        values = np.asarray(values, dtype=np.float64)
        days = [str(np.datetime64("2020-01-06") + i)
                for i in range(values.shape[1])]
        symbols = tuple(f"S{i:02d}" for i in range(values.shape[0]))
        return DailyPanel(symbols, tuple(days), values)

    def test_window_count(self):
        panel = self.daily(np.random.default_rng(1).standard_normal((3, 25)))
        wins = pearson_windowed(panel, WindowSpec(10, 5))
        assert len(wins) == (25 - 10) // 5 + 1
        assert [w.start for w in wins] == [0, 5, 10, 15]
        assert wins[1].days == panel.days[5:15]

    def test_affine_invariance(self):
        rng = np.random.default_rng(2)
        values = rng.standard_normal((4, 30))
        shifted = values * 3.5 - 0.2
        a = pearson_windowed(self.daily(values), WindowSpec(15, 15))
        b = pearson_windowed(self.daily(shifted), WindowSpec(15, 15))
        for wa, wb in zip(a, b):
            np.testing.assert_allclose(wa.corr.values, wb.corr.values,
                                       atol=1e-12)

    def test_too_few_days(self):
        panel = self.daily(np.zeros((2, 5)))
        with pytest.raises(InsufficientDataError):
            pearson_windowed(panel, WindowSpec(10, 1))

    def test_spec_validation(self):
        with pytest.raises(ValidationError):
            WindowSpec(1, 1)
        with pytest.raises(ValidationError):
            WindowSpec(5, 0)


class TestRealized:
    def test_self_covariance_is_sum_of_squares(self):
        times = np.arange(0, 601, 10, dtype=np.int64) * NS
        rng = np.random.default_rng(4)
        prices = np.exp(np.cumsum(rng.standard_normal(times.size)) * 1e-3)
        s = walk_ticks("AA", times, prices)
        res = realized_covariance(s, s, 10.0)
        rets = np.diff(np.log(prices))
        assert res.covariance == pytest.approx(float(rets @ rets), rel=1e-12)
        assert res.correlation == pytest.approx(1.0)
        assert res.n_intervals == times.size - 1

    def test_previous_tick_sampling(self):
        # y trades only twice; its sampled path is a step function
        x = walk_ticks("AA", [0, 10 * NS, 20 * NS], [1.0, 2.0, 4.0])
        y = walk_ticks("BB", [0, 15 * NS], [1.0, 3.0])
        res = realized_covariance(x, y, 5.0)
        # y moves only in the (10s, 15s] grid interval, where x is flat
        # at grid points 10 and 15; x's jump lands at 20s where y is flat
        assert res.covariance == pytest.approx(0.0, abs=1e-15)

    def test_explicit_grid(self):
        x = walk_ticks("AA", [0, 10 * NS, 20 * NS], [1.0, 2.0, 4.0])
        grid = np.array([0, 20 * NS], dtype=np.int64)
        res = realized_covariance(x, x, grid_times=grid)
        assert res.covariance == pytest.approx(np.log(4.0) ** 2, rel=1e-12)
        assert res.n_intervals == 1

    def test_grid_helper_validates(self):
        with pytest.raises(ValidationError):
            sync_grid(0, 100, 0.0)

    def test_needs_ticks(self):
        x = walk_ticks("AA", [0], [1.0])
        y = walk_ticks("BB", [0, NS], [1.0, 1.1])
        with pytest.raises(InsufficientDataError):
            realized_covariance(x, y, 1.0)


class TestHayashiYoshida:
    def test_hand_example(self):
        # x spans (0, 10] with return log 2; y spans (5, 12] with log 3.
        # The single overlapping pair contributes log 2 * log 3.
        x = walk_ticks("AA", [0, 10 * NS], [1.0, 2.0])
        y = walk_ticks("BB", [5 * NS, 12 * NS], [1.0, 3.0])
        res = hayashi_yoshida(x, y)
        assert res.covariance == pytest.approx(np.log(2.0) * np.log(3.0),
                                               rel=1e-14)

    def test_disjoint_intervals_contribute_nothing(self):
        x = walk_ticks("AA", [0, 5 * NS], [1.0, 2.0])
        y = walk_ticks("BB", [5 * NS, 9 * NS], [1.0, 3.0])
        # x's interval is (0, 5], y's is (5, 9]: no overlap
        assert hayashi_yoshida(x, y).covariance == 0.0

    def test_touching_half_open_boundary(self):
        x = walk_ticks("AA", [0, 5 * NS, 9 * NS], [1.0, 2.0, 2.0])
        y = walk_ticks("BB", [0, 5 * NS], [1.0, 3.0])
        res = hayashi_yoshida(x, y)
        # only x's first interval overlaps y's (0, 5]
        assert res.covariance == pytest.approx(np.log(2.0) * np.log(3.0),
                                               rel=1e-14)

    def test_argument_order_bitwise(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            tx = strict_times(rng, rng.integers(2, 40))
            ty = strict_times(rng, rng.integers(2, 40))
            px = np.exp(rng.standard_normal(tx.size) * 0.01)
            py = np.exp(rng.standard_normal(ty.size) * 0.01)
            x = walk_ticks("AA", tx, px)
            y = walk_ticks("BB", ty, py)
            ab = hayashi_yoshida(x, y)
            ba = hayashi_yoshida(y, x)
            assert ab.covariance == ba.covariance
            assert ab.correlation == ba.correlation

    def test_matches_quadratic_reference(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            tx = strict_times(rng, rng.integers(2, 30))
            ty = strict_times(rng, rng.integers(2, 30))
            px = np.exp(rng.standard_normal(tx.size) * 0.01)
            py = np.exp(rng.standard_normal(ty.size) * 0.01)
            x = walk_ticks("AA", tx, px)
            y = walk_ticks("BB", ty, py)
            got = hayashi_yoshida(x, y).covariance
            kx = (int(tx[0]), tx.size, "AA")
            ky = (int(ty[0]), ty.size, "BB")
            a, b = ((tx, px), (ty, py)) if kx <= ky else ((ty, py), (tx, px))
            want = brute_hy_sum(a[0], np.diff(np.log(a[1])),
                                b[0], np.diff(np.log(b[1])))
            assert got == want

    def test_price_scale_invariance(self):
        rng = np.random.default_rng(8)
        t = strict_times(rng, 25)
        p = np.exp(rng.standard_normal(25) * 0.01)
        x = walk_ticks("AA", t, p)
        x_scaled = walk_ticks("AA", t, p * 1000.0)
        y = walk_ticks("BB", strict_times(rng, 25),
                       np.exp(rng.standard_normal(25) * 0.01))
        a = hayashi_yoshida(x, y)
        b = hayashi_yoshida(x_scaled, y)
        assert b.covariance == pytest.approx(a.covariance, rel=1e-12)
        assert b.correlation == pytest.approx(a.correlation, rel=1e-12)

    def test_synchronous_equals_realized(self):
        rng = np.random.default_rng(9)
        times = np.arange(0, 2001, 5, dtype=np.int64) * NS
        px, py = random_walk_ticks(rng, times, 0.7)
        x = walk_ticks("AA", times, px)
        y = walk_ticks("BB", times, py)
        hy = hayashi_yoshida(x, y)
        rc = realized_covariance(x, y, grid_times=times)
        assert hy.covariance == pytest.approx(rc.covariance, rel=1e-12)
        assert hy.correlation == pytest.approx(rc.correlation, rel=1e-12)

    def test_window_restriction(self):
        x = walk_ticks("AA", [0, 10 * NS, 20 * NS, 30 * NS],
                       [1.0, 2.0, 4.0, 8.0])
        y = walk_ticks("BB", [0, 10 * NS, 20 * NS, 30 * NS],
                       [1.0, 3.0, 9.0, 27.0])
        full = hayashi_yoshida(x, y)
        part = hayashi_yoshida(x, y, start=0, end=20 * NS)
        assert part.covariance == pytest.approx(2 * np.log(2.0) * np.log(3.0),
                                                rel=1e-12)
        assert part.covariance < full.covariance

    def test_too_few_ticks(self):
        x = walk_ticks("AA", [0, 10 * NS], [1.0, 2.0])
        y = walk_ticks("BB", [5 * NS], [1.0])
        with pytest.raises(InsufficientDataError):
            hayashi_yoshida(x, y)


class TestHYMatrix:
    def build_set(self, rng, n=4, n_ticks=60):
        out = []
        for i in range(n):
            t = strict_times(rng, n_ticks)
            p = np.exp(np.cumsum(rng.standard_normal(n_ticks)) * 1e-3 + 1.0)
            out.append(walk_ticks(f"S{i:02d}", t, p))
        return out

    def test_matches_pairwise_calls(self):
        rng = np.random.default_rng(10)
        ticks = self.build_set(rng)
        mat = hy_correlation_matrix(ticks)
        for i in range(4):
            for j in range(i + 1, 4):
                want = hayashi_yoshida(ticks[i], ticks[j]).correlation
                assert mat.values[i, j] == pytest.approx(want, abs=1e-12)
        assert mat.estimator == "hayashi-yoshida"

    def test_workers_do_not_change_result(self):
        rng = np.random.default_rng(11)
        ticks = self.build_set(rng, n=6)
        one = hy_correlation_matrix(ticks, workers=1)
        four = hy_correlation_matrix(ticks, workers=4)
        assert np.array_equal(one.values, four.values)

    def test_thin_asset_gets_nan_row(self):
        rng = np.random.default_rng(12)
        ticks = self.build_set(rng, n=3)
        ticks.append(walk_ticks("S99", [5 * NS], [1.0]))
        with pytest.warns(EstimationWarning, match="fewer than 2"):
            mat = hy_correlation_matrix(ticks)
        assert np.isnan(mat.values[3]).all()
        assert np.isfinite(mat.values[0, 1])

    def test_overshoot_clipped_with_warning(self):
        # two ticks each, same spans: correlation is exactly |1| by
        # construction, so force an overshoot with a crafted pair where
        # the overlap double-counts
        x = walk_ticks("AA", [0, 10 * NS, 20 * NS], [1.0, 2.0, 4.0])
        y = walk_ticks("BB", [0, 15 * NS], [1.0, 4.0])
        raw = hayashi_yoshida(x, y)
        mat = None
        if abs(raw.correlation) > 1.0:
            with pytest.warns(EstimationWarning, match="clipped"):
                mat = hy_correlation_matrix([x, y])
            assert abs(mat.values[0, 1]) == 1.0
        else:
            mat = hy_correlation_matrix([x, y])
            assert abs(mat.values[0, 1]) <= 1.0

    def test_duplicate_symbols(self):
        x = walk_ticks("AA", [0, NS], [1.0, 2.0])
        with pytest.raises(ValidationError):
            hy_correlation_matrix([x, x])

    def test_bin_matrices_shape(self):
        rng = np.random.default_rng(13)
        ticks = []
        for i in range(3):
            t = strict_times(rng, 400, start=0, span=7_200 * NS)
            p = np.exp(np.cumsum(rng.standard_normal(400)) * 1e-3 + 1.0)
            ticks.append(walk_ticks(f"S{i:02d}", t, p))
        grid = BinGrid(0, 7200, 3600, ("1970-01-01",))
        per_day = hy_bin_matrices(ticks, grid)
        assert len(per_day) == 1 and len(per_day[0]) == 2
        assert per_day[0][0].symbols == ("S00", "S01", "S02")


class TestAveraging:
    def corr(self, v01, tag="pearson-binned"):
        v = np.array([[1.0, v01], [v01, 1.0]])
        return CorrelationMatrix(("A", "B"), v, tag)

    def test_average_pairwise(self):
        assert average_pairwise_correlation(self.corr(0.4)) == pytest.approx(0.4)
        nan_corr = CorrelationMatrix(
            ("A", "B"), np.array([[1.0, np.nan], [np.nan, 1.0]]), "t")
        assert math.isnan(average_pairwise_correlation(nan_corr))

    def test_elementwise_mean_skips_nan(self):
        mats = [self.corr(0.2), self.corr(0.6),
                CorrelationMatrix(("A", "B"),
                                  np.array([[1.0, np.nan], [np.nan, 1.0]]),
                                  "pearson-binned")]
        avg = average_correlations(mats)
        assert avg.values[0, 1] == pytest.approx(0.4)
        assert avg.support[0, 1] == 2
        assert avg.estimator == "pearson-binned+averaged"

    def test_tag_not_doubled(self):
        mats = [self.corr(0.2, "x+averaged"), self.corr(0.4, "x+averaged")]
        assert average_correlations(mats).estimator == "x+averaged"

    def test_mismatched_symbols(self):
        other = CorrelationMatrix(("A", "C"), np.eye(2), "t")
        with pytest.raises(ValidationError):
            average_correlations([self.corr(0.1), other])
