"""Acceptance gate: closed forms, oracle equivalence, planted recovery.

Each test prints one ``criterion N: PASS/FAIL (...)`` line (visible with
``pytest -s``) before asserting, so a full run reads as a checklist.
"""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from comove import (
    CorrelationMatrix,
    DiffusionSpec,
    DistanceMatrix,
    PipelineConfig,
    TickSeries,
    binwise_correlations,
    chain_embed,
    eigendecompose,
    equicorrelated,
    hayashi_yoshida,
    kernels,
    mds_embed,
    mean_distance_from_center,
    pearson_windowed,
    planted_daily,
    realized_covariance,
    run_intraday_pipeline,
    simulate_asynchronous_ticks,
    simulate_planted_panel,
    simulate_sessions,
    to_distance,
    trading_days,
    write_ticks_csv,
    WindowSpec,
    average_pairwise_correlation,
    default_symbols,
    market_mode_strength,
)
from _helpers import brute_hy_sum, random_walk_ticks, spearman, strict_times

NS = 1_000_000_000


def report(num: int, ok: bool, detail: str) -> bool:
    print(f"criterion {num}: {'PASS' if ok else 'FAIL'} ({detail})")
    return ok


def rel_err(a: float, b: float) -> float:
    scale = max(abs(a), abs(b), 1e-300)
    return abs(a - b) / scale


def test_criterion_01_hy_equals_realized_on_synchronous_grids():
    rng = np.random.default_rng(100)
    t0 = time.perf_counter()
    worst = 0.0
    for trial in range(50):
        n_ticks = int(round(10 ** rng.uniform(1.0, 4.0)))
        times = strict_times(rng, n_ticks, span=86_400 * NS)
        rho = float(rng.uniform(0.2, 0.9))
        px, py = random_walk_ticks(rng, times, rho)
        x = TickSeries("AA", times, px)
        y = TickSeries("BB", times, py)
        hy = hayashi_yoshida(x, y)
        rc = realized_covariance(x, y, grid_times=times)
        worst = max(worst, rel_err(hy.covariance, rc.covariance),
                    rel_err(hy.correlation, rc.correlation))
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-12 and elapsed < 5.0
    assert report(1, ok,
                  f"50 synchronous pairs, worst relative gap {worst:.2e}, "
                  f"{elapsed:.2f}s")


@pytest.fixture(scope="module")
def asynchronous_paths():
    """100 two-asset sessions at the criterion-2 settings, pre-estimated."""
    spec = DiffusionSpec(
        symbols=("AA", "BB"),
        correlation=equicorrelated(2, 0.6),
        vols=2e-4,
        tick_rates=np.array([0.10, 0.14]),
        session_length_s=6 * 3600.0,
    )
    intervals = (5.0, 60.0, 300.0)
    hy_corrs = np.empty(100)
    rc_corrs = np.empty((100, len(intervals)))
    t0 = time.perf_counter()
    for trial in range(100):
        x, y = simulate_asynchronous_ticks(spec, seed=1000 + trial)
        hy_corrs[trial] = hayashi_yoshida(x, y).correlation
    hy_elapsed = time.perf_counter() - t0
    for trial in range(100):
        x, y = simulate_asynchronous_ticks(spec, seed=1000 + trial)
        for c, interval in enumerate(intervals):
            rc_corrs[trial, c] = realized_covariance(x, y, interval).correlation
    return {
        "hy": hy_corrs,
        "rc": rc_corrs,
        "intervals": intervals,
        "hy_elapsed": hy_elapsed,
    }


def test_criterion_02_hy_consistency_on_asynchronous_paths(asynchronous_paths):
    hy = asynchronous_paths["hy"]
    mean = float(hy.mean())
    std = float(hy.std(ddof=1))
    elapsed = asynchronous_paths["hy_elapsed"]
    ok = abs(mean - 0.6) < 0.05 and elapsed < 60.0
    assert report(2, ok,
                  f"100 paths, mean HY correlation {mean:.4f} vs 0.6, "
                  f"sample std {std:.4f}, {elapsed:.2f}s")


def test_criterion_03_sweep_equals_brute_force():
    rng = np.random.default_rng(300)
    mismatches = 0
    for _ in range(200):
        nx = int(rng.integers(2, 101))
        ny = int(rng.integers(2, 101))
        tx = strict_times(rng, nx)
        sy = strict_times(rng, ny)
        rx = rng.standard_normal(nx - 1)
        ry = rng.standard_normal(ny - 1)
        if kernels.hy_sum(tx, rx, sy, ry) != brute_hy_sum(tx, rx, sy, ry):
            mismatches += 1
    ok = mismatches == 0
    assert report(3, ok, f"200 instances, {mismatches} sweep/brute mismatches")


def test_criterion_04_epps_ordering(asynchronous_paths):
    rc_means = asynchronous_paths["rc"].mean(axis=0)
    hy_mean = float(asynchronous_paths["hy"].mean())
    ordered = rc_means[0] < rc_means[1] < rc_means[2]
    hy_ok = abs(hy_mean - 0.6) < 0.05
    ok = bool(ordered and hy_ok)
    assert report(4, ok,
                  "grid correlations "
                  + " < ".join(f"{m:.3f}@{int(s)}s" for m, s in
                               zip(rc_means, asynchronous_paths["intervals"]))
                  + f", HY {hy_mean:.3f} grid-free")


def test_criterion_05_trace_invariant():
    rng = np.random.default_rng(500)
    worst = 0.0
    for _ in range(100):
        m = np.corrcoef(rng.standard_normal((40, 80)))
        spec = eigendecompose(m)
        worst = max(worst, abs(float(spec.eigenvalues.sum()) - 40.0))
    ok = worst < 1e-9
    assert report(5, ok, f"100 matrices N=40, worst |trace - 40| {worst:.2e}")


def test_criterion_06_equicorrelated_closed_form():
    spec = eigendecompose(equicorrelated(40, 0.3))
    top = market_mode_strength(spec)
    top_err = abs(top - 0.3175)
    bulk_err = float(np.abs(spec.eigenvalues[1:] - 0.7).max())
    ok = top_err < 1e-9 and bulk_err < 1e-9
    assert report(6, ok,
                  f"lambda1/N {top:.12f} (err {top_err:.2e}), "
                  f"bulk err {bulk_err:.2e}")


def test_criterion_07_distance_endpoints_exact():
    results = []
    for rho, want in ((1.0, 0.0), (0.0, math.sqrt(2.0)), (-1.0, 2.0)):
        corr = CorrelationMatrix(("A", "B"),
                                 np.array([[1.0, rho], [rho, 1.0]]), "test")
        got = to_distance(corr).values[0, 1]
        results.append(got == want)
    ok = all(results)
    assert report(7, ok,
                  "rho 1/0/-1 -> d 0, sqrt 2, 2 exact: "
                  + "/".join("yes" if r else "no" for r in results))


def test_criterion_08_mds_planted_recovery():
    rng = np.random.default_rng(800)
    worst_rms_frac = 0.0
    worst_stress = 0.0
    worst_elapsed = 0.0
    for trial in range(10):
        points = rng.uniform(-0.5, 0.5, size=(20, 2))
        points = points - points.mean(axis=0)
        delta = points[:, None, :] - points[None, :, :]
        d = np.sqrt((delta * delta).sum(axis=2))
        diameter = float(d.max())
        dist = DistanceMatrix(tuple(f"P{i:02d}" for i in range(20)), d)
        t0 = time.perf_counter()
        emap = mds_embed(dist, seed=trial)
        elapsed = time.perf_counter() - t0
        from comove.embedding import align_coords
        aligned = align_coords(emap.coords, points)
        rms = float(np.sqrt(((aligned - points) ** 2).sum(axis=1).mean()))
        worst_rms_frac = max(worst_rms_frac, rms / diameter)
        worst_stress = max(worst_stress, emap.stress)
        worst_elapsed = max(worst_elapsed, elapsed)
    ok = (worst_rms_frac < 0.02 and worst_stress < 1e-4
          and worst_elapsed < 30.0)
    assert report(8, ok,
                  f"10 planted maps N=20, worst rms {worst_rms_frac:.2e} of "
                  f"diameter, worst stress {worst_stress:.2e}, "
                  f"slowest {worst_elapsed:.2f}s")


def test_criterion_09_three_way_intraday_consistency():
    k_bins = 12
    rho = np.linspace(0.1, 0.7, k_bins)
    panel = simulate_planted_panel(40, k_bins, 50, rho=rho, seed=0)
    mats = binwise_correlations(panel)
    lam = np.array([market_mode_strength(eigendecompose(m)) for m in mats])
    avg = np.array([average_pairwise_correlation(m) for m in mats])
    dist_series = np.empty(k_bins)
    for k, m in enumerate(mats):
        emap = mds_embed(to_distance(m), seed=0)
        dist_series[k] = mean_distance_from_center(emap)
    ks = np.arange(k_bins)
    s_lam = spearman(lam, ks)
    s_avg = spearman(avg, ks)
    s_dist = spearman(dist_series, ks)
    ok = s_lam > 0.9 and s_avg > 0.9 and s_dist < -0.9
    assert report(9, ok,
                  f"spearman vs bin: lambda1/N {s_lam:+.3f}, "
                  f"avg corr {s_avg:+.3f}, mean distance {s_dist:+.3f}")


def test_criterion_10_chain_stability_on_repeated_matrix():
    rng = np.random.default_rng(1000)
    corr = np.corrcoef(rng.standard_normal((20, 60)))
    symbols = tuple(f"S{i:02d}" for i in range(20))
    dist = to_distance(CorrelationMatrix(symbols, corr, "test"))
    maps = chain_embed([dist] * 5, seed=4)
    cold_stress = mds_embed(dist, seed=4).stress
    norm = float(np.sqrt((maps[0].coords ** 2).sum(axis=1)).mean())
    worst_step = 0.0
    for prev, cur in zip(maps, maps[1:]):
        step_rms = float(np.sqrt(((cur.coords - prev.coords) ** 2)
                                 .sum(axis=1).mean()))
        worst_step = max(worst_step, step_rms)
    worst_cost_gap = max(abs(m.final_cost - cold_stress) for m in maps)
    ok = (worst_step < 0.05 * norm
          and worst_cost_gap <= 0.10 * abs(cold_stress))
    assert report(10, ok,
                  f"worst aligned step rms {worst_step:.2e} vs 5% of norm "
                  f"{0.05 * norm:.2e}, worst cost gap {worst_cost_gap:.2e} "
                  f"vs 10% of cold stress {0.10 * abs(cold_stress):.2e}")


def test_criterion_11_regime_switch_detection():
    t = 120
    profile = np.concatenate([np.full(60, 0.2), np.full(60, 0.8)])
    panel = planted_daily(trading_days("2019-01-07", t), 25, rho=profile,
                          scale=0.01, seed=11)
    wins = pearson_windowed(panel, WindowSpec(20, 20))
    dists = [to_distance(w.corr) for w in wins]
    maps = chain_embed(dists, seed=0)
    series = np.array([mean_distance_from_center(m) for m in maps])
    before = float(series[:3].mean())
    after = float(series[3:].mean())
    ok = after < 0.6 * before
    assert report(11, ok,
                  f"mean map distance before {before:.3f}, after {after:.3f}, "
                  f"ratio {after / before:.2f} < 0.60")


def test_criterion_12_pipeline_determinism(tmp_path):
    spec = DiffusionSpec(
        symbols=default_symbols(3),
        correlation=equicorrelated(3, 0.5),
        vols=2e-4,
        tick_rates=0.3,
        session_length_s=3600.0,
        seed=12,
    )
    series = simulate_sessions(spec, trading_days("2020-01-06", 2), 36_000)
    data = tmp_path / "ticks.csv"
    write_ticks_csv(data, series)

    def run(out: Path):
        config = PipelineConfig(
            mode="intraday-ticks", input=str(data), out=str(out),
            session="10:00-11:00", bin_width=900, seed=3,
        )
        run_intraday_pipeline(config)
        return {p.relative_to(out).as_posix(): p.read_bytes()
                for p in sorted(out.rglob("*")) if p.is_file()}

    first = run(tmp_path / "run1")
    second = run(tmp_path / "run2")
    same_names = set(first) == set(second)
    same_bytes = same_names and all(first[k] == second[k] for k in first)
    ok = bool(same_bytes)
    assert report(12, ok,
                  f"{len(first)} artifacts, identical names "
                  f"{'yes' if same_names else 'no'}, identical bytes "
                  f"{'yes' if same_bytes else 'no'}")
