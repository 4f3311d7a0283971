"""Correlation and dispersion estimators for binned, daily and tick data.

Pearson estimators work pairwise-complete: each matrix entry uses the
samples where both assets are observed, and entries with too little
overlap come back NaN with their support count recorded. The
asynchronous-covariance estimator consumes raw ticks and needs no grid.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import kernels
from .data import (
    NS_PER_S,
    BinGrid,
    BinnedReturnPanel,
    CorrelationMatrix,
    DailyPanel,
    TickSeries,
)
from .errors import EstimationWarning, InsufficientDataError, ValidationError


class BinMoments(NamedTuple):
    """Per-asset temporal mean and standard deviation of each bin.

    Both arrays have shape (n_assets, n_bins); statistics run over days,
    ignoring missing cells, with population normalization.
    """

    mu: np.ndarray
    sigma: np.ndarray


def temporal_moments(panel: BinnedReturnPanel) -> BinMoments:
    """Mean and standard deviation of each asset's bin-k return over days."""
    values = panel.values
    defined = np.isfinite(values)
    count = defined.sum(axis=2)
    filled = np.where(defined, values, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        mu = np.where(count > 0, filled.sum(axis=2) / count, np.nan)
        ex2 = np.where(count > 0, (filled * filled).sum(axis=2) / count, np.nan)
    var = np.maximum(ex2 - mu * mu, 0.0)
    return BinMoments(mu, np.sqrt(var))


@dataclass(frozen=True)
class DispersionSeries:
    """Cross-sectional return moments per (bin, day).

    ``mu_d`` and ``sigma_d`` have shape (n_bins, n_days): the mean and
    population standard deviation over assets of each bin's returns on
    each day. Cells observed by too few assets are NaN.
    """

    mu_d: np.ndarray
    sigma_d: np.ndarray

    def mean_abs_mu(self) -> np.ndarray:
        """Day-averaged absolute cross-sectional mean, one value per bin."""
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return np.nanmean(np.abs(self.mu_d), axis=1)

    def mean_sigma(self) -> np.ndarray:
        """Day-averaged cross-sectional dispersion, one value per bin."""
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            return np.nanmean(self.sigma_d, axis=1)


def dispersion(panel: BinnedReturnPanel, min_assets: int = 2) -> DispersionSeries:
    """Cross-sectional mean and dispersion of returns per (bin, day)."""
    if min_assets < 1:
        raise ValidationError(f"min_assets must be >= 1, got {min_assets}")
    values = panel.values
    defined = np.isfinite(values)
    count = defined.sum(axis=0)
    filled = np.where(defined, values, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        mu = np.where(count >= min_assets, filled.sum(axis=0) / count, np.nan)
        ex2 = np.where(count >= min_assets,
                       (filled * filled).sum(axis=0) / count, np.nan)
    var = np.maximum(ex2 - mu * mu, 0.0)
    return DispersionSeries(mu, np.sqrt(var))


def normalize_panel(panel: BinnedReturnPanel,
                    disp: DispersionSeries) -> BinnedReturnPanel:
    """Divide each cell by its (bin, day) cross-sectional dispersion.

    Cells whose dispersion is undefined or zero become NaN; a warning
    reports how many observed returns that wiped out.
    """
    sigma = disp.sigma_d
    if sigma.shape != (panel.n_bins, panel.n_days):
        raise ValidationError(
            f"dispersion shape {sigma.shape} does not match panel "
            f"({panel.n_bins}, {panel.n_days})"
        )
    usable = np.isfinite(sigma) & (sigma > 0.0)
    scaled = np.where(usable[None, :, :], panel.values, np.nan)
    with np.errstate(invalid="ignore", divide="ignore"):
        scaled = scaled / np.where(usable, sigma, 1.0)[None, :, :]
    lost = int((np.isfinite(panel.values) & ~np.isfinite(scaled)).sum())
    if lost:
        warnings.warn(
            f"dropped {lost} returns in cells with undefined dispersion",
            EstimationWarning,
            stacklevel=2,
        )
    return BinnedReturnPanel(panel.symbols, panel.grid, scaled)


def _pairwise_pearson(x: np.ndarray, min_obs: int) -> tuple[np.ndarray, np.ndarray]:
    """Pairwise-complete Pearson correlation of the rows of x.

    Returns the matrix and the per-pair common-sample counts. Pairs with
    fewer than ``min_obs`` common samples, or zero variance over them,
    are NaN.
    """
    mask = np.isfinite(x)
    z = np.where(mask, x, 0.0)
    m = mask.astype(np.float64)
    n = m @ m.T
    s = z @ m.T
    p = z @ z.T
    q = (z * z) @ m.T
    with np.errstate(invalid="ignore", divide="ignore"):
        ex = s / n
        ey = s.T / n
        cov = p / n - ex * ey
        vx = np.maximum(q / n - ex * ex, 0.0)
        vy = np.maximum(q.T / n - ey * ey, 0.0)
        corr = cov / np.sqrt(vx * vy)
    enough = n >= min_obs
    corr = np.where(enough, corr, np.nan)
    degenerate = enough & ((vx <= 0.0) | (vy <= 0.0))
    if degenerate.any():
        corr[degenerate] = np.nan
        warnings.warn(
            f"{int(np.triu(degenerate, 1).sum())} pairs with zero variance "
            "over their common samples",
            EstimationWarning,
            stacklevel=3,
        )
    corr = 0.5 * (corr + corr.T)
    counts = mask.sum(axis=1)
    var_self = np.maximum(np.diagonal(q) / np.maximum(np.diagonal(n), 1)
                          - np.diagonal(ex) ** 2, 0.0)
    diag_ok = (counts >= min_obs) & (var_self > 0.0)
    np.fill_diagonal(corr, np.where(diag_ok, 1.0, np.nan))
    return corr, n.astype(np.int64)


def binwise_correlation(panel: BinnedReturnPanel, k: int,
                        min_days: int = 2) -> CorrelationMatrix:
    """Correlation of bin k's returns across days, pairwise-complete."""
    if not 0 <= k < panel.n_bins:
        raise ValidationError(f"bin {k} out of range [0, {panel.n_bins})")
    if panel.n_days < min_days:
        raise InsufficientDataError(
            f"{panel.n_days} days, need at least {min_days}"
        )
    corr, support = _pairwise_pearson(panel.bin_matrix(k), min_days)
    return CorrelationMatrix(panel.symbols, corr, "pearson-binned", support)


def binwise_correlations(panel: BinnedReturnPanel,
                         min_days: int = 2) -> list[CorrelationMatrix]:
    """One binwise correlation matrix per bin, in bin order."""
    return [binwise_correlation(panel, k, min_days) for k in range(panel.n_bins)]


@dataclass(frozen=True)
class WindowSpec:
    """Rolling window over trading days: ``width`` days advancing by ``step``."""

    width: int
    step: int

    def __post_init__(self) -> None:
        if self.width < 2:
            raise ValidationError(f"window width must be >= 2, got {self.width}")
        if self.step < 1:
            raise ValidationError(f"window step must be >= 1, got {self.step}")

    def starts(self, n_days: int) -> range:
        if n_days < self.width:
            raise InsufficientDataError(
                f"{n_days} days cannot fit a {self.width}-day window"
            )
        return range(0, n_days - self.width + 1, self.step)


class WindowCorrelation(NamedTuple):
    """Correlation matrix of one window, tagged with its day span."""

    start: int
    days: tuple[str, ...]
    corr: CorrelationMatrix


def pearson_windowed(panel: DailyPanel, window: WindowSpec,
                     min_obs: int = 2) -> list[WindowCorrelation]:
    """Pearson correlation matrices over rolling daily windows.

    The number of windows is floor((T - width) / step) + 1. Entries in a
    window fall back to NaN when the pair shares fewer than ``min_obs``
    observed days.
    """
    out = []
    for start in window.starts(panel.n_days):
        block = panel.values[:, start:start + window.width]
        corr, support = _pairwise_pearson(block, min_obs)
        out.append(WindowCorrelation(
            start,
            panel.days[start:start + window.width],
            CorrelationMatrix(panel.symbols, corr, "pearson-daily", support),
        ))
    return out


class RealizedResult(NamedTuple):
    """Grid-sampled covariance and correlation plus the interval count."""

    covariance: float
    correlation: float
    n_intervals: int


def sync_grid(start: int, end: int, interval_s: float) -> np.ndarray:
    """Regular sample times from start to end (ns), spaced interval_s apart."""
    if interval_s <= 0:
        raise ValidationError(f"sample interval must be positive, got {interval_s}")
    step = int(round(interval_s * NS_PER_S))
    if step <= 0 or end < start:
        raise ValidationError("empty sampling grid")
    return np.arange(start, end + 1, step, dtype=np.int64)


def realized_covariance(x: TickSeries, y: TickSeries,
                        sample_interval: float | None = None,
                        *, grid_times: np.ndarray | None = None,
                        start: int | None = None,
                        end: int | None = None) -> RealizedResult:
    """Previous-tick realized covariance on a synchronous grid.

    Both series are sampled at the grid times (last trade at or before
    each), and the covariance is the inner product of the sampled
    log-return vectors, without demeaning. Give either ``sample_interval``
    in seconds, which lays a regular grid from the later first tick to
    the earlier last tick, or explicit ``grid_times``.
    """
    if len(x) < 2 or len(y) < 2:
        raise InsufficientDataError("need at least 2 ticks on each series")
    if grid_times is None:
        if sample_interval is None:
            raise ValidationError("give sample_interval or grid_times")
        lo = max(int(x.times[0]), int(y.times[0])) if start is None else int(start)
        hi = min(int(x.times[-1]), int(y.times[-1])) if end is None else int(end)
        grid_times = sync_grid(lo, hi, sample_interval)
    grid_times = np.ascontiguousarray(grid_times, dtype=np.int64)
    if grid_times.ndim != 1 or (grid_times.size > 1
                                and np.any(np.diff(grid_times) <= 0)):
        raise ValidationError("grid times must be strictly increasing")

    def sample(series: TickSeries) -> np.ndarray:
        pos = np.searchsorted(series.times, grid_times, side="right")
        out = np.full(grid_times.shape, np.nan)
        have = pos > 0
        out[have] = np.log(series.prices[pos[have] - 1])
        return out

    sx, sy = sample(x), sample(y)
    first = int(np.argmax(np.isfinite(sx) & np.isfinite(sy)))
    sx, sy = sx[first:], sy[first:]
    if sx.size < 2 or not (np.isfinite(sx).all() and np.isfinite(sy).all()):
        raise InsufficientDataError("fewer than 2 grid points with prices")
    dx, dy = np.diff(sx), np.diff(sy)
    cov = float(dx @ dy)
    vx, vy = float(dx @ dx), float(dy @ dy)
    corr = cov / np.sqrt(vx * vy) if vx > 0.0 and vy > 0.0 else float("nan")
    return RealizedResult(cov, corr, int(dx.size))


class HYResult(NamedTuple):
    """Asynchronous covariance and the derived correlation."""

    covariance: float
    correlation: float


def _hy_prepared(series: TickSeries, start: int | None,
                 end: int | None) -> TickSeries:
    if start is not None or end is not None:
        lo = int(series.times[0]) if start is None else int(start)
        hi = int(series.times[-1]) if end is None else int(end)
        series = series.restrict(lo, hi)
    return series


def hayashi_yoshida(x: TickSeries, y: TickSeries,
                    start: int | None = None,
                    end: int | None = None) -> HYResult:
    """Covariance from overlapping tick-interval return products.

    Sums r_i * s_j over every pair of half-open inter-trade spans that
    overlap, which needs no common grid and no interpolation. The
    correlation divides by the two realized variances; it is not bounded
    by 1 in finite samples, so values slightly outside [-1, 1] are
    possible and reported as computed. Swapping the arguments returns
    bit-identical numbers. When ``start``/``end`` are given, only ticks
    inside the window are used.
    """
    x = _hy_prepared(x, start, end)
    y = _hy_prepared(y, start, end)
    if len(x) < 2 or len(y) < 2:
        raise InsufficientDataError(
            "need at least 2 ticks per series inside the window"
        )
    # canonical argument order makes the accumulation order, and so the
    # result, independent of which series is passed first
    kx = (int(x.times[0]), len(x), x.symbol)
    ky = (int(y.times[0]), len(y), y.symbol)
    a, b = (x, y) if kx <= ky else (y, x)
    ta, ra = a.times, np.diff(np.log(a.prices))
    tb, rb = b.times, np.diff(np.log(b.prices))
    cov = kernels.hy_sum(ta, ra, tb, rb)
    va = kernels.hy_sum(ta, ra, ta, ra)
    vb = kernels.hy_sum(tb, rb, tb, rb)
    if va > 0.0 and vb > 0.0:
        corr = cov / np.sqrt(va * vb)
    else:
        corr = float("nan")
    return HYResult(float(cov), float(corr))


def hy_correlation_matrix(ticks: Sequence[TickSeries],
                          start: int | None = None,
                          end: int | None = None,
                          workers: int = 1) -> CorrelationMatrix:
    """All-pairs asynchronous correlation over one time window.

    Assets with fewer than two in-window ticks get NaN rows and a
    warning. Correlations that overshoot [-1, 1], which the estimator
    permits in finite samples, are clipped to the boundary with a
    warning. ``workers`` > 1 spreads the pair sums over threads; the
    result does not depend on the worker count.
    """
    symbols = [s.symbol for s in ticks]
    if len(set(symbols)) != len(symbols):
        raise ValidationError("duplicate symbols in tick set")
    n = len(ticks)
    if n < 2:
        raise ValidationError("need at least two tick series")
    prepared: list[tuple[np.ndarray, np.ndarray] | None] = []
    thin = []
    for series in ticks:
        s = _hy_prepared(series, start, end)
        if len(s) < 2:
            prepared.append(None)
            thin.append(series.symbol)
        else:
            prepared.append((s.times, np.diff(np.log(s.prices))))
    if thin:
        warnings.warn(
            f"{len(thin)} assets with fewer than 2 in-window ticks: "
            + ", ".join(thin[:5]) + ("..." if len(thin) > 5 else ""),
            EstimationWarning,
            stacklevel=2,
        )
    variances = np.full(n, np.nan)
    for i, prep in enumerate(prepared):
        if prep is not None:
            variances[i] = kernels.hy_sum(prep[0], prep[1], prep[0], prep[1])
    values = np.full((n, n), np.nan)
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)
             if prepared[i] is not None and prepared[j] is not None]

    def pair_corr(ij: tuple[int, int]) -> float:
        i, j = ij
        ti, ri = prepared[i]
        tj, rj = prepared[j]
        cov = kernels.hy_sum(ti, ri, tj, rj)
        vi, vj = variances[i], variances[j]
        if vi > 0.0 and vj > 0.0:
            return cov / float(np.sqrt(vi * vj))
        return float("nan")

    if workers > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(pair_corr, pairs, chunksize=16))
    else:
        results = [pair_corr(ij) for ij in pairs]
    for (i, j), c in zip(pairs, results):
        values[i, j] = values[j, i] = c
    over = np.abs(values) > 1.0
    if over.any():
        worst = float(np.max(np.abs(values[over])))
        warnings.warn(
            f"{int(np.triu(over, 1).sum())} correlations outside [-1, 1] "
            f"(max |value| {worst:.6f}), clipped",
            EstimationWarning,
            stacklevel=2,
        )
        values = np.clip(values, -1.0, 1.0)
    diag = np.where(np.isfinite(variances) & (variances > 0.0), 1.0, np.nan)
    np.fill_diagonal(values, diag)
    return CorrelationMatrix(tuple(symbols), values, "hayashi-yoshida")


def hy_bin_matrices(ticks: Sequence[TickSeries], grid: BinGrid,
                    workers: int = 1) -> list[list[CorrelationMatrix]]:
    """Asynchronous correlation matrices per (day, bin) of a grid.

    Returns one list per day, each holding one matrix per bin. Bins with
    thin data produce NaN entries quietly; the caller decides how to
    aggregate them.
    """
    out = []
    for t in range(grid.n_days):
        edges = grid.edges_ns(t)
        day = []
        for k in range(grid.n_bins):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", EstimationWarning)
                day.append(hy_correlation_matrix(
                    ticks, int(edges[k]), int(edges[k + 1]), workers))
        out.append(day)
    return out


def average_pairwise_correlation(corr: CorrelationMatrix) -> float:
    """Mean of the defined off-diagonal entries; NaN when none are."""
    off = corr.offdiag()
    good = np.isfinite(off)
    if not good.any():
        return float("nan")
    return float(off[good].mean())


def average_correlations(mats: Sequence[CorrelationMatrix]) -> CorrelationMatrix:
    """Elementwise mean over matrices, ignoring NaN entries per pair.

    The support of each entry counts the matrices that defined it; pairs
    defined nowhere stay NaN. All inputs must share symbols.
    """
    if not mats:
        raise ValidationError("need at least one matrix to average")
    symbols = mats[0].symbols
    for m in mats[1:]:
        if m.symbols != symbols:
            raise ValidationError("matrices to average must share symbols")
    stack = np.stack([m.values for m in mats])
    defined = np.isfinite(stack)
    count = defined.sum(axis=0)
    filled = np.where(defined, stack, 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean = np.where(count > 0, filled.sum(axis=0) / count, np.nan)
    tag = mats[0].estimator
    if not tag.endswith("+averaged"):
        tag = tag + "+averaged"
    return CorrelationMatrix(symbols, mean, tag, count.astype(np.int64))
