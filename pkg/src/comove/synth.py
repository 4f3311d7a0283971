"""Synthetic market data with known ground truth.

Tick simulation draws exact Gaussian increments of correlated log-price
diffusions on the union of all assets' Poisson observation times, so
estimators can be checked against the true correlation with no
discretization bias. Seeding splits one ``SeedSequence`` into per-role
streams: child 0 drives the shared price path, child 1 + i the
observation times of asset i. Adding assets therefore never changes the
observation times of the ones already there.

Time units: tick rates are per second, volatilities per square root of
a second (per square root of a day for the daily helpers), drifts per
second.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import NS_PER_S, BinGrid, BinnedReturnPanel, CorrelationMatrix, \
    DailyPanel, TickSeries
from .errors import ValidationError


def default_symbols(n: int) -> tuple[str, ...]:
    if n < 1:
        raise ValidationError(f"need at least one symbol, got {n}")
    width = max(2, len(str(n - 1)))
    return tuple(f"A{i:0{width}d}" for i in range(n))


def trading_days(start: str, n: int) -> tuple[str, ...]:
    """``n`` consecutive weekdays from ``start`` (rolled forward if needed)."""
    if n < 1:
        raise ValidationError(f"need at least one day, got {n}")
    try:
        base = np.datetime64(start, "D")
    except ValueError as exc:
        raise ValidationError(f"bad date {start!r}") from exc
    days = np.busday_offset(base, np.arange(n), roll="forward")
    return tuple(str(d) for d in days)


def equicorrelated(n: int, rho: float) -> np.ndarray:
    """Correlation matrix with every off-diagonal entry equal to rho."""
    if n < 1:
        raise ValidationError(f"need at least one asset, got {n}")
    lo = -1.0 / (n - 1) if n > 1 else -1.0
    if not lo <= rho <= 1.0:
        raise ValidationError(
            f"rho {rho} not embeddable for {n} assets (needs {lo:.4f}..1)"
        )
    m = np.full((n, n), float(rho))
    np.fill_diagonal(m, 1.0)
    return m


def correlation_factor(corr: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """Factor L with L @ L.T equal to the matrix, valid for singular input.

    Uses the eigen square root, so perfectly correlated blocks (where a
    Cholesky factorization breaks down) still work. Raises when an
    eigenvalue is negative beyond ``tol``.
    """
    corr = np.asarray(corr, dtype=np.float64)
    vals, vecs = np.linalg.eigh(corr)
    floor = -tol * max(1.0, float(vals[-1]))
    if vals[0] < floor:
        raise ValidationError(
            f"matrix is not positive semidefinite (eigenvalue {vals[0]:.3e})"
        )
    return vecs * np.sqrt(np.clip(vals, 0.0, None))


def _per_asset(value, n: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 0:
        arr = np.full(n, float(arr))
    if arr.shape != (n,):
        raise ValidationError(f"{name} must be scalar or length {n}")
    return arr


@dataclass(frozen=True)
class DiffusionSpec:
    """Correlated log-price diffusions observed at Poisson tick times."""

    symbols: tuple[str, ...]
    correlation: np.ndarray
    vols: np.ndarray
    tick_rates: np.ndarray
    session_length_s: float = 21_600.0
    seed: int = 0
    initial_prices: np.ndarray = 100.0  # type: ignore[assignment]
    drifts: np.ndarray = 0.0  # type: ignore[assignment]
    share_observation_times: bool = False

    def __post_init__(self) -> None:
        symbols = tuple(self.symbols)
        n = len(symbols)
        # route the matrix through the correlation container for its
        # symmetry, range and unit-diagonal checks
        corr = CorrelationMatrix(symbols, np.asarray(self.correlation, float),
                                 "target").values
        if np.isnan(corr).any():
            raise ValidationError("target correlation has undefined entries")
        if self.session_length_s <= 0:
            raise ValidationError(
                f"session length must be positive, got {self.session_length_s}"
            )
        vols = _per_asset(self.vols, n, "vols")
        rates = _per_asset(self.tick_rates, n, "tick_rates")
        prices = _per_asset(self.initial_prices, n, "initial_prices")
        drifts = _per_asset(self.drifts, n, "drifts")
        if np.any(vols <= 0):
            raise ValidationError("vols must be positive")
        if np.any(rates <= 0):
            raise ValidationError("tick_rates must be positive")
        if np.any(prices <= 0):
            raise ValidationError("initial_prices must be positive")
        if self.share_observation_times and not np.all(rates == rates[0]):
            raise ValidationError(
                "shared observation times need one common tick rate"
            )
        for name, arr in (("correlation", corr), ("vols", vols),
                          ("tick_rates", rates), ("initial_prices", prices),
                          ("drifts", drifts)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "symbols", symbols)

    @property
    def n_assets(self) -> int:
        return len(self.symbols)


def _poisson_times(rng: np.random.Generator, rate: float, start: int,
                   end: int) -> np.ndarray:
    duration_s = (end - start) / NS_PER_S
    count = int(rng.poisson(rate * duration_s))
    offsets = np.sort(rng.random(count)) * duration_s
    times = start + (offsets * NS_PER_S).astype(np.int64)
    return np.unique(times)


def simulate_asynchronous_ticks(spec: DiffusionSpec, start: int = 0,
                                seed: int | None = None) -> list[TickSeries]:
    """Simulate one session of tick series, from ``start`` nanoseconds.

    The session covers ``spec.session_length_s`` seconds. Increments are
    exact Gaussians over the gaps of the union of all observation times,
    so the joint law at the observed times is the diffusion's own, at
    any tick rate. ``seed`` overrides the spec's own when given.
    """
    start = int(start)
    end = start + int(round(spec.session_length_s * NS_PER_S))
    if end <= start:
        raise ValidationError("session rounds to zero nanoseconds")
    if seed is None:
        seed = spec.seed
    n = spec.n_assets
    children = np.random.SeedSequence(seed).spawn(1 + n)
    path_rng = np.random.default_rng(children[0])
    if spec.share_observation_times:
        shared = _poisson_times(np.random.default_rng(children[1]),
                                float(spec.tick_rates[0]), start, end)
        per_asset = [shared] * n
    else:
        per_asset = [
            _poisson_times(np.random.default_rng(children[1 + i]),
                           float(spec.tick_rates[i]), start, end)
            for i in range(n)
        ]
    union = np.unique(np.concatenate(per_asset))
    if union.size == 0:
        return [TickSeries(sym, np.empty(0, np.int64), np.empty(0))
                for sym in spec.symbols]
    factor = correlation_factor(spec.correlation)
    gaps_s = np.diff(union) / NS_PER_S
    z = path_rng.standard_normal((gaps_s.shape[0], n))
    shocks = (z @ factor.T) * (spec.vols[np.newaxis, :]
                               * np.sqrt(gaps_s)[:, np.newaxis])
    shocks += spec.drifts[np.newaxis, :] * gaps_s[:, np.newaxis]
    x = np.vstack([np.zeros((1, n)), np.cumsum(shocks, axis=0)])
    out = []
    for i, sym in enumerate(spec.symbols):
        pos = np.searchsorted(union, per_asset[i])
        logp = np.log(spec.initial_prices[i]) + x[pos, i]
        out.append(TickSeries(sym, per_asset[i], np.exp(logp)))
    return out


def simulate_sessions(spec: DiffusionSpec, days, session_start_s: int,
                      seed: int | None = None) -> list[TickSeries]:
    """One diffusion session per day, concatenated per asset.

    Each day runs an independent session of ``spec.session_length_s``
    seconds starting at ``session_start_s`` past that day's midnight;
    prices restart at the spec's initial prices every morning, matching
    a workflow that never uses overnight returns. Day sessions draw from
    seeds derived deterministically from ``seed`` (the spec's own when
    ``None``), so prefixes are stable as days are appended.
    """
    days = tuple(days)
    if not days:
        raise ValidationError("need at least one day")
    if session_start_s + spec.session_length_s > 86_400:
        raise ValidationError("session would spill into the next day")
    if seed is None:
        seed = spec.seed
    day_seeds = np.random.SeedSequence(seed).generate_state(len(days), np.uint64)
    by_asset: list[list[np.ndarray]] = [[] for _ in spec.symbols]
    prices: list[list[np.ndarray]] = [[] for _ in spec.symbols]
    for d, day in enumerate(days):
        base = np.datetime64(day, "ns").astype(np.int64)
        start = int(base) + session_start_s * NS_PER_S
        session = simulate_asynchronous_ticks(spec, start, int(day_seeds[d]))
        for i, series in enumerate(session):
            by_asset[i].append(series.times)
            prices[i].append(series.prices)
    return [
        TickSeries(sym, np.concatenate(by_asset[i]), np.concatenate(prices[i]))
        for i, sym in enumerate(spec.symbols)
    ]


def simulate_daily_closes(symbols, days, correlation: np.ndarray, vols,
                          seed: int = 0, initial_prices=100.0) -> np.ndarray:
    """Correlated geometric random-walk closes, one column per day."""
    symbols = tuple(symbols)
    n = len(symbols)
    t = len(days)
    if t < 2:
        raise ValidationError("need at least two days")
    vols_arr = _per_asset(vols, n, "vols")
    prices = _per_asset(initial_prices, n, "initial_prices")
    if np.any(vols_arr <= 0) or np.any(prices <= 0):
        raise ValidationError("vols and initial_prices must be positive")
    factor = correlation_factor(np.asarray(correlation, dtype=np.float64))
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((t, n))
    rets = (z @ factor.T) * vols_arr[np.newaxis, :]
    logp = np.log(prices)[:, np.newaxis] + np.cumsum(rets.T, axis=1)
    return np.exp(logp)


def _per_bin(value, k: int, lo: float, hi: float, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 0:
        arr = np.full(k, float(arr))
    if arr.shape != (k,):
        raise ValidationError(f"{name} must be scalar or length {k}")
    if np.any(arr < lo) or np.any(arr > hi):
        raise ValidationError(f"{name} must lie in [{lo}, {hi}]")
    return arr


def planted_panel(grid: BinGrid, n_assets: int, rho, scale=1.0,
                  seed: int = 0, symbols=None) -> BinnedReturnPanel:
    """One-factor panel with a known per-bin correlation profile.

    Cell (i, k, t) is ``scale_k * (sqrt(rho_k) * f + sqrt(1 - rho_k) * e)``
    with independent standard normal ``f`` (shared per cell) and ``e``
    (per asset), so the population correlation of any asset pair in bin
    k is exactly ``rho_k``. The factor draws come first, then the noise
    block.
    """
    if symbols is None:
        symbols = default_symbols(n_assets)
    symbols = tuple(symbols)
    if len(symbols) != n_assets:
        raise ValidationError(f"{len(symbols)} symbols for {n_assets} assets")
    k = grid.n_bins
    t = grid.n_days
    rho_arr = _per_bin(rho, k, 0.0, 1.0, "rho")
    scale_arr = _per_bin(scale, k, 0.0, np.inf, "scale")
    if np.any(scale_arr <= 0):
        raise ValidationError("scale must be positive")
    rng = np.random.default_rng(seed)
    f = rng.standard_normal((k, t))
    eps = rng.standard_normal((n_assets, k, t))
    load = np.sqrt(rho_arr)[:, np.newaxis]
    noise = np.sqrt(1.0 - rho_arr)[:, np.newaxis]
    values = scale_arr[np.newaxis, :, np.newaxis] * (
        load[np.newaxis] * f[np.newaxis] + noise[np.newaxis] * eps)
    return BinnedReturnPanel(symbols, grid, values)


def simulate_planted_panel(n_assets: int, n_bins: int, n_days: int, rho,
                           scale=1.0, seed: int = 0,
                           symbols=None) -> BinnedReturnPanel:
    """Planted one-factor panel on a synthetic grid of 60-second bins.

    The grid starts at midnight and runs over consecutive weekdays from
    2020-01-06; use ``planted_panel`` directly for a specific grid.
    """
    if not 1 <= n_bins <= 1440:
        raise ValidationError(f"n_bins must be in [1, 1440], got {n_bins}")
    grid = BinGrid(0, 60 * n_bins, 60, trading_days("2020-01-06", n_days))
    return planted_panel(grid, n_assets, rho, scale, seed, symbols)


def planted_daily(days, n_assets: int, rho, scale: float = 1.0,
                  seed: int = 0, symbols=None) -> DailyPanel:
    """One-factor daily panel with a known pair correlation.

    ``rho`` is a scalar or one value per day, so regime changes can be
    planted by handing in a step profile.
    """
    if symbols is None:
        symbols = default_symbols(n_assets)
    symbols = tuple(symbols)
    if len(symbols) != n_assets:
        raise ValidationError(f"{len(symbols)} symbols for {n_assets} assets")
    if scale <= 0:
        raise ValidationError(f"scale must be positive, got {scale}")
    t = len(days)
    rho_arr = _per_bin(rho, t, 0.0, 1.0, "rho")
    rng = np.random.default_rng(seed)
    f = rng.standard_normal(t)
    eps = rng.standard_normal((n_assets, t))
    values = scale * (np.sqrt(rho_arr) * f[np.newaxis, :]
                      + np.sqrt(1.0 - rho_arr) * eps)
    return DailyPanel(symbols, tuple(days), values)
