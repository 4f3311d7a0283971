"""Containers and file formats for tick, binned and daily return data.

Timestamps are int64 nanoseconds since the epoch and are treated as
naive wall-clock values: trading sessions are interpreted in whatever
clock the tick times were recorded in. Missing observations are NaN in
memory and ``null`` in JSON; the CSV formats simply omit missing rows.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InsufficientDataError, NumericalError, ValidationError

NS_PER_S = 1_000_000_000
NS_PER_DAY = 86_400 * NS_PER_S

# Overshoot beyond a documented range treated as harmless rounding noise
# and clipped; anything larger raises.
RANGE_TOL = 1e-9


def _snap_range(values: np.ndarray, lo: float, hi: float, what: str) -> np.ndarray:
    worst = np.nanmax(np.abs(np.clip(values, lo, hi) - values), initial=0.0)
    if worst > RANGE_TOL:
        raise NumericalError(
            f"{what} outside [{lo}, {hi}] by {worst:.3e}, beyond tolerance {RANGE_TOL}"
        )
    return np.clip(values, lo, hi)


def _check_square(values: np.ndarray, n: int, what: str) -> np.ndarray:
    values = np.array(values, dtype=np.float64, order="C", copy=True)
    if values.shape != (n, n):
        raise ValidationError(f"{what} has shape {values.shape}, expected ({n}, {n})")
    gap = np.nanmax(np.abs(values - values.T), initial=0.0)
    if gap > RANGE_TOL:
        raise ValidationError(f"{what} asymmetric by {gap:.3e}")
    # force exact symmetry so downstream sweeps see one value per pair
    iu = np.triu_indices(n, 1)
    values[(iu[1], iu[0])] = values[iu]
    return values


def _check_symbols(symbols: Sequence[str]) -> tuple[str, ...]:
    symbols = tuple(str(s) for s in symbols)
    if not symbols:
        raise ValidationError("need at least one symbol")
    if len(set(symbols)) != len(symbols):
        dupes = sorted({s for s in symbols if symbols.count(s) > 1})
        raise ValidationError(f"duplicate symbols: {', '.join(dupes)}")
    return symbols


@dataclass(frozen=True)
class TickSeries:
    """Irregularly spaced trade prices for one symbol.

    ``times`` must be strictly increasing int64 nanoseconds, ``prices``
    strictly positive. Both arrays are stored read-only.
    """

    symbol: str
    times: np.ndarray
    prices: np.ndarray

    def __post_init__(self) -> None:
        times = np.ascontiguousarray(self.times, dtype=np.int64)
        prices = np.ascontiguousarray(self.prices, dtype=np.float64)
        if times.ndim != 1 or prices.ndim != 1:
            raise ValidationError(f"{self.symbol}: times and prices must be 1-d")
        if times.shape[0] != prices.shape[0]:
            raise ValidationError(
                f"{self.symbol}: {times.shape[0]} times vs {prices.shape[0]} prices"
            )
        if times.shape[0]:
            bad = np.flatnonzero(np.diff(times) <= 0)
            if bad.size:
                k = int(bad[0]) + 1
                raise ValidationError(
                    f"{self.symbol}: times not strictly increasing at index {k}"
                )
            if not np.all(np.isfinite(prices)):
                k = int(np.flatnonzero(~np.isfinite(prices))[0])
                raise ValidationError(f"{self.symbol}: non-finite price at index {k}")
            if np.any(prices <= 0.0):
                k = int(np.flatnonzero(prices <= 0.0)[0])
                raise ValidationError(f"{self.symbol}: non-positive price at index {k}")
        times.setflags(write=False)
        prices.setflags(write=False)
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "prices", prices)

    def __len__(self) -> int:
        return int(self.times.shape[0])

    def restrict(self, start: int, end: int) -> "TickSeries":
        """Sub-series with start <= time <= end (both in nanoseconds)."""
        lo = int(np.searchsorted(self.times, start, side="left"))
        hi = int(np.searchsorted(self.times, end, side="right"))
        return TickSeries(self.symbol, self.times[lo:hi], self.prices[lo:hi])

    def log_increments(self) -> tuple[np.ndarray, np.ndarray]:
        """Tick times as interval bounds plus the log-price changes.

        Increment i covers the half-open span (times[i], times[i+1]].
        Needs at least two ticks.
        """
        if len(self) < 2:
            raise InsufficientDataError(
                f"{self.symbol}: need at least 2 ticks, have {len(self)}"
            )
        return self.times, np.diff(np.log(self.prices))


def log_price_series(ticks: TickSeries) -> tuple[np.ndarray, np.ndarray]:
    """Timestamps and natural-log prices of a tick series, in order."""
    return ticks.times, np.log(ticks.prices)


def parse_session(spec: str) -> tuple[int, int]:
    """Parse ``"HH:MM-HH:MM"`` (seconds optional) into seconds after midnight."""
    parts = spec.split("-")
    if len(parts) != 2:
        raise ValidationError(f"session must look like '10:00-16:00', got {spec!r}")
    out = []
    for part in parts:
        fields = part.strip().split(":")
        if len(fields) not in (2, 3) or not all(f.isdigit() for f in fields):
            raise ValidationError(f"bad session time {part.strip()!r}")
        h, m = int(fields[0]), int(fields[1])
        s = int(fields[2]) if len(fields) == 3 else 0
        if h > 24 or m > 59 or s > 59:
            raise ValidationError(f"bad session time {part.strip()!r}")
        out.append(h * 3600 + m * 60 + s)
    return out[0], out[1]


def _parse_day(day: str) -> np.datetime64:
    try:
        return np.datetime64(day, "D")
    except ValueError as exc:
        raise ValidationError(f"bad date {day!r}") from exc


@dataclass(frozen=True)
class BinGrid:
    """Equal-width intraday bins over a fixed session, repeated per day.

    The session [start, end) is split into ``(end - start) / width``
    bins; the width must divide the session exactly. Bin k of a day
    covers the half-open span (start + k*width, start + (k+1)*width]
    in that day's clock.
    """

    session_start_s: int
    session_end_s: int
    bin_width_s: int
    days: tuple[str, ...]

    def __post_init__(self) -> None:
        start, end, width = self.session_start_s, self.session_end_s, self.bin_width_s
        if not 0 <= start < end <= 86_400:
            raise ValidationError(f"bad session [{start}, {end}] seconds")
        if width <= 0:
            raise ValidationError(f"bin width must be positive, got {width}")
        if (end - start) % width:
            raise ValidationError(
                f"bin width {width}s does not divide the {end - start}s session"
            )
        days = tuple(str(d) for d in self.days)
        if not days:
            raise ValidationError("grid needs at least one day")
        parsed = [_parse_day(d) for d in days]
        for i in range(1, len(parsed)):
            if parsed[i] <= parsed[i - 1]:
                raise ValidationError(f"days not strictly increasing at {days[i]!r}")
        object.__setattr__(self, "days", days)

    @property
    def n_bins(self) -> int:
        return (self.session_end_s - self.session_start_s) // self.bin_width_s

    @property
    def n_days(self) -> int:
        return len(self.days)

    def day_start_ns(self, t: int) -> int:
        return int(_parse_day(self.days[t]).astype("datetime64[ns]").astype(np.int64))

    def edges_ns(self, t: int) -> np.ndarray:
        """The n_bins + 1 bin edges of day t, in nanoseconds."""
        base = self.day_start_ns(t) + self.session_start_s * NS_PER_S
        step = self.bin_width_s * NS_PER_S
        return base + step * np.arange(self.n_bins + 1, dtype=np.int64)

    def session_bounds_ns(self, t: int) -> tuple[int, int]:
        base = self.day_start_ns(t)
        return (base + self.session_start_s * NS_PER_S,
                base + self.session_end_s * NS_PER_S)

    @classmethod
    def from_ticks(cls, ticks: Iterable[TickSeries], session_start_s: int,
                   session_end_s: int, bin_width_s: int) -> "BinGrid":
        """Grid whose days are every date that carries at least one tick."""
        seen: set[int] = set()
        for series in ticks:
            seen.update(np.unique(series.times // NS_PER_DAY).tolist())
        if not seen:
            raise InsufficientDataError("no ticks, cannot infer trading days")
        days = tuple(str(np.datetime64(int(d), "D")) for d in sorted(seen))
        return cls(session_start_s, session_end_s, bin_width_s, days)


@dataclass(frozen=True)
class BinnedReturnPanel:
    """Binned log-returns, shape (n_assets, n_bins, n_days).

    A cell is NaN when the bin had no trade or the day had no price at
    or before the bin's opening edge, so stale quotes never turn into
    artificial zero returns.
    """

    symbols: tuple[str, ...]
    grid: BinGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        symbols = _check_symbols(self.symbols)
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        want = (len(symbols), self.grid.n_bins, self.grid.n_days)
        if values.shape != want:
            raise ValidationError(f"panel shape {values.shape}, expected {want}")
        values.setflags(write=False)
        object.__setattr__(self, "symbols", symbols)
        object.__setattr__(self, "values", values)

    @property
    def n_assets(self) -> int:
        return len(self.symbols)

    @property
    def n_bins(self) -> int:
        return self.grid.n_bins

    @property
    def n_days(self) -> int:
        return self.grid.n_days

    def bin_matrix(self, k: int) -> np.ndarray:
        """Returns of bin k across days, shape (n_assets, n_days)."""
        return self.values[:, k, :]


def bin_panel(ticks: Sequence[TickSeries], grid: BinGrid) -> BinnedReturnPanel:
    """Aggregate tick series onto a bin grid of log-returns.

    The anchor price at a bin edge is the last trade at or before it on
    the same day; a bin's return is the log change between its two
    anchors, defined only when the bin itself contains a trade and the
    opening edge has a same-day anchor.
    """
    if not ticks:
        raise ValidationError("need at least one tick series")
    symbols = _check_symbols([s.symbol for s in ticks])
    n, k_bins, t_days = len(ticks), grid.n_bins, grid.n_days
    values = np.full((n, k_bins, t_days), np.nan)
    for i, series in enumerate(ticks):
        times = series.times
        logp = np.log(series.prices)
        for t in range(t_days):
            edges = grid.edges_ns(t)
            day_start = grid.day_start_ns(t)
            pos = np.searchsorted(times, edges, side="right")
            for k in range(k_bins):
                if pos[k + 1] == pos[k]:
                    continue  # no trade inside the bin
                if pos[k] == 0 or times[pos[k] - 1] < day_start:
                    continue  # no same-day anchor at the opening edge
                values[i, k, t] = logp[pos[k + 1] - 1] - logp[pos[k] - 1]
    return BinnedReturnPanel(symbols, grid, values)


@dataclass(frozen=True)
class DailyPanel:
    """Daily log-returns, shape (n_assets, n_days); NaN marks missing days."""

    symbols: tuple[str, ...]
    days: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        symbols = _check_symbols(self.symbols)
        days = tuple(str(d) for d in self.days)
        parsed = [_parse_day(d) for d in days]
        for i in range(1, len(parsed)):
            if parsed[i] <= parsed[i - 1]:
                raise ValidationError(f"days not strictly increasing at {days[i]!r}")
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        if values.shape != (len(symbols), len(days)):
            raise ValidationError(
                f"panel shape {values.shape}, expected ({len(symbols)}, {len(days)})"
            )
        values.setflags(write=False)
        object.__setattr__(self, "symbols", symbols)
        object.__setattr__(self, "days", days)
        object.__setattr__(self, "values", values)

    @property
    def n_assets(self) -> int:
        return len(self.symbols)

    @property
    def n_days(self) -> int:
        return len(self.days)


def daily_returns(symbols: Sequence[str], days: Sequence[str],
                  closes: np.ndarray) -> DailyPanel:
    """Close-to-close log-returns, labelled by the later close's date.

    ``closes`` has one column per day in ``days``; a return is NaN when
    either close is missing.
    """
    closes = np.asarray(closes, dtype=np.float64)
    if closes.ndim != 2 or closes.shape[1] != len(days):
        raise ValidationError(
            f"closes shape {closes.shape}, expected ({len(symbols)}, {len(days)})"
        )
    if closes.shape[1] < 2:
        raise InsufficientDataError("need at least two days of closes")
    filled = np.nan_to_num(closes, nan=1.0)
    if np.any(filled <= 0.0):
        i, t = map(int, np.argwhere(filled <= 0.0)[0])
        raise ValidationError(f"non-positive close for {symbols[i]} on {days[t]}")
    with np.errstate(invalid="ignore"):
        rets = np.diff(np.log(closes), axis=1)
    return DailyPanel(tuple(symbols), tuple(days)[1:], rets)


@dataclass(frozen=True)
class CorrelationMatrix:
    """Symmetric correlation estimates; NaN marks undefined entries.

    Diagonal entries are exactly 1 for assets that had data. Values that
    overshoot [-1, 1] by at most 1e-9 are clipped; larger overshoots
    raise ``NumericalError``. ``support`` counts the samples behind each
    entry when the estimator tracks that.
    """

    symbols: tuple[str, ...]
    values: np.ndarray
    estimator: str
    support: np.ndarray | None = None

    def __post_init__(self) -> None:
        symbols = _check_symbols(self.symbols)
        n = len(symbols)
        values = _check_square(self.values, n, "correlation matrix")
        values = _snap_range(values, -1.0, 1.0, "correlation")
        diag = np.diagonal(values)
        bad = np.flatnonzero(~np.isnan(diag) & (np.abs(diag - 1.0) > RANGE_TOL))
        if bad.size:
            i = int(bad[0])
            raise ValidationError(f"diagonal for {symbols[i]} is {diag[i]!r}, not 1")
        np.fill_diagonal(values, np.where(np.isnan(diag), np.nan, 1.0))
        values.setflags(write=False)
        support = self.support
        if support is not None:
            support = np.ascontiguousarray(support, dtype=np.int64)
            if support.shape != (n, n):
                raise ValidationError(
                    f"support shape {support.shape}, expected ({n}, {n})"
                )
            support.setflags(write=False)
        object.__setattr__(self, "symbols", symbols)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "support", support)

    @property
    def n_assets(self) -> int:
        return len(self.symbols)

    def offdiag(self) -> np.ndarray:
        """Upper-triangle entries as a flat array (may contain NaN)."""
        iu = np.triu_indices(self.n_assets, 1)
        return self.values[iu]

    def drop_undefined(self) -> tuple["CorrelationMatrix", tuple[str, ...]]:
        """Remove assets until no NaN entries remain.

        Repeatedly drops the asset with the most undefined pairs (lowest
        index on ties). Returns the cleaned matrix and the dropped
        symbols, in drop order.
        """
        keep = list(range(self.n_assets))
        dropped: list[str] = []
        values = self.values
        while keep:
            sub = values[np.ix_(keep, keep)]
            counts = np.isnan(sub).sum(axis=1)
            if not counts.any():
                break
            worst = keep[int(np.argmax(counts))]
            dropped.append(self.symbols[worst])
            keep.remove(worst)
        if not keep:
            raise InsufficientDataError(
                f"no assets left after dropping {len(dropped)} with undefined entries"
            )
        sub_support = None
        if self.support is not None:
            sub_support = self.support[np.ix_(keep, keep)]
        cleaned = CorrelationMatrix(
            tuple(self.symbols[i] for i in keep),
            values[np.ix_(keep, keep)],
            self.estimator,
            sub_support,
        )
        return cleaned, tuple(dropped)


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric distances with zero diagonal, bounded by 2.

    The bound comes from mapping correlations through
    ``d = sqrt(2 * (1 - rho))``; perfectly correlated assets sit at
    distance 0 and perfectly anti-correlated ones at 2.
    """

    symbols: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self) -> None:
        symbols = _check_symbols(self.symbols)
        n = len(symbols)
        values = _check_square(self.values, n, "distance matrix")
        if np.isnan(values).any():
            i, j = map(int, np.argwhere(np.isnan(values))[0])
            raise ValidationError(
                f"undefined distance between {symbols[i]} and {symbols[j]}"
            )
        values = _snap_range(values, 0.0, 2.0, "distance")
        np.fill_diagonal(values, 0.0)
        values.setflags(write=False)
        object.__setattr__(self, "symbols", symbols)
        object.__setattr__(self, "values", values)

    @property
    def n_assets(self) -> int:
        return len(self.symbols)

    def mean_offdiag(self) -> float:
        iu = np.triu_indices(self.n_assets, 1)
        return float(np.mean(self.values[iu]))

    @classmethod
    def from_correlation(cls, corr: CorrelationMatrix) -> "DistanceMatrix":
        """Map correlations to distances via d = sqrt(2 * (1 - rho)).

        Every pair must be defined; drop undefined assets first.
        """
        if np.isnan(corr.values).any():
            nan_pairs = int(np.isnan(corr.offdiag()).sum())
            raise InsufficientDataError(
                f"{nan_pairs} undefined pairs, call drop_undefined() first"
            )
        return cls(corr.symbols, np.sqrt(2.0 * (1.0 - corr.values)))


# ---------------------------------------------------------------------------
# file formats


def _write_csv(path, comments: Iterable[str], header: Sequence[str],
               rows: Iterable[Sequence[str]]) -> None:
    with open(path, "w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _read_csv(path) -> tuple[list[str], list[str], list[list[str]]]:
    comments: list[str] = []
    rows: list[list[str]] = []
    try:
        with open(path, newline="") as fh:
            for line in fh:
                if line.startswith("#"):
                    comments.append(line[1:].strip())
                    continue
                if line.strip():
                    rows.append(next(csv.reader([line])))
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise ValidationError(f"{path}: no rows")
    return comments, rows[0], rows[1:]


def write_ticks_csv(path, ticks: Sequence[TickSeries],
                    comments: Iterable[str] = ()) -> None:
    """Write timestamp_ns,symbol,price rows, grouped by symbol."""
    def rows():
        for series in ticks:
            for t, price in zip(series.times.tolist(), series.prices):
                yield (str(t), series.symbol, repr(float(price)))

    _write_csv(path, comments, ("timestamp_ns", "symbol", "price"), rows())


def read_ticks_csv(path) -> list[TickSeries]:
    """Read timestamp_ns,symbol,price rows into per-symbol series.

    Rows need not be globally sorted, but each symbol's rows must come
    in increasing time order. Symbols keep first-appearance order.
    """
    _, header, rows = _read_csv(path)
    if [h.strip().lower() for h in header] != ["timestamp_ns", "symbol", "price"]:
        raise ValidationError(f"{path}: expected header timestamp_ns,symbol,price")
    by_symbol: dict[str, tuple[list[int], list[float]]] = {}
    for lineno, row in enumerate(rows, start=2):
        if len(row) != 3:
            raise ValidationError(f"{path}:{lineno}: expected 3 fields")
        raw_time, sym, raw_price = (f.strip() for f in row)
        try:
            t = int(raw_time)
        except ValueError as exc:
            raise ValidationError(
                f"{path}:{lineno}: bad timestamp {raw_time!r}") from exc
        try:
            p = float(raw_price)
        except ValueError as exc:
            raise ValidationError(f"{path}:{lineno}: bad price {raw_price!r}") from exc
        times, prices = by_symbol.setdefault(sym, ([], []))
        times.append(t)
        prices.append(p)
    out = []
    for sym, (ts, ps) in by_symbol.items():
        try:
            out.append(TickSeries(sym, np.array(ts, dtype=np.int64), np.array(ps)))
        except ValidationError as exc:
            raise ValidationError(f"{path}: {exc}") from exc
    return out


def write_matrix_csv(path, symbols: Sequence[str], values: np.ndarray,
                     comments: Iterable[str] = ()) -> None:
    """Write a square labelled matrix; first column repeats the symbols."""
    def cell(x: float) -> str:
        return "nan" if np.isnan(x) else repr(float(x))

    rows = ([sym] + [cell(v) for v in values[i]] for i, sym in enumerate(symbols))
    _write_csv(path, comments, ["symbol", *symbols], rows)


def read_matrix_csv(path) -> tuple[tuple[str, ...], np.ndarray, list[str]]:
    """Read a labelled square matrix; returns (symbols, values, comments)."""
    comments, header, rows = _read_csv(path)
    symbols = tuple(h.strip() for h in header[1:])
    n = len(symbols)
    if len(rows) != n:
        raise ValidationError(f"{path}: {len(rows)} rows for {n} symbols")
    values = np.empty((n, n))
    for i, row in enumerate(rows):
        if len(row) != n + 1 or row[0].strip() != symbols[i]:
            raise ValidationError(f"{path}: row {i} does not match header order")
        values[i] = [float(cell) for cell in row[1:]]
    return symbols, values, comments


def read_daily_csv(path) -> tuple[tuple[str, ...], tuple[str, ...], np.ndarray]:
    """Read date,symbol,close rows into a dense (symbols, days, closes) set.

    Days come back sorted; symbols keep first-appearance order. Pairs
    never observed stay NaN.
    """
    _, header, rows = _read_csv(path)
    if [h.strip().lower() for h in header] != ["date", "symbol", "close"]:
        raise ValidationError(f"{path}: expected header date,symbol,close")
    symbols: list[str] = []
    cells: dict[tuple[str, str], float] = {}
    day_set: set[str] = set()
    for lineno, row in enumerate(rows, start=2):
        if len(row) != 3:
            raise ValidationError(f"{path}:{lineno}: expected 3 fields")
        day, sym, raw_close = (f.strip() for f in row)
        _parse_day(day)
        try:
            close = float(raw_close)
        except ValueError as exc:
            raise ValidationError(f"{path}:{lineno}: bad close {raw_close!r}") from exc
        if (day, sym) in cells:
            raise ValidationError(f"{path}:{lineno}: duplicate row for {sym} on {day}")
        if sym not in symbols:
            symbols.append(sym)
        day_set.add(day)
        cells[(day, sym)] = close
    days = tuple(sorted(day_set))
    closes = np.full((len(symbols), len(days)), np.nan)
    index = {s: i for i, s in enumerate(symbols)}
    for (day, sym), close in cells.items():
        closes[index[sym], days.index(day)] = close
    return tuple(symbols), days, closes


def write_daily_csv(path, symbols: Sequence[str], days: Sequence[str],
                    closes: np.ndarray, comments: Iterable[str] = ()) -> None:
    """Write date,symbol,close rows, day-major; NaN cells are omitted."""
    def rows():
        for t, day in enumerate(days):
            for i, sym in enumerate(symbols):
                if not np.isnan(closes[i, t]):
                    yield (day, sym, repr(float(closes[i, t])))

    _write_csv(path, comments, ("date", "symbol", "close"), rows())


def _nullable(arr: np.ndarray) -> list:
    return [None if np.isnan(v) else v for v in arr.ravel().tolist()]


def _from_nullable(values: list, shape, what: str) -> np.ndarray:
    flat = [np.nan if v is None else float(v) for v in values]
    arr = np.array(flat, dtype=np.float64)
    if arr.size != int(np.prod(shape)):
        raise ValidationError(f"{what}: {arr.size} values for shape {tuple(shape)}")
    return arr.reshape(shape)


def panel_to_json(panel: BinnedReturnPanel, provenance: dict | None = None) -> str:
    """Serialize a binned panel; the row-major values use null for NaN."""
    doc = {
        "symbols": list(panel.symbols),
        "days": list(panel.grid.days),
        "session_s": [panel.grid.session_start_s, panel.grid.session_end_s],
        "bin_width_s": panel.grid.bin_width_s,
        "shape": list(panel.values.shape),
        "values": _nullable(panel.values),
    }
    if provenance is not None:
        doc["provenance"] = provenance
    return json.dumps(doc, indent=1, sort_keys=True)


def panel_from_json(text: str) -> BinnedReturnPanel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed panel document: {exc}") from exc
    try:
        grid = BinGrid(doc["session_s"][0], doc["session_s"][1],
                       doc["bin_width_s"], tuple(doc["days"]))
        values = _from_nullable(doc["values"], doc["shape"], "panel")
        return BinnedReturnPanel(tuple(doc["symbols"]), grid, values)
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed panel document: {exc}") from exc


def correlation_to_json(corr: CorrelationMatrix,
                        provenance: dict | None = None) -> str:
    """Serialize a correlation matrix with tag and support counts."""
    doc = {
        "symbols": list(corr.symbols),
        "estimator_tag": corr.estimator,
        "values": _nullable(corr.values),
        "support": None if corr.support is None else corr.support.ravel().tolist(),
    }
    if provenance is not None:
        doc["provenance"] = provenance
    return json.dumps(doc, indent=1, sort_keys=True)


def correlation_from_json(text: str) -> CorrelationMatrix:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed correlation document: {exc}") from exc
    try:
        symbols = tuple(doc["symbols"])
        n = len(symbols)
        values = _from_nullable(doc["values"], (n, n), "correlation")
        support = doc.get("support")
        if support is not None:
            support = np.array(support, dtype=np.int64).reshape((n, n))
        return CorrelationMatrix(symbols, values, doc["estimator_tag"], support)
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed correlation document: {exc}") from exc
