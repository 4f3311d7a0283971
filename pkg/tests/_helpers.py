"""Small shared helpers for the test suite."""

from __future__ import annotations

import numpy as np


def spearman(x, y) -> float:
    """Spearman rank correlation of two equal-length sequences."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    rx = np.argsort(np.argsort(x)).astype(np.float64)
    ry = np.argsort(np.argsort(y)).astype(np.float64)
    rx -= rx.mean()
    ry -= ry.mean()
    return float((rx @ ry) / np.sqrt((rx @ rx) * (ry @ ry)))


def brute_hy_sum(tx, rx, sy, ry) -> float:
    """Quadratic reference for the interval-overlap product sum.

    Accumulates in the same (i-major, j-ascending) order as the linear
    sweep, so agreement is expected bit for bit.
    """
    total = 0.0
    for i in range(len(rx)):
        lo, hi = tx[i], tx[i + 1]
        for j in range(len(ry)):
            if sy[j] < hi and lo < sy[j + 1]:
                total += rx[i] * ry[j]
    return total


def random_walk_ticks(rng, times, rho, vol=2e-4):
    """Two correlated log-price walks sampled at shared times."""
    n = len(times) - 1
    gaps = np.diff(times) / 1e9
    z = rng.standard_normal((n, 2))
    z2 = rho * z[:, 0] + np.sqrt(1.0 - rho * rho) * z[:, 1]
    scale = vol * np.sqrt(gaps)
    x = np.concatenate([[0.0], np.cumsum(z[:, 0] * scale)])
    y = np.concatenate([[0.0], np.cumsum(z2 * scale)])
    return np.exp(x + np.log(100.0)), np.exp(y + np.log(50.0))


def strict_times(rng, n, start=0, span=3_600_000_000_000):
    """n strictly increasing int64 tick times inside [start, start+span]."""
    while True:
        t = np.unique(rng.integers(start, start + span, size=n, dtype=np.int64))
        if t.size == n:
            return t
