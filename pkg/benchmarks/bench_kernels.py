"""Timing comparison of the compiled and pure-Python kernel backends.

Runs every kernel on a fixed seeded workload under both backends,
asserts the outputs are bit-identical, and reports best-of wall times.
An end-to-end annealing run is also timed in subprocesses so each
backend is selected the way users select it, through the
``COMOVE_PURE_PYTHON`` environment variable.

    python3 benchmarks/bench_kernels.py
"""

from __future__ import annotations

import os
import subprocess
import sys
import time

import numpy as np

from comove import kernels

REPEATS = 3


def best_time(fn, make_args, repeats=REPEATS):
    """Best wall time of ``fn(*make_args())`` over ``repeats`` runs.

    Arguments are rebuilt outside the timed region because some kernels
    mutate their inputs in place.
    """
    best = float("inf")
    for _ in range(repeats):
        args = make_args()
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def random_problem(rng, n, n_dim=2):
    coords = np.ascontiguousarray(rng.standard_normal((n, n_dim)))
    d = np.abs(rng.standard_normal((n, n)))
    d = np.ascontiguousarray((d + d.T) / 2.0)
    np.fill_diagonal(d, 0.0)
    init = np.ascontiguousarray(rng.standard_normal((n, n_dim)))
    return coords, d, init


def bench_hy_sum(py, cy):
    rng = np.random.default_rng(0)
    n = 20000
    tx = np.cumsum(rng.integers(1, 1_000_000, size=n + 1, dtype=np.int64))
    sy = np.cumsum(rng.integers(1, 1_000_000, size=n + 1, dtype=np.int64))
    rx = rng.standard_normal(n)
    ry = rng.standard_normal(n)
    assert py.hy_sum(tx, rx, sy, ry) == cy.hy_sum(tx, rx, sy, ry)
    tp = best_time(py.hy_sum, lambda: (tx, rx, sy, ry))
    tc = best_time(cy.hy_sum, lambda: (tx, rx, sy, ry))
    return "hy_sum", f"2 x {n} increments", tp, tc


def bench_pair_cost(py, cy):
    rng = np.random.default_rng(1)
    n = 150
    coords, d, init = random_problem(rng, n)
    w = 0.02
    assert py.pair_cost(coords, d, init, w) == cy.pair_cost(coords, d, init, w)
    tp = best_time(py.pair_cost, lambda: (coords, d, init, w))
    tc = best_time(cy.pair_cost, lambda: (coords, d, init, w))
    return "pair_cost", f"{n} points, penalty on", tp, tc


def bench_anneal_level(py, cy):
    rng = np.random.default_rng(2)
    n, steps = 40, 5000
    coords, d, init = random_problem(rng, n)
    idx = rng.integers(0, n, size=steps)
    moves = np.ascontiguousarray(rng.standard_normal((steps, 2)))
    us = rng.random(steps)
    w = 0.01

    def args_for(mod):
        c = coords.copy()
        return (c, d, init, w, 0.5, 0.1, idx, moves, us,
                mod.pair_cost(c, d, init, w))

    aa = args_for(py)
    bb = args_for(cy)
    assert py.anneal_level(*aa) == cy.anneal_level(*bb)
    assert np.array_equal(aa[0], bb[0])
    tp = best_time(py.anneal_level, lambda: args_for(py))
    tc = best_time(cy.anneal_level, lambda: args_for(cy))
    return "anneal_level", f"{n} points, {steps} moves", tp, tc


def bench_pattern_polish(py, cy):
    rng = np.random.default_rng(3)
    n = 30
    coords, d, init = random_problem(rng, n)

    def args():
        return (coords.copy(), d, init, 0.02, 0.1, 0.5, 1e-5, 20)

    aa = args()
    bb = args()
    assert py.pattern_polish(*aa) == cy.pattern_polish(*bb)
    assert np.array_equal(aa[0], bb[0])
    tp = best_time(py.pattern_polish, args)
    tc = best_time(cy.pattern_polish, args)
    return "pattern_polish", f"{n} points, 20 passes/step", tp, tc


def bench_jacobi_sweeps(py, cy):
    rng = np.random.default_rng(4)
    n = 40
    g = rng.standard_normal((n, n))
    sym = np.ascontiguousarray((g + g.T) / 2.0)

    def args():
        return (sym.copy(), np.eye(n), 1e-12, 50)

    aa = args()
    bb = args()
    assert py.jacobi_sweeps(*aa) == cy.jacobi_sweeps(*bb)
    assert np.array_equal(aa[0], bb[0]) and np.array_equal(aa[1], bb[1])
    tp = best_time(py.jacobi_sweeps, args)
    tc = best_time(cy.jacobi_sweeps, args)
    return "jacobi_sweeps", f"{n} x {n} symmetric", tp, tc


CHILD = """\
import time
import numpy as np
from comove import AnnealingSchedule, DistanceMatrix, kernels, mds_embed

rng = np.random.default_rng(0)
pts = rng.uniform(-0.5, 0.5, size=(15, 2))
d = np.sqrt(((pts[:, None, :] - pts[None, :, :]) ** 2).sum(axis=-1))
dist = DistanceMatrix(tuple(f"A{i:02d}" for i in range(15)), d)
schedule = AnnealingSchedule(steps_per_temperature=50)
t0 = time.perf_counter()
emap = mds_embed(dist, schedule=schedule, seed=1)
elapsed = time.perf_counter() - t0
print(kernels.BACKEND, f"{elapsed:.6f}", repr(emap.stress),
      repr(emap.final_cost))
"""


def bench_end_to_end():
    out = {}
    for env_val in ("1", "0"):
        env = dict(os.environ, COMOVE_PURE_PYTHON=env_val)
        res = subprocess.run([sys.executable, "-c", CHILD], env=env,
                             capture_output=True, text=True, check=True)
        backend, elapsed, s, fc = res.stdout.split()
        out[backend] = (float(elapsed), s, fc)
    assert set(out) == {"python", "compiled"}, f"backends seen: {set(out)}"
    assert out["python"][1:] == out["compiled"][1:], \
        "end-to-end results differ between backends"
    return out


def fmt(seconds):
    if seconds >= 1.0:
        return f"{seconds:9.3f} s "
    if seconds >= 1e-3:
        return f"{seconds * 1e3:9.3f} ms"
    return f"{seconds * 1e6:9.3f} us"


def main():
    backends = kernels.available_backends()
    if "compiled" not in backends:
        sys.exit("compiled backend not importable; build it first with "
                 "pip install -e . --no-build-isolation")
    py, cy = backends["python"], backends["compiled"]
    rows = [
        bench_hy_sum(py, cy),
        bench_pair_cost(py, cy),
        bench_anneal_level(py, cy),
        bench_pattern_polish(py, cy),
        bench_jacobi_sweeps(py, cy),
    ]
    print(f"kernel backends, best of {REPEATS} runs\n")
    print(f"{'kernel':<16} {'workload':<26} {'python':>12} "
          f"{'compiled':>12} {'speedup':>9}")
    for name, detail, tp, tc in rows:
        print(f"{name:<16} {detail:<26} {fmt(tp):>12} {fmt(tc):>12} "
              f"{tp / tc:>8.0f}x")
    e2e = bench_end_to_end()
    tp, tc = e2e["python"][0], e2e["compiled"][0]
    print(f"\nend-to-end mds_embed, 15 assets, 50 moves per level:")
    print(f"  python   {fmt(tp)}")
    print(f"  compiled {fmt(tc)}   ({tp / tc:.0f}x)")
    print("\nall outputs bit-identical across backends")


if __name__ == "__main__":
    main()
