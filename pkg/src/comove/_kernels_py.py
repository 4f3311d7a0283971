"""Pure-Python kernels: reference semantics for the compiled extension.

``comove._kernels`` (Cython) mirrors every function here operation for
operation. Both backends must produce bit-identical results, which is why
these loops accumulate scalars sequentially instead of calling numpy
reductions (whose pairwise summation would round differently) and use
``math.sqrt``/``math.exp`` (same libm calls the C code makes).
"""

from __future__ import annotations

import math

import numpy as np

BACKEND = "python"


def hy_sum(tx, rx, sy, ry):
    """Sum rx[i]*ry[j] over pairs of half-open intervals that overlap.

    ``tx`` (len n+1) bounds the n increments ``rx``; interval i is
    ``(tx[i], tx[i+1]]``, likewise for ``sy``/``ry``. Linear two-pointer
    sweep; the accumulation order is (i asc, j asc), identical to the
    naive double loop.
    """
    tx = tx.tolist()
    sy = sy.tolist()
    rx = rx.tolist()
    ry = ry.tolist()
    nx = len(rx)
    ny = len(ry)
    acc = 0.0
    j0 = 0
    for i in range(nx):
        lo = tx[i]
        hi = tx[i + 1]
        while j0 < ny and sy[j0 + 1] <= lo:
            j0 += 1
        j = j0
        while j < ny and sy[j] < hi:
            acc += rx[i] * ry[j]
            j += 1
    return acc


def _cost_lists(coords, d, init, w):
    n = len(coords)
    ndim = len(coords[0])
    cost = 0.0
    for i in range(n):
        ci = coords[i]
        di = d[i]
        for j in range(i + 1, n):
            cj = coords[j]
            acc = 0.0
            for a in range(ndim):
                da = ci[a] - cj[a]
                acc += da * da
            e = math.sqrt(acc) - di[j]
            cost += e * e
    if w != 0.0:
        for i in range(n):
            ci = coords[i]
            gi = init[i]
            pen = 0.0
            for a in range(ndim):
                xa = ci[a] - gi[a]
                pen += xa * xa
            cost += w * pen
    return cost


def pair_cost(coords, d, init, w):
    """Stress plus, when ``w`` is nonzero, the anchored quadratic penalty."""
    return _cost_lists(coords.tolist(), d.tolist(), init.tolist(), w)


def anneal_level(coords, d, init, w, temperature, scale, idx, moves, us, cost):
    """Run one temperature level of single-point Metropolis moves in place.

    ``idx``/``moves``/``us`` hold the pre-drawn point indices, unscaled
    Gaussian displacements and acceptance uniforms, one row per step.
    Returns ``(cost, n_accepted)`` with ``cost`` updated incrementally.
    """
    cl = coords.tolist()
    dl = d.tolist()
    il = init.tolist()
    idx_l = idx.tolist()
    moves_l = moves.tolist()
    us_l = us.tolist()
    n = len(cl)
    ndim = len(cl[0])
    accepted = 0
    for s in range(len(idx_l)):
        i = idx_l[s]
        ci = cl[i]
        row = moves_l[s]
        new = [ci[a] + scale * row[a] for a in range(ndim)]
        di = dl[i]
        delta = 0.0
        for j in range(n):
            if j == i:
                continue
            cj = cl[j]
            acc_o = 0.0
            acc_n = 0.0
            for a in range(ndim):
                da = ci[a] - cj[a]
                acc_o += da * da
                da = new[a] - cj[a]
                acc_n += da * da
            target = di[j]
            e_o = math.sqrt(acc_o) - target
            e_n = math.sqrt(acc_n) - target
            delta += e_n * e_n - e_o * e_o
        if w != 0.0:
            gi = il[i]
            pen_o = 0.0
            pen_n = 0.0
            for a in range(ndim):
                xa = ci[a] - gi[a]
                pen_o += xa * xa
                xa = new[a] - gi[a]
                pen_n += xa * xa
            delta += w * (pen_n - pen_o)
        if delta <= 0.0 or us_l[s] < math.exp(-delta / temperature):
            cl[i] = new
            cost += delta
            accepted += 1
    coords[:] = cl
    return cost, accepted


def _coord_delta(cl, dl, il, w, i, a, cand):
    n = len(cl)
    ndim = len(cl[0])
    ci = cl[i]
    di = dl[i]
    base = ci[a]
    delta = 0.0
    for j in range(n):
        if j == i:
            continue
        cj = cl[j]
        acc_o = 0.0
        acc_n = 0.0
        for b in range(ndim):
            db = ci[b] - cj[b]
            acc_o += db * db
            db = (cand if b == a else ci[b]) - cj[b]
            acc_n += db * db
        target = di[j]
        e_o = math.sqrt(acc_o) - target
        e_n = math.sqrt(acc_n) - target
        delta += e_n * e_n - e_o * e_o
    if w != 0.0:
        ga = il[i][a]
        xo = base - ga
        xn = cand - ga
        delta += w * (xn * xn - xo * xo)
    return delta


def pattern_polish(coords, d, init, w, step0, shrink, min_step, max_passes):
    """Greedy per-coordinate pattern search with shrinking step, in place.

    Tries +step then -step on every coordinate; accepts strict
    improvements immediately. The step shrinks once a full pass (or
    ``max_passes`` passes) yields no improvement. Returns the final cost,
    recomputed from scratch at every step size to cancel incremental
    drift.
    """
    cl = coords.tolist()
    dl = d.tolist()
    il = init.tolist()
    n = len(cl)
    ndim = len(cl[0])
    cost = _cost_lists(cl, dl, il, w)
    step = step0
    while step >= min_step:
        for _ in range(max_passes):
            improved = False
            for i in range(n):
                for a in range(ndim):
                    base = cl[i][a]
                    dcost = _coord_delta(cl, dl, il, w, i, a, base + step)
                    if dcost < 0.0:
                        cl[i][a] = base + step
                        improved = True
                        continue
                    dcost = _coord_delta(cl, dl, il, w, i, a, base - step)
                    if dcost < 0.0:
                        cl[i][a] = base - step
                        improved = True
            if not improved:
                break
        cost = _cost_lists(cl, dl, il, w)
        step *= shrink
    coords[:] = cl
    return cost


def jacobi_sweeps(a, v, tol, max_sweeps):
    """Cyclic Jacobi rotations on symmetric ``a``, accumulating into ``v``.

    Both arrays are updated in place; ``v`` must start as the identity.
    Sweeps run until the off-diagonal Frobenius norm drops below ``tol``.
    Returns ``(n_sweeps, converged)``; eigenvalues end up on ``diag(a)``.
    """
    n = a.shape[0]
    tol2 = tol * tol
    sweeps = 0
    while True:
        off2 = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                aij = float(a[i, j])
                off2 += aij * aij
        if 2.0 * off2 < tol2:
            return sweeps, True
        if sweeps >= max_sweeps:
            return sweeps, False
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = float(a[p, q])
                if apq == 0.0:
                    continue
                app = float(a[p, p])
                aqq = float(a[q, q])
                tau = (aqq - app) / (2.0 * apq)
                if tau >= 0.0:
                    sgn = 1.0
                else:
                    sgn = -1.0
                abs_tau = tau if tau >= 0.0 else -tau
                if abs_tau > 1e154:
                    t = 1.0 / (2.0 * tau)
                else:
                    t = sgn / (abs_tau + math.sqrt(tau * tau + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                new_p = c * col_p - s * col_q
                new_q = s * col_p + c * col_q
                a[:, p] = new_p
                a[p, :] = new_p
                a[:, q] = new_q
                a[q, :] = new_q
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                vcol_p = v[:, p].copy()
                vcol_q = v[:, q].copy()
                v[:, p] = c * vcol_p - s * vcol_q
                v[:, q] = s * vcol_p + c * vcol_q
        sweeps += 1


def _as_f64(x):
    return np.ascontiguousarray(x, dtype=np.float64)
