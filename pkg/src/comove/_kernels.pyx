# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels. Mirrors ``_kernels_py`` operation for operation.

Keep the arithmetic order in lockstep with the pure-Python file: same
scalar accumulation sequence, same libm calls, no reordering. The test
suite asserts bit-identical outputs across the two backends, which is
what lets the pipeline produce the same artifacts on machines with and
without a compiler.
"""

from libc.math cimport exp, sqrt
from libc.stdint cimport int64_t

import numpy as np

BACKEND = "compiled"


def hy_sum(const int64_t[::1] tx, const double[::1] rx,
           const int64_t[::1] sy, const double[::1] ry):
    """Sum rx[i]*ry[j] over pairs of half-open intervals that overlap."""
    cdef Py_ssize_t nx = rx.shape[0]
    cdef Py_ssize_t ny = ry.shape[0]
    cdef double acc = 0.0
    cdef Py_ssize_t i, j, j0 = 0
    cdef int64_t lo, hi
    with nogil:
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


cdef double _cost(const double[:, ::1] coords, const double[:, ::1] d,
                  const double[:, ::1] init, double w) noexcept nogil:
    cdef Py_ssize_t n = coords.shape[0]
    cdef Py_ssize_t ndim = coords.shape[1]
    cdef double cost = 0.0, acc, da, e, pen, xa
    cdef Py_ssize_t i, j, a
    for i in range(n):
        for j in range(i + 1, n):
            acc = 0.0
            for a in range(ndim):
                da = coords[i, a] - coords[j, a]
                acc += da * da
            e = sqrt(acc) - d[i, j]
            cost += e * e
    if w != 0.0:
        for i in range(n):
            pen = 0.0
            for a in range(ndim):
                xa = coords[i, a] - init[i, a]
                pen += xa * xa
            cost += w * pen
    return cost


def pair_cost(const double[:, ::1] coords, const double[:, ::1] d,
              const double[:, ::1] init, double w):
    """Stress plus, when ``w`` is nonzero, the anchored quadratic penalty."""
    return _cost(coords, d, init, w)


def anneal_level(double[:, ::1] coords, const double[:, ::1] d,
                 const double[:, ::1] init, double w, double temperature,
                 double scale, const int64_t[::1] idx,
                 const double[:, ::1] moves, const double[::1] us,
                 double cost):
    """Run one temperature level of single-point Metropolis moves in place."""
    cdef Py_ssize_t n = coords.shape[0]
    cdef Py_ssize_t ndim = coords.shape[1]
    cdef Py_ssize_t nsteps = idx.shape[0]
    cdef Py_ssize_t s, i, j, a
    cdef long accepted = 0
    cdef double delta, acc_o, acc_n, da, target, e_o, e_n
    cdef double pen_o, pen_n, xa
    cdef double[::1] new = np.empty(ndim, dtype=np.float64)
    with nogil:
        for s in range(nsteps):
            i = <Py_ssize_t> idx[s]
            for a in range(ndim):
                new[a] = coords[i, a] + scale * moves[s, a]
            delta = 0.0
            for j in range(n):
                if j == i:
                    continue
                acc_o = 0.0
                acc_n = 0.0
                for a in range(ndim):
                    da = coords[i, a] - coords[j, a]
                    acc_o += da * da
                    da = new[a] - coords[j, a]
                    acc_n += da * da
                target = d[i, j]
                e_o = sqrt(acc_o) - target
                e_n = sqrt(acc_n) - target
                delta += e_n * e_n - e_o * e_o
            if w != 0.0:
                pen_o = 0.0
                pen_n = 0.0
                for a in range(ndim):
                    xa = coords[i, a] - init[i, a]
                    pen_o += xa * xa
                    xa = new[a] - init[i, a]
                    pen_n += xa * xa
                delta += w * (pen_n - pen_o)
            if delta <= 0.0 or us[s] < exp(-delta / temperature):
                for a in range(ndim):
                    coords[i, a] = new[a]
                cost += delta
                accepted += 1
    return cost, accepted


cdef double _coord_delta(const double[:, ::1] coords, const double[:, ::1] d,
                         const double[:, ::1] init, double w,
                         Py_ssize_t i, Py_ssize_t a, double cand) noexcept nogil:
    cdef Py_ssize_t n = coords.shape[0]
    cdef Py_ssize_t ndim = coords.shape[1]
    cdef double base = coords[i, a]
    cdef double delta = 0.0, acc_o, acc_n, db, target, e_o, e_n, ga, xo, xn
    cdef Py_ssize_t j, b
    for j in range(n):
        if j == i:
            continue
        acc_o = 0.0
        acc_n = 0.0
        for b in range(ndim):
            db = coords[i, b] - coords[j, b]
            acc_o += db * db
            db = (cand if b == a else coords[i, b]) - coords[j, b]
            acc_n += db * db
        target = d[i, j]
        e_o = sqrt(acc_o) - target
        e_n = sqrt(acc_n) - target
        delta += e_n * e_n - e_o * e_o
    if w != 0.0:
        ga = init[i, a]
        xo = base - ga
        xn = cand - ga
        delta += w * (xn * xn - xo * xo)
    return delta


def pattern_polish(double[:, ::1] coords, const double[:, ::1] d,
                   const double[:, ::1] init, double w, double step0,
                   double shrink, double min_step, long max_passes):
    """Greedy per-coordinate pattern search with shrinking step, in place."""
    cdef Py_ssize_t n = coords.shape[0]
    cdef Py_ssize_t ndim = coords.shape[1]
    cdef double cost = _cost(coords, d, init, w)
    cdef double step = step0
    cdef double base, dcost
    cdef Py_ssize_t i, a
    cdef long p
    cdef bint improved
    while step >= min_step:
        for p in range(max_passes):
            improved = False
            for i in range(n):
                for a in range(ndim):
                    base = coords[i, a]
                    dcost = _coord_delta(coords, d, init, w, i, a, base + step)
                    if dcost < 0.0:
                        coords[i, a] = base + step
                        improved = True
                        continue
                    dcost = _coord_delta(coords, d, init, w, i, a, base - step)
                    if dcost < 0.0:
                        coords[i, a] = base - step
                        improved = True
            if not improved:
                break
        cost = _cost(coords, d, init, w)
        step *= shrink
    return cost


def jacobi_sweeps(double[:, ::1] a, double[:, ::1] v, double tol,
                  long max_sweeps):
    """Cyclic Jacobi rotations on symmetric ``a``, accumulating into ``v``."""
    cdef Py_ssize_t n = a.shape[0]
    cdef double tol2 = tol * tol
    cdef long sweeps = 0
    cdef double off2, aij, apq, app, aqq, tau, sgn, abs_tau, t, c, s
    cdef double akp, akq, vkp, vkq
    cdef Py_ssize_t i, j, p, q, k
    while True:
        off2 = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                aij = a[i, j]
                off2 += aij * aij
        if 2.0 * off2 < tol2:
            return sweeps, True
        if sweeps >= max_sweeps:
            return sweeps, False
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                app = a[p, p]
                aqq = a[q, q]
                tau = (aqq - app) / (2.0 * apq)
                sgn = 1.0 if tau >= 0.0 else -1.0
                abs_tau = tau if tau >= 0.0 else -tau
                if abs_tau > 1e154:
                    t = 1.0 / (2.0 * tau)
                else:
                    t = sgn / (abs_tau + sqrt(tau * tau + 1.0))
                c = 1.0 / sqrt(t * t + 1.0)
                s = t * c
                for k in range(n):
                    if k == p or k == q:
                        continue
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[p, k] = a[k, p]
                    a[k, q] = s * akp + c * akq
                    a[q, k] = a[k, q]
                a[p, p] = app - t * apq
                a[q, q] = aqq + t * apq
                a[p, q] = 0.0
                a[q, p] = 0.0
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
        sweeps += 1
