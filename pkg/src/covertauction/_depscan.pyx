# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled detection-threshold scan. Mirrors _depscan_py operation for
operation; keep both in sync (the test suite asserts bit-identical output)."""

from libc.math cimport exp, log, INFINITY

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef double INV_PHI = 0.6180339887498949
cdef int _GOLDEN_MAX_ITER = 200


cdef Py_ssize_t _bisect_right(double[::1] a, double x) nogil:
    cdef Py_ssize_t lo = 0, hi = a.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if a[mid] <= x:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef Py_ssize_t _bisect_left(double[::1] a, double x) nogil:
    cdef Py_ssize_t lo = 0, hi = a.shape[0], mid
    while lo < hi:
        mid = (lo + hi) >> 1
        if a[mid] < x:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef struct ScanState:
    double best_dep
    double best_eps
    Py_ssize_t best_fa
    Py_ssize_t best_md


cdef double _consider(double[::1] y1s, double[::1] y2s, double eps,
                      ScanState *state) nogil:
    cdef Py_ssize_t n = y1s.shape[0]
    cdef Py_ssize_t fa = n - _bisect_right(y1s, eps)
    cdef Py_ssize_t md = _bisect_left(y2s, eps)
    cdef double dep = (<double>(fa + md)) / n
    if dep < state.best_dep:
        state.best_dep = dep
        state.best_eps = eps
        state.best_fa = fa
        state.best_md = md
    return dep


cdef int _scan(double[::1] y1s, double[::1] y2s, double sigma2,
               int grid_points, double quantile, double rel_tol,
               ScanState *state) nogil:
    # returns 0 on success, -1 for an empty search range
    cdef Py_ssize_t n = y1s.shape[0]
    cdef Py_ssize_t qi = <Py_ssize_t>(quantile * n)
    if qi > n - 1:
        qi = n - 1
    cdef double hi = y2s[qi]
    cdef double lo = sigma2 * (1.0 + 1e-6)
    if not hi > lo:
        return -1

    cdef double log_lo = log(lo)
    cdef double span = log(hi) - log_lo
    state.best_dep = INFINITY
    state.best_eps = lo
    state.best_fa = n
    state.best_md = n

    cdef double[64] grid_buf
    cdef double *grid = grid_buf
    cdef double dep_k, dep_best_val
    cdef int k, k_best
    # grid_points is capped by the caller at 64 for the stack buffer
    for k in range(grid_points):
        grid[k] = exp(log_lo + span * k / (grid_points - 1))
    dep_best_val = INFINITY
    k_best = 0
    for k in range(grid_points):
        dep_k = _consider(y1s, y2s, grid[k], state)
        if dep_k < dep_best_val:
            dep_best_val = dep_k
            k_best = k

    cdef double a, b, c, d, fc, fd
    a = grid[k_best - 1] if k_best > 0 else grid[0]
    b = grid[k_best + 1] if k_best < grid_points - 1 else grid[grid_points - 1]
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc = _consider(y1s, y2s, c, state)
    fd = _consider(y1s, y2s, d, state)
    cdef int it
    for it in range(_GOLDEN_MAX_ITER):
        if (b - a) <= rel_tol * b:
            break
        if fc < fd:
            b = d
            d = c
            fd = fc
            c = b - INV_PHI * (b - a)
            fc = _consider(y1s, y2s, c, state)
        else:
            a = c
            c = d
            fc = fd
            d = a + INV_PHI * (b - a)
            fd = _consider(y1s, y2s, d, state)
    return 0


def _prepare(cnp.ndarray hwm, cnp.ndarray hwg, double c1, double c2,
             double sigma2):
    cdef cnp.ndarray y1 = np.empty(hwm.shape[0], dtype=np.float64)
    cdef cnp.ndarray y2 = np.empty(hwm.shape[0], dtype=np.float64)
    cdef double[::1] mv_m = np.ascontiguousarray(hwm, dtype=np.float64)
    cdef double[::1] mv_g = np.ascontiguousarray(hwg, dtype=np.float64)
    cdef double[::1] v1 = y1
    cdef double[::1] v2 = y2
    cdef Py_ssize_t i, n = mv_m.shape[0]
    for i in range(n):
        v1[i] = sigma2 + c2 * mv_g[i]
        v2[i] = v1[i] + c1 * mv_m[i]
    y1.sort()
    y2.sort()
    return y1, y2


def optimal_dep(hwm, hwg, double c1, double c2, double sigma2,
                int grid_points, double quantile, double rel_tol):
    hwm = np.ascontiguousarray(hwm, dtype=np.float64)
    hwg = np.ascontiguousarray(hwg, dtype=np.float64)
    cdef Py_ssize_t n = hwm.shape[0]
    if n == 0:
        raise ValueError("need at least one sample")
    if sigma2 <= 0.0:
        raise ValueError("noise power must be > 0")
    if c1 < 0.0 or c2 < 0.0:
        raise ValueError("received power scales must be >= 0")
    if grid_points < 2 or grid_points > 64:
        raise ValueError("grid_points must be in [2, 64]")
    y1, y2 = _prepare(hwm, hwg, c1, c2, sigma2)
    cdef double[::1] y1s = y1
    cdef double[::1] y2s = y2
    cdef ScanState state
    if _scan(y1s, y2s, sigma2, grid_points, quantile, rel_tol, &state) != 0:
        raise ValueError("empty threshold search range")
    return (state.best_dep, state.best_eps,
            (<double>state.best_fa) / n, (<double>state.best_md) / n)


def optimal_dep_batch(hwm, hwg, c1_arr, c2_arr, double sigma2,
                      int grid_points, double quantile, double rel_tol):
    hwm = np.ascontiguousarray(hwm, dtype=np.float64)
    hwg = np.ascontiguousarray(hwg, dtype=np.float64)
    c1_arr = np.ascontiguousarray(c1_arr, dtype=np.float64)
    c2_arr = np.ascontiguousarray(c2_arr, dtype=np.float64)
    if c1_arr.shape != c2_arr.shape:
        raise ValueError("scale arrays must have matching shapes")
    cdef Py_ssize_t n = hwm.shape[0]
    if n == 0:
        raise ValueError("need at least one sample")
    if sigma2 <= 0.0:
        raise ValueError("noise power must be > 0")
    if grid_points < 2 or grid_points > 64:
        raise ValueError("grid_points must be in [2, 64]")
    cdef Py_ssize_t m = c1_arr.shape[0]
    cdef cnp.ndarray deps = np.empty(m, dtype=np.float64)
    cdef cnp.ndarray epss = np.empty(m, dtype=np.float64)
    cdef double[::1] out_d = deps
    cdef double[::1] out_e = epss
    cdef double[::1] c1v = c1_arr
    cdef double[::1] c2v = c2_arr
    cdef ScanState state
    cdef Py_ssize_t i
    for i in range(m):
        if c1v[i] < 0.0 or c2v[i] < 0.0:
            raise ValueError("received power scales must be >= 0")
        y1, y2 = _prepare(hwm, hwg, c1v[i], c2v[i], sigma2)
        if _scan(y1, y2, sigma2, grid_points, quantile, rel_tol, &state) != 0:
            raise ValueError("empty threshold search range")
        out_d[i] = state.best_dep
        out_e[i] = state.best_eps
    return deps, epss
