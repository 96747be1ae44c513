"""Numpy fallback for the detection-threshold scan.

Kept operation-for-operation identical to the compiled variant in
_depscan.pyx: same arithmetic order, same grid construction, same
golden-section schedule. Both backends therefore return bit-identical
results for identical inputs.
"""
from __future__ import annotations

import math

import numpy as np

INV_PHI = 0.6180339887498949  # (sqrt(5) - 1) / 2
_GOLDEN_MAX_ITER = 200


def _counts(y1s: np.ndarray, y2s: np.ndarray, eps: float) -> tuple[int, int]:
    n = y1s.shape[0]
    fa = n - int(np.searchsorted(y1s, eps, side="right"))  # draws with Y1 > eps
    md = int(np.searchsorted(y2s, eps, side="left"))  # draws with Y2 < eps
    return fa, md


def optimal_dep(
    hwm: np.ndarray,
    hwg: np.ndarray,
    c1: float,
    c2: float,
    sigma2: float,
    grid_points: int,
    quantile: float,
    rel_tol: float,
) -> tuple[float, float, float, float]:
    """Minimize the empirical detection error probability over thresholds.

    Y1 = sigma2 + c2*hwg (no transmission), Y2 = Y1 + c1*hwm (transmission);
    dep(eps) = P(Y1 > eps) + P(Y2 < eps). The scan uses a logarithmic grid
    on (sigma2, quantile of Y2] followed by golden-section refinement of the
    best bracket. Returns (dep, eps, p_fa, p_md).
    """
    n = hwm.shape[0]
    if n == 0:
        raise ValueError("need at least one sample")
    if sigma2 <= 0.0:
        raise ValueError("noise power must be > 0")
    if c1 < 0.0 or c2 < 0.0:
        raise ValueError("received power scales must be >= 0")
    y1 = sigma2 + c2 * hwg
    y2 = y1 + c1 * hwm
    y1s = np.sort(y1)
    y2s = np.sort(y2)
    hi = float(y2s[min(n - 1, int(quantile * n))])
    lo = sigma2 * (1.0 + 1e-6)
    if not hi > lo:
        raise ValueError("empty threshold search range")

    log_lo = math.log(lo)
    span = math.log(hi) - log_lo
    best_dep = math.inf
    best_eps = lo
    best_fa = n
    best_md = n

    def consider(eps: float) -> float:
        nonlocal best_dep, best_eps, best_fa, best_md
        fa, md = _counts(y1s, y2s, eps)
        dep = (fa + md) / n
        if dep < best_dep:
            best_dep = dep
            best_eps = eps
            best_fa = fa
            best_md = md
        return dep

    grid = [math.exp(log_lo + span * k / (grid_points - 1)) for k in range(grid_points)]
    deps = [consider(e) for e in grid]
    k_best = 0
    for k in range(1, grid_points):
        if deps[k] < deps[k_best]:
            k_best = k

    a = grid[k_best - 1] if k_best > 0 else grid[0]
    b = grid[k_best + 1] if k_best < grid_points - 1 else grid[grid_points - 1]
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc = consider(c)
    fd = consider(d)
    for _ in range(_GOLDEN_MAX_ITER):
        if (b - a) <= rel_tol * b:
            break
        if fc < fd:
            b = d
            d = c
            fd = fc
            c = b - INV_PHI * (b - a)
            fc = consider(c)
        else:
            a = c
            c = d
            fc = fd
            d = a + INV_PHI * (b - a)
            fd = consider(d)

    return best_dep, best_eps, best_fa / n, best_md / n


def optimal_dep_batch(
    hwm: np.ndarray,
    hwg: np.ndarray,
    c1_arr: np.ndarray,
    c2_arr: np.ndarray,
    sigma2: float,
    grid_points: int,
    quantile: float,
    rel_tol: float,
) -> tuple[np.ndarray, np.ndarray]:
    """optimal_dep over paired arrays of (c1, c2) with shared fading draws."""
    c1_arr = np.asarray(c1_arr, dtype=float)
    c2_arr = np.asarray(c2_arr, dtype=float)
    if c1_arr.shape != c2_arr.shape:
        raise ValueError("scale arrays must have matching shapes")
    deps = np.empty(c1_arr.shape[0])
    epss = np.empty(c1_arr.shape[0])
    for i in range(c1_arr.shape[0]):
        deps[i], epss[i], _, _ = optimal_dep(
            hwm, hwg, float(c1_arr[i]), float(c2_arr[i]),
            sigma2, grid_points, quantile, rel_tol,
        )
    return deps, epss
