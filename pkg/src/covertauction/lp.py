"""Dense two-phase simplex solver for the auction programs.

The mechanism code needs exact basic solutions and the dual prices that
come with them; interior-point solvers hand back face-interior points
that break the reservation-price bookkeeping, so we keep a small revised
simplex here instead of wrapping scipy.  Problems are tiny (tens of
variables), dense linear algebra is fine.

Sign convention for the reported duals: ``duals[i]`` is the sensitivity
d(objective)/d(rhs[i]) of the *stated* problem, whatever mix of senses
and max/min it uses.  For a maximisation with ``<=`` rows that is the
familiar nonnegative shadow price.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve

LESS = "<="
GREATER = ">="
EQUAL = "=="

_SENSES = (LESS, GREATER, EQUAL)

_OPT_TOL = 1e-9
_PIVOT_TOL = 1e-11
_FEAS_TOL = 1e-8
_STALL_LIMIT = 12
_MAX_ITER = 20000


class LpError(Exception):
    """Malformed linear program."""


class LpNumericalError(LpError):
    """The solver finished but its own post-checks failed."""


@dataclass(frozen=True)
class LinearProgram:
    objective: np.ndarray
    constraints: np.ndarray
    senses: tuple
    rhs: np.ndarray
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    maximize: bool = True


@dataclass(frozen=True)
class LpSolution:
    status: str
    x: np.ndarray
    objective: float
    duals: np.ndarray
    iterations: int = 0
    extra: dict = field(default_factory=dict)


def _validated(lp: LinearProgram):
    c = np.asarray(lp.objective, dtype=float).ravel()
    n = c.shape[0]
    if n == 0:
        raise LpError("objective has no variables")
    a = np.asarray(lp.constraints, dtype=float).reshape(-1, n)
    b = np.asarray(lp.rhs, dtype=float).ravel()
    m = a.shape[0]
    if b.shape[0] != m or len(lp.senses) != m:
        raise LpError("constraint matrix, senses and rhs disagree on row count")
    for s in lp.senses:
        if s not in _SENSES:
            raise LpError(f"unknown constraint sense {s!r}")
    lower = (
        np.zeros(n)
        if lp.lower is None
        else np.asarray(lp.lower, dtype=float).ravel()
    )
    upper = (
        np.full(n, np.inf)
        if lp.upper is None
        else np.asarray(lp.upper, dtype=float).ravel()
    )
    if lower.shape[0] != n or upper.shape[0] != n:
        raise LpError("bound arrays must match the variable count")
    if not (np.all(np.isfinite(c)) and np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise LpError("objective, constraints and rhs must be finite")
    if np.any(np.isnan(lower)) or np.any(np.isnan(upper)):
        raise LpError("bounds may be infinite but not NaN")
    if np.any(lower > upper):
        raise LpError("a lower bound exceeds its upper bound")
    return c, a, b, list(lp.senses), lower, upper


def _simplex(a, b, c, basis, barred, start_bland=False):
    """Maximise c'x over {Ax = b, x >= 0} from the given starting basis.

    Dantzig pricing with a first-lowest-index tie-break; after
    _STALL_LIMIT consecutive degenerate pivots we fall back to Bland's
    rule, which cannot cycle.  Returns (status, basis, x_basic, duals,
    iterations).
    """
    m, n = a.shape
    basis = list(basis)
    bland = start_bland
    stall = 0
    for it in range(_MAX_ITER):
        try:
            lu = lu_factor(a[:, basis])
        except Exception as exc:  # singular basis: numerical breakdown
            raise LpNumericalError(f"basis factorisation failed: {exc}") from exc
        xb = lu_solve(lu, b)
        y = lu_solve(lu, c[basis], trans=1)
        reduced = c - y @ a
        reduced[basis] = 0.0
        candidates = (~barred) & (reduced > _OPT_TOL)
        if not candidates.any():
            return "optimal", basis, xb, y, it
        if bland:
            enter = int(np.flatnonzero(candidates)[0])
        else:
            scores = np.where(candidates, reduced, -np.inf)
            enter = int(np.argmax(scores))  # first occurrence on ties
        direction = lu_solve(lu, a[:, enter])
        movable = direction > _PIVOT_TOL
        if not movable.any():
            return "unbounded", basis, xb, y, it
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = np.where(movable, xb / direction, np.inf)
        ratios = np.maximum(ratios, 0.0)
        theta = float(ratios.min())
        ties = np.flatnonzero(ratios <= theta + 1e-12)
        basis_ids = np.asarray(basis)[ties]
        leave = int(ties[np.argmin(basis_ids)])
        if theta <= 1e-10:
            stall += 1
            if stall >= _STALL_LIMIT:
                bland = True
        else:
            stall = 0
            bland = start_bland
        basis[leave] = enter
    raise LpNumericalError("simplex iteration limit reached")


def solve_lp(lp: LinearProgram) -> LpSolution:
    c0, a0, b0, senses, lower, upper = _validated(lp)
    n = c0.shape[0]
    sign = 1.0 if lp.maximize else -1.0
    c_int = sign * c0

    # Shift/mirror variables so every transformed variable lives in
    # [0, inf).  col_map records how to undo the transform.
    cols = []
    ct = []
    offsets = np.zeros(n)
    col_map = []
    extra_rows = []  # (col_index_in_transformed, rhs) for finite widths
    for k in range(n):
        lo, up = lower[k], upper[k]
        if np.isfinite(lo):
            offsets[k] = lo
            col_map.append((k, 1.0))
            cols.append(a0[:, k])
            ct.append(c_int[k])
            if np.isfinite(up):
                extra_rows.append((len(cols) - 1, up - lo))
        elif np.isfinite(up):
            offsets[k] = up
            col_map.append((k, -1.0))
            cols.append(-a0[:, k])
            ct.append(-c_int[k])
        else:
            col_map.append((k, 1.0))
            cols.append(a0[:, k])
            ct.append(c_int[k])
            col_map.append((k, -1.0))
            cols.append(-a0[:, k])
            ct.append(-c_int[k])
    at = np.column_stack(cols) if cols else np.zeros((a0.shape[0], 0))
    ct = np.asarray(ct)
    obj_const = float(c_int @ offsets)
    b_eff = b0 - a0 @ offsets

    # Append bound rows for two-sided variables, then normalise all rows
    # to nonnegative rhs and attach slack/surplus and artificial columns.
    nt = at.shape[1]
    rows = [at]
    rhs_all = [b_eff]
    senses_all = list(senses)
    for j, width in extra_rows:
        row = np.zeros(nt)
        row[j] = 1.0
        rows.append(row[None, :])
        rhs_all.append(np.array([width]))
        senses_all.append(LESS)
    a_all = np.vstack(rows)
    b_all = np.concatenate(rhs_all)
    m_all = a_all.shape[0]
    n_struct_rows = len(senses)

    if m_all == 0:
        if np.any(ct > _OPT_TOL):
            return LpSolution("unbounded", np.full(n, np.nan), np.nan, np.zeros(0))
        x = offsets.copy()
        return LpSolution("optimal", x, float(c0 @ x), np.zeros(0))

    flip = np.ones(m_all)
    neg = b_all < 0
    flip[neg] = -1.0
    a_all = a_all * flip[:, None]
    b_all = b_all * flip
    senses_flipped = []
    for i, s in enumerate(senses_all):
        if not neg[i] or s == EQUAL:
            senses_flipped.append(s)
        else:
            senses_flipped.append(GREATER if s == LESS else LESS)

    aug_cols = []
    aug_costs = []
    basis = [None] * m_all
    artificial = []
    col_idx = nt
    for i, s in enumerate(senses_flipped):
        if s == LESS:
            col = np.zeros(m_all)
            col[i] = 1.0
            aug_cols.append(col)
            aug_costs.append(0.0)
            basis[i] = col_idx
            col_idx += 1
        elif s == GREATER:
            col = np.zeros(m_all)
            col[i] = -1.0
            aug_cols.append(col)
            aug_costs.append(0.0)
            col_idx += 1
    for i, s in enumerate(senses_flipped):
        if basis[i] is None:
            col = np.zeros(m_all)
            col[i] = 1.0
            aug_cols.append(col)
            aug_costs.append(0.0)
            basis[i] = col_idx
            artificial.append(col_idx)
            col_idx += 1
    a_std = np.hstack([a_all] + [c[:, None] for c in aug_cols]) if aug_cols else a_all
    n_std = a_std.shape[1]
    art_mask = np.zeros(n_std, dtype=bool)
    art_mask[artificial] = True

    iterations = 0
    keep_rows = np.arange(m_all)
    if artificial:
        c1 = np.zeros(n_std)
        c1[artificial] = -1.0
        status, basis, xb, _, it1 = _simplex(
            a_std, b_all, c1, basis, np.zeros(n_std, dtype=bool)
        )
        iterations += it1
        if status != "optimal":
            raise LpNumericalError("phase one terminated abnormally")
        infeas = float(c1[basis] @ xb)
        if infeas < -_FEAS_TOL * (1.0 + float(np.abs(b_all).sum())):
            return LpSolution(
                "infeasible", np.full(n, np.nan), np.nan, np.full(len(senses), np.nan)
            )
        # Pivot artificials out of the basis, dropping rows that turn
        # out redundant.
        while True:
            spots = [i for i, bi in enumerate(basis) if bi in artificial]
            if not spots:
                break
            i = spots[0]
            lu = lu_factor(a_std[:, basis])
            e = np.zeros(len(basis))
            e[i] = 1.0
            row = lu_solve(lu, e, trans=1) @ a_std
            row[art_mask] = 0.0
            pivots = np.flatnonzero(np.abs(row) > 1e-7)
            pivots = [int(j) for j in pivots if j not in basis]
            if pivots:
                basis[i] = pivots[0]
            else:
                a_std = np.delete(a_std, i, axis=0)
                b_all = np.delete(b_all, i)
                keep_rows = np.delete(keep_rows, i)
                del basis[i]

    c2 = np.concatenate([ct, np.zeros(n_std - nt)])
    status, basis, xb, y, it2 = _simplex(a_std, b_all, c2, basis, art_mask)
    iterations += it2
    if status == "unbounded":
        return LpSolution(
            "unbounded", np.full(n, np.nan), np.nan, np.full(len(senses), np.nan), iterations
        )
    if status != "optimal":
        raise LpNumericalError("phase two terminated abnormally")

    x_t = np.zeros(n_std)
    x_t[basis] = np.maximum(xb, 0.0)
    if artificial and float(x_t[art_mask].sum()) > _FEAS_TOL:
        raise LpNumericalError("artificial variable stayed positive")
    x = offsets.copy()
    for j, (k, s) in enumerate(col_map):
        x[k] += s * x_t[j]

    # Reassemble duals in the caller's row order and sign convention.
    y_full = np.zeros(m_all)
    y_full[keep_rows] = y
    duals = sign * (y_full[:n_struct_rows] * flip[:n_struct_rows])

    _post_check(c0, a0, b0, senses, lower, upper, x, duals, lp.maximize)
    return LpSolution("optimal", x, float(c0 @ x), duals, iterations)


def _post_check(c0, a0, b0, senses, lower, upper, x, duals, maximize):
    if not np.all(np.isfinite(x)):
        raise LpNumericalError("non-finite primal solution")
    row_scale = 1.0 + np.abs(b0)
    vals = a0 @ x if a0.size else np.zeros(len(senses))
    for i, s in enumerate(senses):
        err = vals[i] - b0[i]
        if s == LESS and err > _FEAS_TOL * row_scale[i]:
            raise LpNumericalError(f"row {i} violates <= by {err:.2e}")
        if s == GREATER and err < -_FEAS_TOL * row_scale[i]:
            raise LpNumericalError(f"row {i} violates >= by {-err:.2e}")
        if s == EQUAL and abs(err) > _FEAS_TOL * row_scale[i]:
            raise LpNumericalError(f"row {i} violates == by {abs(err):.2e}")
    bscale = 1.0 + np.maximum(np.abs(lower), 1.0)
    if np.any(x < lower - _FEAS_TOL * bscale) or np.any(
        x > upper + _FEAS_TOL * np.where(np.isfinite(upper), 1.0 + np.abs(upper), 1.0)
    ):
        raise LpNumericalError("variable bound violated")
    # Complementary slackness on inequality rows.
    obj_scale = 1.0 + abs(float(c0 @ x))
    for i, s in enumerate(senses):
        if s == EQUAL:
            continue
        slack = b0[i] - vals[i] if s == LESS else vals[i] - b0[i]
        if abs(duals[i] * slack) > 1e-6 * obj_scale * row_scale[i]:
            raise LpNumericalError(f"complementary slackness fails on row {i}")
