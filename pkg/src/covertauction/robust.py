"""Worst-case nominal allocation and its pricing duals.

The offline half of the robust auction: given an uncertainty set over
bids, maximise worst-case social welfare to get the nominal allocation,
then solve the pricing dual whose multipliers define reservation
prices.  For box-shaped sets the worst case pins every supported bid to
its lower endpoint, so the bilinear problem collapses to one allocation
LP at those endpoints; historical sets go through a cutting-plane loop
that lands in the same place but stays honest about the general shape.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product

import numpy as np

from .lp import GREATER, LESS, LinearProgram, LpNumericalError, solve_lp
from .uncertainty import (
    HistoricalUncertainty,
    IntervalUncertainty,
    worst_case_profile,
)


def _market_arrays(values, costs, budgets):
    v = np.asarray(values, dtype=float)
    c = np.asarray(costs, dtype=float).ravel()
    b = np.asarray(budgets, dtype=float).ravel()
    if v.ndim != 2:
        raise ValueError("valuation matrix must be 2-d")
    n, m = v.shape
    if c.shape[0] != m:
        raise ValueError("cost vector length must match the channel count")
    if b.shape[0] != n:
        raise ValueError("budget vector length must match the bidder count")
    if np.any(v < 0.0) or np.any(c < 0.0) or np.any(b < 0.0):
        raise ValueError("valuations, costs and budgets must be nonnegative")
    return v, c, b


def allocation_lp(values, costs, budgets, *, exclude=()) -> LinearProgram:
    """The fractional channel-allocation program.

    max sum_ij (values_ij - costs_j) x_ij subject to per-channel supply
    (sum_i x_ij <= 1) and per-bidder spend (sum_j values_ij x_ij <=
    budgets_i), x >= 0.  Variable layout is bidder-major: x_ij sits at
    index i*m + j.  Rows are the m channel caps followed by the n budget
    rows, which is the order the dual programs expect.  ``exclude``
    removes bidders by zeroing their value row: with positive channel
    costs their variables then price out of any optimum, so the market
    solves as if they never bid, and the variable layout (and hence the
    dual row order) stays unchanged without extra bound rows.
    """
    v, c, b = _market_arrays(values, costs, budgets)
    n, m = v.shape
    d = n * m
    if exclude:
        v = v.copy()
        for k in exclude:
            v[k] = 0.0
    obj = (v - c[None, :]).ravel()
    rows = np.zeros((m + n, d))
    for j in range(m):
        rows[j, j::m] = 1.0
    for i in range(n):
        rows[m + i, i * m : (i + 1) * m] = v[i]
    rhs = np.concatenate([np.ones(m), b])
    return LinearProgram(
        objective=obj,
        constraints=rows,
        senses=(LESS,) * (m + n),
        rhs=rhs,
    )


@dataclass(frozen=True)
class AllocationSolution:
    allocation: np.ndarray
    objective: float
    channel_duals: np.ndarray
    budget_duals: np.ndarray


def solve_allocation(values, costs, budgets, *, exclude=()) -> AllocationSolution:
    v, _, _ = _market_arrays(values, costs, budgets)
    n, m = v.shape
    sol = solve_lp(allocation_lp(values, costs, budgets, exclude=exclude))
    if sol.status != "optimal":
        raise LpNumericalError(f"allocation solve ended {sol.status}")
    x = np.clip(sol.x.reshape(n, m), 0.0, None)
    for k in exclude:
        # Zero-cost channels leave the excluded rows degenerate, so pin
        # them rather than trust the vertex the simplex happened to pick.
        x[k] = 0.0
    return AllocationSolution(
        allocation=x,
        objective=sol.objective,
        channel_duals=sol.duals[:m],
        budget_duals=sol.duals[m:],
    )


def adapted_lp(gains, capacity, budget_coeffs, budget_rhs, active) -> LinearProgram:
    """Residual-market program shared by the online allocation solves.

    max sum_ij gains_ij y_ij with per-channel residual supply and
    per-bidder residual budgets priced at ``budget_coeffs``.  Inactive
    bidders keep their variables (pinned to zero) so solutions index
    like the full market; their budget rows are dropped entirely, which
    is also how a negative residual budget is handled upstream.
    """
    g = np.asarray(gains, dtype=float)
    n, m = g.shape
    cap = np.clip(np.asarray(capacity, dtype=float).ravel(), 0.0, None)
    bc = np.asarray(budget_coeffs, dtype=float)
    br = np.asarray(budget_rhs, dtype=float).ravel()
    act = np.asarray(active, dtype=bool).ravel()
    if cap.shape[0] != m or bc.shape != (n, m) or br.shape[0] != n or act.shape[0] != n:
        raise ValueError("residual-market arrays disagree on dimensions")
    d = n * m
    rows = [np.zeros((m, d))]
    for j in range(m):
        rows[0][j, j::m] = 1.0
    rhs = [cap]
    for i in np.flatnonzero(act):
        row = np.zeros(d)
        row[i * m : (i + 1) * m] = bc[i]
        rows.append(row[None, :])
        rhs.append(np.array([max(br[i], 0.0)]))
    upper = np.zeros(d)
    for i in range(n):
        if act[i]:
            upper[i * m : (i + 1) * m] = np.inf
    return LinearProgram(
        objective=g.ravel(),
        constraints=np.vstack(rows),
        senses=(LESS,) * (m + int(act.sum())),
        rhs=np.concatenate(rhs),
        upper=upper,
    )


def robust_dual_lp(z, costs, budgets, x_star, worst_profiles) -> LinearProgram:
    """Pricing dual of the worst-case allocation problem.

    Variables are [omega (m), phi (n), psi (n)], all nonnegative:
    min sum_j omega_j + sum_i (phi_i B_i + psi_i sum_j x*_ij ubar^i_j)
    s.t. omega_j + z_ij phi_i + z_ij psi_i >= z_ij - c_j for all (i, j).
    """
    zv, c, b = _market_arrays(z, costs, budgets)
    n, m = zv.shape
    xs = np.asarray(x_star, dtype=float)
    ub = np.asarray(worst_profiles, dtype=float)
    if xs.shape != (n, m) or ub.shape != (n, m):
        raise ValueError("x_star and worst_profiles must match the market shape")
    psi_cost = (xs * ub).sum(axis=1)
    obj = np.concatenate([np.ones(m), b, psi_cost])
    rows = np.zeros((n * m, m + 2 * n))
    rhs = np.zeros(n * m)
    for i in range(n):
        for j in range(m):
            r = i * m + j
            rows[r, j] = 1.0
            rows[r, m + i] = zv[i, j]
            rows[r, m + n + i] = zv[i, j]
            rhs[r] = zv[i, j] - c[j]
    return LinearProgram(
        objective=obj,
        constraints=rows,
        senses=(GREATER,) * (n * m),
        rhs=rhs,
        maximize=False,
    )


def deterministic_dual_lp(values, costs, budgets) -> LinearProgram:
    """Pricing dual of the plain allocation problem.

    Variables [omega (m), phi (n)] >= 0:
    min sum_j omega_j + sum_i phi_i B_i
    s.t. omega_j + v_ij phi_i >= v_ij - c_j for all (i, j).
    """
    v, c, b = _market_arrays(values, costs, budgets)
    n, m = v.shape
    obj = np.concatenate([np.ones(m), b])
    rows = np.zeros((n * m, m + n))
    rhs = np.zeros(n * m)
    for i in range(n):
        for j in range(m):
            r = i * m + j
            rows[r, j] = 1.0
            rows[r, m + i] = v[i, j]
            rhs[r] = v[i, j] - c[j]
    return LinearProgram(
        objective=obj,
        constraints=rows,
        senses=(GREATER,) * (n * m),
        rhs=rhs,
        maximize=False,
    )


@dataclass(frozen=True)
class RobustNominalResult:
    worst_case_valuations: np.ndarray
    nominal_allocation: np.ndarray
    omega: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    objective: float
    worst_profiles: np.ndarray
    status: str


_CUT_TOL = 1e-6
_MAX_CUT_ROUNDS = 10


def _cutting_plane_allocation(uset, costs, budgets):
    """Worst-case welfare maximisation via profile cuts.

    Epigraph form: variables (x, t) with t_i standing for bidder i's
    worst-case spend-equals-revenue term.  Each round adds the cut
    t_i <= sum_j u^i_j x_ij at the current per-bidder worst profile and
    stops once no profile is violated by more than the tolerance.  Box
    semantics make the worst profile allocation-independent, so this
    normally converges on the second pass; the loop and the final
    budget audit stay in place for set families without that property.
    """
    c = np.asarray(costs, dtype=float).ravel()
    b = np.asarray(budgets, dtype=float).ravel()
    n, m = uset.n_bidders, uset.n_channels
    d = n * m
    cuts = [[worst_case_profile(uset, np.ones(m), i, sense="lower")] for i in range(n)]

    x = np.zeros((n, m))
    for _ in range(_MAX_CUT_ROUNDS):
        # variables: x (d entries, bidder-major) then t (n entries)
        n_rows = m + n + sum(len(ci) for ci in cuts)
        rows = np.zeros((n_rows, d + n))
        rhs = np.zeros(n_rows)
        for j in range(m):
            rows[j, j:d:m] = 1.0
            rhs[j] = 1.0
        for i in range(n):
            rows[m + i, d + i] = 1.0
            rhs[m + i] = b[i]
        r = m + n
        for i in range(n):
            for cut in cuts[i]:
                rows[r, i * m : (i + 1) * m] = -cut
                rows[r, d + i] = 1.0
                rhs[r] = 0.0
                r += 1
        obj = np.concatenate([-np.tile(c, n), np.ones(n)])
        sol = solve_lp(
            LinearProgram(
                objective=obj,
                constraints=rows,
                senses=(LESS,) * n_rows,
                rhs=rhs,
            )
        )
        if sol.status != "optimal":
            raise LpNumericalError(f"cutting-plane master ended {sol.status}")
        x = np.clip(sol.x[:d].reshape(n, m), 0.0, None)
        t = sol.x[d:]
        violated = False
        for i in range(n):
            prof = worst_case_profile(uset, x[i], i, sense="lower")
            worst = float(prof @ x[i])
            if t[i] > worst + _CUT_TOL * (1.0 + abs(worst)):
                cuts[i].append(prof)
                violated = True
        if not violated:
            break
    else:
        raise LpNumericalError("cutting-plane loop failed to converge")
    return x


def solve_robust_nominal(uset, costs, budgets) -> RobustNominalResult:
    """Phase-a core: worst-case allocation plus pricing duals.

    Interval sets use the exact lower-endpoint reduction; historical
    sets run the cutting-plane loop.  Either way the final budget rows
    are audited at the worst-case valuations before the dual solve.
    """
    z = uset.lower_bounds()
    c = np.asarray(costs, dtype=float).ravel()
    b = np.asarray(budgets, dtype=float).ravel()
    if isinstance(uset, IntervalUncertainty):
        alloc = solve_allocation(z, c, b)
        x = alloc.allocation
        objective = alloc.objective
    elif isinstance(uset, HistoricalUncertainty):
        x = _cutting_plane_allocation(uset, c, b)
        objective = float(((z - c[None, :]) * x).sum())
        spend = (z * x).sum(axis=1)
        if np.any(spend > b + 1e-6 * (1.0 + np.abs(b))):
            raise LpNumericalError("cutting-plane result violates a budget")
    else:
        raise TypeError(f"unsupported uncertainty set {type(uset).__name__}")

    profiles = np.vstack(
        [worst_case_profile(uset, x[i], i, sense="lower") for i in range(uset.n_bidders)]
    )
    dual = solve_lp(robust_dual_lp(z, c, b, x, profiles))
    if dual.status != "optimal":
        raise LpNumericalError(f"pricing dual ended {dual.status}")
    m = uset.n_channels
    n = uset.n_bidders
    omega = np.clip(dual.x[:m], 0.0, None)
    phi = np.clip(dual.x[m : m + n], 0.0, None)
    psi = np.clip(dual.x[m + n :], 0.0, None)
    return RobustNominalResult(
        worst_case_valuations=z,
        nominal_allocation=x,
        omega=omega,
        phi=phi,
        psi=psi,
        objective=objective,
        worst_profiles=profiles,
        status="optimal",
    )


def reservation_prices(result: RobustNominalResult, costs) -> np.ndarray:
    """Minimum admissible bids implied by the pricing dual."""
    c = np.asarray(costs, dtype=float).ravel()
    z = result.worst_case_valuations
    lift = result.phi + result.psi
    return result.omega[None, :] + z * lift[:, None] + c[None, :]


def brute_force_welfare(valuations, costs, budgets, grid_resolution: int = 0) -> float:
    """Exact welfare optimum by vertex enumeration; desk-scale oracle.

    Every basic feasible point of {x >= 0, channel caps, budget rows}
    lives at the intersection of d active constraints, so enumerating
    d-subsets of the stacked row system and keeping the feasible
    solutions finds the LP optimum exactly.  A positive
    ``grid_resolution`` g additionally scans the uniform lattice
    {0, 1/g, ..., 1}^d as an independent lower-bound probe; the scan
    can never beat the vertex optimum, and a violation raises.
    """
    v, c, b = _market_arrays(valuations, costs, budgets)
    n, m = v.shape
    d = n * m
    if d > 9:
        raise ValueError("vertex enumeration is guarded to n*m <= 9")
    obj = (v - c[None, :]).ravel()
    rows = [np.zeros((m, d)), np.zeros((n, d)), -np.eye(d)]
    for j in range(m):
        rows[0][j, j::m] = 1.0
    for i in range(n):
        rows[1][i, i * m : (i + 1) * m] = v[i]
    system = np.vstack(rows)
    rhs = np.concatenate([np.ones(m), b, np.zeros(d)])
    best = 0.0  # x = 0 is always feasible
    n_rows = system.shape[0]
    for subset in combinations(range(n_rows), d):
        a_sq = system[list(subset)]
        if abs(np.linalg.det(a_sq)) < 1e-12:
            continue
        x = np.linalg.solve(a_sq, rhs[list(subset)])
        residual = system @ x - rhs
        if np.all(residual <= 1e-9 * (1.0 + np.abs(rhs))):
            best = max(best, float(obj @ x))
    if grid_resolution > 0:
        g = grid_resolution
        levels = np.linspace(0.0, 1.0, g + 1)
        grid_best = 0.0
        for point in product(levels, repeat=d):
            x = np.asarray(point)
            if np.any(system[: m + n] @ x > rhs[: m + n] + 1e-12):
                continue
            grid_best = max(grid_best, float(obj @ x))
        if grid_best > best + 1e-9:
            raise LpNumericalError("grid probe exceeded the vertex optimum")
    return best


def best_integral_welfare(valuations, costs, budgets) -> float:
    """Best welfare over one-winner-per-channel assignments (or none)."""
    v, c, b = _market_arrays(valuations, costs, budgets)
    n, m = v.shape
    if (n + 1) ** m > 2_000_000:
        raise ValueError("assignment enumeration too large")
    best = 0.0
    for assign in product(range(n + 1), repeat=m):
        spend = np.zeros(n)
        welfare = 0.0
        for j, w in enumerate(assign):
            if w == 0:
                continue
            i = w - 1
            spend[i] += v[i, j]
            welfare += v[i, j] - c[j]
        if np.all(spend <= b + 1e-12):
            best = max(best, welfare)
    return best
