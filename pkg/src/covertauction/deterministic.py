"""Deterministic baseline auction that takes the realized bids at face value.

Same market, same rounding, no uncertainty set: the winner LP runs
directly on the submitted bids and the pricing dual turns its
multipliers into reservation prices.  The point of carrying this
mechanism around is the comparison; when the bids were computed from a
wrong guess about the warden, its payments can leave nodes with
negative true utility, which the robust mechanism is built to avoid.
"""

from __future__ import annotations

import numpy as np

from .rmca import AuctionOutcome, round_allocation
from .robust import _market_arrays, solve_allocation


def det_run(
    realized_bids,
    budgets,
    costs,
    rng: np.random.Generator,
    *,
    symmetric_payment: bool = False,
) -> AuctionOutcome:
    """Allocate, price and round on the bids alone.

    Payments follow the printed formula: each bidder pays reservation
    over their own allocation plus the surplus others would capture in
    a market without them.  The formula omits the with-bidder surplus
    subtraction its robust counterpart carries; ``symmetric_payment``
    adds that subtraction back for comparison.  At exact LP optima the
    extra term vanishes anyway (reservation equals bid on the support),
    so the two variants only separate under degeneracy.
    """
    v, c, b = _market_arrays(realized_bids, costs, budgets)
    n, m = v.shape
    alloc = solve_allocation(v, c, b)
    x = alloc.allocation

    # The pricing dual is the allocation program's own dual, so the
    # multipliers come straight off the simplex instead of a second
    # solve.  (The robust mechanism cannot do this: its pricing dual is
    # a separate program from its cutting-plane master.)
    omega = np.clip(alloc.channel_duals, 0.0, None)
    phi = np.clip(alloc.budget_duals, 0.0, None)
    r = omega[None, :] + v * phi[:, None] + c[None, :]

    margin = v - r
    mass = x.sum(axis=1)
    payments = np.empty(n)
    for k in range(n):
        if mass[k] <= 1e-12:
            # A bidder who won nothing leaves the market unchanged when
            # removed, so the current optimum doubles as the removal
            # optimum and no re-solve is needed.
            removed = x
        else:
            removed = solve_allocation(v, c, b, exclude=(k,)).allocation
        others = np.arange(n) != k
        payments[k] = float((x[k] * r[k]).sum()) + float(
            (margin[others] * removed[others]).sum()
        )
        if symmetric_payment:
            payments[k] -= float((margin[others] * x[others]).sum())

    rounded = round_allocation(x, payments, rng)
    return AuctionOutcome(
        fractional_allocation=x,
        payments=payments,
        winners=rounded.winners,
        channel_charges=rounded.channel_charges,
        total_charges=rounded.total_charges,
        social_welfare=float(((v - c[None, :]) * x).sum()),
        rejected=False,
        mechanism="deterministic",
    )


def det_true_utility(outcome: AuctionOutcome, true_valuations) -> np.ndarray:
    """Per-node utility scored at what the channels were really worth.

    The mechanism charged on bid valuations; if the true ones (say,
    from the warden's actual position) are lower, this can go negative.
    """
    tv = np.asarray(true_valuations, dtype=float)
    a = outcome.fractional_allocation
    if tv.shape != a.shape:
        raise ValueError("true valuations must match the allocation shape")
    return (tv * a).sum(axis=1) - outcome.payments
