import numpy as np
import pytest

from covertauction.lp import solve_lp
from covertauction.robust import (
    allocation_lp,
    best_integral_welfare,
    brute_force_welfare,
    deterministic_dual_lp,
    reservation_prices,
    solve_allocation,
    solve_robust_nominal,
)
from covertauction.uncertainty import (
    HistoricalUncertainty,
    IntervalUncertainty,
    sample_realized_bids,
)


def interval(center, radius):
    return IntervalUncertainty(
        center=np.asarray(center, dtype=float), radius=np.asarray(radius, dtype=float)
    )


# ------------------------------------------------------ hand examples


def test_single_bidder_single_channel_hand_example():
    # bid interval [3, 5], cost 1, budget 10: worst case pins the bid
    # at 3, the full channel is sold, welfare 2, and the reservation
    # price equals the worst-case bid
    uset = interval([[4.0]], [[1.0]])
    res = solve_robust_nominal(uset, costs=[1.0], budgets=[10.0])
    assert res.worst_case_valuations[0, 0] == pytest.approx(3.0)
    assert res.nominal_allocation[0, 0] == pytest.approx(1.0, abs=1e-9)
    assert res.objective == pytest.approx(2.0, abs=1e-9)
    r = reservation_prices(res, [1.0])
    assert r[0, 0] == pytest.approx(3.0, abs=1e-8)


def test_no_profitable_trade():
    uset = interval([[1.0, 0.8]], [[0.5, 0.3]])
    res = solve_robust_nominal(uset, costs=[2.0, 2.0], budgets=[10.0])
    np.testing.assert_allclose(res.nominal_allocation, 0.0, atol=1e-10)
    assert res.objective == pytest.approx(0.0, abs=1e-10)
    # with every dual at zero the reservation price falls back to cost
    r = reservation_prices(res, [2.0, 2.0])
    np.testing.assert_allclose(r, [[2.0, 2.0]], atol=1e-8)


def test_zero_budgets_empty_allocation():
    uset = interval([[4.0]], [[0.5]])
    res = solve_robust_nominal(uset, costs=[1.0], budgets=[0.0])
    assert res.nominal_allocation[0, 0] == pytest.approx(0.0, abs=1e-10)
    assert res.objective == pytest.approx(0.0, abs=1e-10)


def test_radius_zero_matches_deterministic_lp_exactly():
    rng = np.random.default_rng(42)
    for _ in range(20):
        n, m = int(rng.integers(1, 5)), int(rng.integers(1, 5))
        center = rng.uniform(1.0, 5.0, (n, m))
        costs = rng.uniform(0.5, 3.0, m)
        budgets = rng.uniform(1.5, 5.0, n)
        res = solve_robust_nominal(interval(center, np.zeros((n, m))), costs, budgets)
        det = solve_allocation(center, costs, budgets)
        # same builder, same arrays, same pivot path: bitwise equality
        np.testing.assert_array_equal(res.nominal_allocation, det.allocation)
        assert res.objective == det.objective


# ------------------------------------------------- dual-side contracts


def test_reservation_prices_dominate_worst_case_bids():
    # dual feasibility omega_j + z(phi+psi) >= z - c rearranges to
    # r* >= z; and every dual term is nonnegative so r* >= c
    rng = np.random.default_rng(7)
    for _ in range(20):
        n, m = int(rng.integers(1, 6)), int(rng.integers(1, 5))
        center = rng.uniform(1.0, 5.0, (n, m))
        radius = rng.uniform(0.0, 0.8, (n, m))
        radius = np.minimum(radius, center)  # keep intervals nonnegative
        costs = rng.uniform(0.5, 3.0, m)
        budgets = rng.uniform(1.5, 5.0, n)
        uset = interval(center, radius)
        res = solve_robust_nominal(uset, costs, budgets)
        r = reservation_prices(res, costs)
        assert np.all(r >= res.worst_case_valuations - 1e-7)
        assert np.all(r >= costs[None, :] - 1e-9)
        assert np.all(res.omega >= 0) and np.all(res.phi >= 0) and np.all(res.psi >= 0)


def test_worst_case_objective_lower_bounds_sampled_profiles():
    rng = np.random.default_rng(8)
    center = rng.uniform(2.0, 4.0, (3, 3))
    radius = rng.uniform(0.1, 0.6, (3, 3))
    costs = rng.uniform(0.5, 2.0, 3)
    budgets = rng.uniform(1.5, 5.0, 3)
    uset = interval(center, radius)
    res = solve_robust_nominal(uset, costs, budgets)
    x = res.nominal_allocation
    for _ in range(200):
        u = sample_realized_bids(uset, rng)
        assert res.objective <= ((u - costs[None, :]) * x).sum() + 1e-8


def test_robust_welfare_monotone_in_radius_market_regime():
    # not a theorem for arbitrary data (see the decision notes), but on
    # auction-shaped instances the worst-case welfare must shrink as
    # the intervals widen
    rng = np.random.default_rng(9)
    for _ in range(10):
        n, m = 5, 4
        center = rng.uniform(2.0, 4.7, (n, m))
        base_radius = rng.uniform(0.05, 0.4, (n, m))
        costs = np.clip(rng.normal(2.0, 1.0, m), 0.0, None)
        budgets = rng.uniform(1.5, 5.0, n)
        prev = np.inf
        for scale in (0.0, 0.5, 1.0, 1.5):
            radius = np.minimum(scale * base_radius, center)
            res = solve_robust_nominal(interval(center, radius), costs, budgets)
            assert res.objective <= prev + 1e-8
            prev = res.objective


def test_explicit_deterministic_dual_agrees_with_primal_duals():
    rng = np.random.default_rng(10)
    for _ in range(20):
        n, m = int(rng.integers(2, 5)), int(rng.integers(2, 5))
        v = rng.uniform(1.0, 5.0, (n, m))
        costs = rng.uniform(0.5, 2.0, m)
        budgets = rng.uniform(1.5, 5.0, n)
        primal = solve_allocation(v, costs, budgets)
        dual = solve_lp(deterministic_dual_lp(v, costs, budgets))
        assert dual.status == "optimal"
        # strong duality between the explicit dual and the primal
        assert dual.objective == pytest.approx(
            primal.objective, abs=1e-6 * (1 + abs(primal.objective))
        )


# ------------------------------------------------------ historical sets


def test_historical_cutting_plane_matches_direct_reduction():
    h = HistoricalUncertainty(
        factor_low=np.array([1.5, 2.0, 1.0]),
        factor_high=np.array([2.5, 3.0, 2.0]),
        component_mean=np.array([0.8, 0.5, 1.2]),
        component_std=np.array([0.3, 0.4, 0.2]),
        conservativeness=1.5,
        n_bidders=4,
    )
    costs = np.array([1.0, 1.5, 0.8])
    budgets = np.array([3.0, 4.0, 2.5, 5.0])
    res = solve_robust_nominal(h, costs, budgets)
    direct = solve_allocation(h.lower_bounds(), costs, budgets)
    assert res.objective == pytest.approx(direct.objective, abs=1e-6)
    np.testing.assert_allclose(res.nominal_allocation, direct.allocation, atol=1e-6)
    r = reservation_prices(res, costs)
    assert np.all(r >= res.worst_case_valuations - 1e-7)


# ---------------------------------------------------------- lp oracles


def test_allocation_matches_vertex_enumeration():
    rng = np.random.default_rng(11)
    for _ in range(30):
        n = int(rng.integers(1, 4))
        m = int(rng.integers(1, 4))
        if n * m > 9:
            continue
        v = rng.uniform(0.5, 5.0, (n, m))
        costs = rng.uniform(0.2, 2.5, m)
        budgets = rng.uniform(1.0, 5.0, n)
        lp_obj = solve_allocation(v, costs, budgets).objective
        bf_obj = brute_force_welfare(v, costs, budgets)
        assert lp_obj == pytest.approx(bf_obj, abs=1e-6)


def test_brute_force_with_grid_probe():
    v = np.array([[3.0, 2.0], [2.5, 4.0]])
    costs = np.array([1.0, 1.0])
    budgets = np.array([10.0, 10.0])
    assert brute_force_welfare(v, costs, budgets, grid_resolution=4) == pytest.approx(
        solve_allocation(v, costs, budgets).objective, abs=1e-9
    )


def test_budget_binding_fractional_beats_integral():
    # the budget constraint cuts the integral assignment off from the
    # second channel entirely, while the fractional optimum takes part
    # of it
    v = np.array([[4.0, 4.0]])
    costs = np.array([0.5, 0.5])
    budgets = np.array([6.0])
    frac = brute_force_welfare(v, costs, budgets)
    integral = best_integral_welfare(v, costs, budgets)
    lp = solve_allocation(v, costs, budgets).objective
    assert frac == pytest.approx(lp, abs=1e-9)
    assert frac > integral + 0.5


def test_brute_force_size_guard():
    with pytest.raises(ValueError):
        brute_force_welfare(np.ones((4, 3)), np.ones(3), np.ones(4))


def test_allocation_lp_exclude_pins_bidder_to_zero():
    v = np.array([[5.0, 4.0], [4.5, 3.5]])
    costs = np.array([1.0, 1.0])
    budgets = np.array([10.0, 10.0])
    sol = solve_lp(allocation_lp(v, costs, budgets, exclude=(0,)))
    x = sol.x.reshape(2, 2)
    np.testing.assert_allclose(x[0], 0.0, atol=1e-12)
    np.testing.assert_allclose(x[1], 1.0, atol=1e-9)
