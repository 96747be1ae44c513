import numpy as np
import pytest

from covertauction.channel import Position3D
from covertauction.lp import LinearProgram, solve_lp
from covertauction.metrics import ThresholdSearch
from covertauction.uncertainty import (
    BoxSearchConfig,
    HistoricalUncertainty,
    IntervalUncertainty,
    WardenBox,
    build_historical_from_history,
    build_interval_from_warden_box,
    contains,
    dep_at_position,
    sample_realized_bids,
    worst_case_profile,
    _dep_at_positions,
)

from conftest import make_link_scenario


# ---------------------------------------------------------------- boxes


def test_warden_box_basics():
    box = WardenBox(Position3D(5.0, 0.0, 1.0), (2.0, 1.0, 0.0))
    assert box.contains(Position3D(5.0, 0.0, 1.0))
    assert box.contains(Position3D(7.0, 1.0, 1.0))
    assert not box.contains(Position3D(7.1, 0.0, 1.0))
    np.testing.assert_allclose(box.lower, [3.0, -1.0, 1.0])
    np.testing.assert_allclose(box.upper, [7.0, 1.0, 1.0])


def test_warden_box_grid_contains_center_for_odd_counts():
    box = WardenBox(Position3D(1.0, 2.0, 3.0), (0.5, 0.5, 0.5))
    g = box.grid(5)
    assert g.shape == (125, 3)
    assert any(np.allclose(row, [1.0, 2.0, 3.0]) for row in g)
    # degenerate axis collapses the lattice
    flat = WardenBox(Position3D(1.0, 2.0, 3.0), (0.5, 0.0, 0.5)).grid(3)
    assert flat.shape == (9, 3)
    assert np.all(flat[:, 1] == 2.0)


def test_warden_box_rejects_bad_widths():
    with pytest.raises(ValueError):
        WardenBox(Position3D(0, 0, 0), (1.0, -0.1, 0.0))
    with pytest.raises(ValueError):
        WardenBox(Position3D(0, 0, 0), (1.0, np.inf, 0.0))


# ------------------------------------------------------- interval sets


def test_interval_bounds_and_fingerprint():
    c = np.array([[2.0, 3.0], [1.0, 0.5]])
    r = np.array([[0.5, 1.0], [1.0, 0.5]])
    u = IntervalUncertainty(center=c, radius=r)
    np.testing.assert_allclose(u.lower_bounds(), [[1.5, 2.0], [0.0, 0.0]])
    np.testing.assert_allclose(u.upper_bounds(), [[2.5, 4.0], [2.0, 1.0]])
    assert u.n_bidders == 2 and u.n_channels == 2
    assert u.fingerprint() == IntervalUncertainty(center=c, radius=r).fingerprint()
    assert (
        u.fingerprint()
        != IntervalUncertainty(center=c, radius=r * 0.5).fingerprint()
    )


def test_interval_validation():
    with pytest.raises(ValueError):
        IntervalUncertainty(center=np.ones((2, 2)), radius=-np.ones((2, 2)))
    with pytest.raises(ValueError):
        # interval dips well below zero
        IntervalUncertainty(center=np.full((1, 1), 1.0), radius=np.full((1, 1), 2.0))
    with pytest.raises(ValueError):
        IntervalUncertainty(center=np.ones((2, 2)), radius=np.ones((2, 3)))


def test_interval_contains_and_sampling():
    rng = np.random.default_rng(11)
    u = IntervalUncertainty(
        center=rng.uniform(2.0, 4.0, (3, 4)), radius=rng.uniform(0.0, 1.0, (3, 4))
    )
    for _ in range(50):
        bids = sample_realized_bids(u, rng)
        assert contains(u, bids)
        assert np.all(bids >= u.lower_bounds() - 1e-12)
        assert np.all(bids <= u.upper_bounds() + 1e-12)
    outside = u.center.copy()
    outside[0, 0] = u.center[0, 0] + u.radius[0, 0] + 0.1
    assert not contains(u, outside)


# ----------------------------------------------------- historical sets


def _hist_set():
    return HistoricalUncertainty(
        factor_low=np.array([1.0, 2.0]),
        factor_high=np.array([2.0, 2.5]),
        component_mean=np.array([0.5, -0.3]),
        component_std=np.array([0.4, 0.8]),
        conservativeness=2.0,
        n_bidders=4,
    )


def test_historical_bounds_by_hand():
    h = _hist_set()
    hw = 2.0 * np.array([0.4, 0.8]) / 2.0  # theta * std / sqrt(4)
    np.testing.assert_allclose(h.component_halfwidth(), hw)
    lo = np.maximum(0.0, np.array([1.0, 2.0]) + np.array([0.5, -0.3]) - hw)
    up = np.array([2.0, 2.5]) + np.array([0.5, -0.3]) + hw
    np.testing.assert_allclose(h.lower_bounds(), np.tile(lo, (4, 1)))
    np.testing.assert_allclose(h.upper_bounds(), np.tile(up, (4, 1)))


def test_historical_lower_bound_clamps_at_zero():
    h = HistoricalUncertainty(
        factor_low=np.array([0.1]),
        factor_high=np.array([0.2]),
        component_mean=np.array([0.0]),
        component_std=np.array([1.0]),
        conservativeness=3.0,
        n_bidders=1,
    )
    assert h.lower_bounds()[0, 0] == 0.0


def test_historical_contains_and_sampling():
    h = _hist_set()
    rng = np.random.default_rng(12)
    for _ in range(100):
        bids = sample_realized_bids(h, rng)
        assert bids.shape == (4, 2)
        assert contains(h, bids)
    # aggregate far above anything the factor range can explain
    too_high = np.full((4, 2), 50.0)
    assert not contains(h, too_high)


def test_historical_validation():
    with pytest.raises(ValueError):
        HistoricalUncertainty(
            factor_low=np.array([2.0]),
            factor_high=np.array([1.0]),
            component_mean=np.array([0.0]),
            component_std=np.array([1.0]),
            conservativeness=1.0,
            n_bidders=2,
        )
    with pytest.raises(ValueError):
        HistoricalUncertainty(
            factor_low=np.array([1.0]),
            factor_high=np.array([2.0]),
            component_mean=np.array([0.0]),
            component_std=np.array([1.0]),
            conservativeness=-1.0,
            n_bidders=2,
        )


# ------------------------------------------------- worst-case profiles


def test_worst_case_profile_interval():
    u = IntervalUncertainty(
        center=np.array([[2.0, 3.0]]), radius=np.array([[0.5, 1.0]])
    )
    x = np.array([0.3, 0.7])
    np.testing.assert_allclose(
        worst_case_profile(u, x, 0, sense="lower"), [1.5, 2.0]
    )
    np.testing.assert_allclose(
        worst_case_profile(u, x, 0, sense="upper"), [2.5, 4.0]
    )
    with pytest.raises(ValueError):
        worst_case_profile(u, np.array([-0.1, 0.2]), 0)
    with pytest.raises(IndexError):
        worst_case_profile(u, x, 3)


def test_worst_case_profile_historical_matches_lp_oracle():
    # per channel, the extreme of f + y over the two framed intervals,
    # solved as an explicit 2-variable linear program
    h = _hist_set()
    hw = h.component_halfwidth()
    x = np.array([0.4, 0.9])
    for sense, maximize in (("lower", False), ("upper", True)):
        got = worst_case_profile(h, x, 1, sense=sense)
        for j in range(2):
            lp = LinearProgram(
                objective=np.array([1.0, 1.0]),
                constraints=np.zeros((0, 2)),
                senses=(),
                rhs=np.zeros(0),
                lower=np.array([h.factor_low[j], h.component_mean[j] - hw[j]]),
                upper=np.array([h.factor_high[j], h.component_mean[j] + hw[j]]),
                maximize=maximize,
            )
            sol = solve_lp(lp)
            want = sol.objective if maximize else max(0.0, sol.objective)
            assert got[j] == pytest.approx(want, abs=1e-9)


# ----------------------------------------------- interval construction

_FAST = BoxSearchConfig(
    grid_points_per_axis=3,
    particles=6,
    iterations=8,
    threshold=ThresholdSearch(grid_points=24),
)


def _market(n, m, subcarriers=1):
    rows = []
    for i in range(n):
        row = []
        for j in range(m):
            row.append(
                make_link_scenario(
                    node_pos=Position3D(0.0 + i, 0.0, 0.0),
                    jammer_pos=Position3D(0.0 + i, 8.0, 0.0),
                    warden_pos=Position3D(5.0, 0.0, 1.0),
                    jam_power=5e-3 * (1 + j),
                    subcarriers=subcarriers,
                )
            )
        rows.append(row)
    return rows


def test_degenerate_box_gives_zero_radius():
    scenarios = _market(2, 2)
    box = WardenBox(Position3D(5.0, 0.0, 1.0), (0.0, 0.0, 0.0))
    rng = np.random.default_rng(5)
    interval, _ = build_interval_from_warden_box(
        scenarios, box, samples=300, rng=rng, config=_FAST
    )
    np.testing.assert_array_equal(interval.radius, np.zeros((2, 2)))
    np.testing.assert_array_equal(interval.dep_low, interval.dep_high)
    np.testing.assert_array_equal(interval.dep_low, interval.dep_nominal)
    np.testing.assert_array_equal(interval.center, interval.gain * interval.dep_nominal)


def test_builder_endpoints_dominate_dense_grid_oracle():
    scenarios = _market(1, 1)
    box = WardenBox(Position3D(5.0, 0.0, 1.0), (1.5, 1.0, 0.0))
    rng = np.random.default_rng(6)
    interval, state = build_interval_from_warden_box(
        scenarios, box, samples=400, rng=rng, config=_FAST
    )
    # independent dense lattice, evaluated under the builder's own
    # common random numbers
    dense = box.grid(11)
    dep = _dep_at_positions(
        scenarios[0][0], state.fading[(0, 0)], dense, _FAST.threshold
    )
    assert interval.dep_low[0, 0] <= dep.min() + 1e-12
    assert interval.dep_high[0, 0] >= dep.max() - 1e-12
    assert (
        interval.dep_low[0, 0]
        <= interval.dep_nominal[0, 0]
        <= interval.dep_high[0, 0]
    )
    # bid interval = gain * dep interval
    np.testing.assert_allclose(
        interval.lower_bounds(), interval.gain * interval.dep_low, atol=1e-12
    )
    np.testing.assert_allclose(
        interval.upper_bounds(), interval.gain * interval.dep_high, rtol=1e-12
    )


def test_dep_at_position_matches_stored_extremes():
    scenarios = _market(1, 1)
    box = WardenBox(Position3D(5.0, 0.0, 1.0), (1.5, 1.0, 0.0))
    interval, state = build_interval_from_warden_box(
        scenarios, box, samples=300, rng=np.random.default_rng(14), config=_FAST
    )
    lo = dep_at_position(scenarios[0][0], state, 0, 0, state.pos_low[(0, 0)], _FAST)
    hi = dep_at_position(scenarios[0][0], state, 0, 0, state.pos_high[(0, 0)], _FAST)
    assert lo == pytest.approx(state.dep_low[(0, 0)], abs=1e-12)
    assert hi == pytest.approx(state.dep_high[(0, 0)], abs=1e-12)
    with pytest.raises(KeyError):
        dep_at_position(scenarios[0][0], state, 3, 3, state.pos_low[(0, 0)], _FAST)


def test_nested_boxes_monotone_endpoints():
    scenarios = _market(2, 1)
    rng = np.random.default_rng(7)
    state = None
    prev = None
    for factor in (0.25, 0.6, 1.0):
        box = WardenBox(Position3D(5.0, 0.0, 1.0), (1.6 * factor, 1.0 * factor, 0.0))
        interval, state = build_interval_from_warden_box(
            scenarios, box, samples=300, rng=rng, config=_FAST, state=state
        )
        if prev is not None:
            assert np.all(interval.dep_low <= prev.dep_low + 1e-15)
            assert np.all(interval.dep_high >= prev.dep_high - 1e-15)
            assert np.all(interval.radius >= prev.radius - 1e-15)
            # rates reused, so the gain is bitwise stable across boxes
            np.testing.assert_array_equal(interval.gain, prev.gain)
        prev = interval


def test_indicator_zeroes_pairs():
    scenarios = _market(2, 2)
    box = WardenBox(Position3D(5.0, 0.0, 1.0), (0.5, 0.5, 0.0))
    ind = np.array([[1.0, 0.0], [1.0, 1.0]])
    interval, _ = build_interval_from_warden_box(
        scenarios,
        box,
        samples=200,
        rng=np.random.default_rng(8),
        indicator=ind,
        config=_FAST,
    )
    assert interval.center[0, 1] == 0.0
    assert interval.radius[0, 1] == 0.0
    assert np.all(interval.center[ind == 1.0] > 0.0)


def test_builder_warns_when_center_outside_box():
    scenarios = _market(1, 1)
    box = WardenBox(Position3D(50.0, 0.0, 0.0), (1.0, 1.0, 1.0))
    with pytest.warns(UserWarning, match="outside the search box"):
        uset, _ = build_interval_from_warden_box(
            scenarios, box, samples=100, rng=np.random.default_rng(9), config=_FAST
        )
    # Still a usable interval: endpoints bracket each other and stay valid.
    assert np.all(uset.radius >= 0.0)
    assert np.all(uset.center - uset.radius >= -1e-12)


# ------------------------------------------------- historical fitting


def test_history_fit_recovers_model():
    rng = np.random.default_rng(21)
    rounds, n, m = 300, 6, 3
    factors = rng.uniform(2.0, 3.0, (rounds, m))
    comp = rng.normal(0.0, 0.25, (rounds, n, m)) + 1.0
    history = factors[:, None, :] + comp
    fitted = build_historical_from_history(history, conservativeness=1.5)
    assert fitted.n_bidders == n
    # the median fit absorbs the component mean into the factor, so
    # compare the reconstructed per-channel bid center instead
    center = fitted.factor_low + fitted.component_mean
    assert np.all(center <= np.array([3.0] * m) + 1.0 + 0.3)
    np.testing.assert_allclose(fitted.component_std, 0.25, atol=0.06)
    # every historical round must be consistent with the fitted set at
    # a modest conservativeness level
    ok = sum(contains(fitted, history[t]) for t in range(rounds))
    assert ok >= 0.8 * rounds


def test_history_fit_tiny_deterministic():
    history = np.array(
        [
            [[1.0], [2.0], [3.0]],
            [[2.0], [3.0], [4.0]],
        ]
    )
    fitted = build_historical_from_history(history)
    np.testing.assert_allclose(fitted.factor_low, [2.0])
    np.testing.assert_allclose(fitted.factor_high, [3.0])
    np.testing.assert_allclose(fitted.component_mean, [0.0], atol=1e-12)
    with pytest.raises(ValueError):
        build_historical_from_history(history[:1])
