"""Scenario generation, validation, and persistence."""

import numpy as np
import pytest

from covertauction.channel import Position3D
from covertauction.metrics import CovertLinkScenario
from covertauction.scenario import (
    SYSTEM_DEFAULTS,
    GeneratorConfig,
    MarketScenario,
    draw_costs,
    generate_scenario,
    ir_study_scenario,
    jamming_study_scenario,
    load_scenario,
    save_scenario,
    scenario_hash,
    scenario_to_json,
)

_SMALL = GeneratorConfig(
    n_nodes=3,
    n_channels=2,
    subcarriers=1,
    calibration_samples=16,
)


def _generated(seed=42, config=_SMALL):
    return generate_scenario(config, np.random.default_rng(seed))


def test_generation_is_deterministic_in_the_seed():
    a = _generated(7)
    b = _generated(7)
    assert scenario_hash(a) == scenario_hash(b)
    assert np.array_equal(a.node_positions, b.node_positions)
    assert np.array_equal(a.eta_cc, b.eta_cc)
    c = _generated(8)
    assert scenario_hash(c) != scenario_hash(a)


def test_generated_fields_respect_config_bounds():
    config = _SMALL
    sc = _generated(3)
    assert sc.n_nodes == config.n_nodes
    assert sc.n_channels == config.n_channels
    for arr in (sc.node_positions, sc.receiver_positions, sc.jammer_positions):
        assert np.all(arr[:, :2] >= 0.0) and np.all(arr[:, :2] <= config.area_m)
    assert np.all(sc.budgets >= config.budget_low)
    assert np.all(sc.budgets <= config.budget_high)
    assert np.all(sc.jam_power >= config.jam_power_low_w)
    assert np.all(sc.jam_power <= config.jam_power_high_w)
    assert np.all(sc.costs >= 0.0)
    assert np.all(np.isfinite(sc.eta_mi)) and np.all(sc.eta_mi > 0.0)
    assert np.all(np.isfinite(sc.eta_cc)) and np.all(sc.eta_cc > 0.0)


def test_generated_positions_keep_min_separation():
    config = GeneratorConfig(
        n_nodes=4, n_channels=3, subcarriers=1, calibration_samples=8,
        area_m=60.0, min_separation_m=2.0,
    )
    sc = generate_scenario(config, np.random.default_rng(11))
    pts = np.vstack(
        [sc.node_positions, sc.receiver_positions, sc.jammer_positions,
         sc.warden_position[None, :]]
    )
    diffs = pts[:, None, :] - pts[None, :, :]
    dist = np.linalg.norm(diffs, axis=-1)
    np.fill_diagonal(dist, np.inf)
    assert dist.min() >= config.min_separation_m


def test_cost_sampler_nonnegative_and_centred():
    rng = np.random.default_rng(5)
    costs = draw_costs(10_000, rng)
    assert np.all(costs >= 0.0)
    # Truncation at zero pulls the mean slightly above the nominal 2.
    assert 1.95 < costs.mean() < 2.2
    assert 0.8 < costs.std() < 1.1


def test_cost_decomposition_recovers_drawn_cost():
    # Belt check over many generated scenarios: the decomposed channel
    # cost is nonnegative and both parts contribute.
    for seed in range(100):
        rng = np.random.default_rng(seed)
        m = 4
        costs = draw_costs(m, rng)
        jam_power = rng.uniform(0.002, 0.01, m)
        share = rng.uniform(0.2, 0.8, m)
        kappa_jam = share * costs / jam_power
        kappa_fixed = (1.0 - share) * costs
        assert np.all(kappa_jam >= 0.0) and np.all(kappa_fixed >= 0.0)
        assert np.allclose(kappa_jam * jam_power + kappa_fixed, costs)


def test_link_scenario_maps_geometry_and_power():
    sc = _generated(21)
    link = sc.link_scenario(1, 1)
    assert isinstance(link, CovertLinkScenario)
    assert np.allclose(link.node_pos.as_array(), sc.node_positions[1])
    assert np.allclose(link.jammer_pos.as_array(), sc.jammer_positions[1])
    assert np.allclose(link.receiver_pos.as_array(), sc.receiver_positions[1])
    assert np.allclose(link.warden_pos.as_array(), sc.warden_position)
    assert link.jam_power == pytest.approx(sc.jam_power[1])
    assert link.subcarriers == sc.subcarriers
    moved = sc.link_scenario(1, 1, warden_pos=Position3D(0.0, 0.0, 5.0))
    assert np.allclose(moved.warden_pos.as_array(), [0.0, 0.0, 5.0])
    with pytest.raises(IndexError):
        sc.link_scenario(sc.n_nodes, 0)


def test_system_defaults_carry_the_radio_constants():
    sc = _generated(2)
    assert sc.system["carrier_frequency_hz"] == pytest.approx(5.9e9)
    assert sc.system["bandwidth_hz"] == pytest.approx(50.0e6)
    assert sc.system["max_tx_power_w"] == pytest.approx(0.01)
    assert sc.system["max_jam_power_w"] == pytest.approx(0.01)
    assert sc.system["subcarriers"] == pytest.approx(10.0)
    assert sc.system["time_bandwidth_product"] == pytest.approx(100.0)
    assert sc.system["radar_duty_factor"] == pytest.approx(0.01)
    assert set(SYSTEM_DEFAULTS) <= set(sc.system)


def test_round_trip_is_bit_exact(tmp_path):
    sc = _generated(13).with_bids(np.full((3, 2), 1.25))
    path = tmp_path / "scenario.json"
    save_scenario(sc, path)
    back = load_scenario(path)
    assert scenario_hash(back) == scenario_hash(sc)
    assert np.array_equal(back.node_positions, sc.node_positions)
    assert np.array_equal(back.eta_mi, sc.eta_mi)
    assert np.array_equal(back.bids, sc.bids)
    for key in sc.fading:
        assert np.array_equal(back.fading[key], sc.fading[key])
    assert back.warden_box_halfwidth == sc.warden_box_halfwidth
    assert back.seed == sc.seed


def test_load_names_the_missing_field(tmp_path):
    import json

    sc = _generated(4)
    doc = json.loads(scenario_to_json(sc))
    del doc["budgets"]
    path = tmp_path / "broken.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(ValueError, match="missing field 'budgets'"):
        load_scenario(path)


def test_load_rejects_malformed_json(tmp_path):
    path = tmp_path / "garbage.json"
    path.write_text("{not json")
    with pytest.raises(ValueError, match="malformed JSON"):
        load_scenario(path)


def test_shape_mismatch_names_the_field():
    sc = _generated(6)
    kwargs = {f: getattr(sc, f) for f in (
        "seed", "node_positions", "receiver_positions", "jammer_positions",
        "warden_position", "indicator", "eta_mi", "eta_cc", "kappa_jam",
        "kappa_fixed", "jam_power", "fading", "noise_comm", "noise_radar",
        "subcarriers", "subcarrier_spacing", "tx_power", "pri",
        "exponent_node_warden", "exponent_jammer_warden",
        "exponent_node_receiver", "exponent_jammer_node",
    )}
    with pytest.raises(ValueError, match="budgets"):
        MarketScenario(budgets=np.ones(sc.n_nodes + 1), **kwargs)
    with pytest.raises(ValueError, match="indicator"):
        bad = dict(kwargs)
        bad["indicator"] = np.full((sc.n_nodes, sc.n_channels), 0.5)
        MarketScenario(budgets=sc.budgets, **bad)


def test_scenario_arrays_are_read_only():
    sc = _generated(9)
    with pytest.raises(ValueError):
        sc.budgets[0] = 99.0
    with pytest.raises(ValueError):
        sc.fading["comm_signal"][0, 0, 0] = 3.0


def test_jamming_study_geometry():
    link = jamming_study_scenario()
    d2 = lambda a, b: float(np.sum((a.as_array() - b.as_array()) ** 2))
    assert d2(link.node_pos, link.warden_pos) == pytest.approx(52.0)
    assert d2(link.jammer_pos, link.warden_pos) == pytest.approx(74.0)
    assert d2(link.receiver_pos, link.node_pos) == pytest.approx(381.0)
    assert d2(link.jammer_pos, link.node_pos) == pytest.approx(178.0)
    assert link.subcarriers == 10
    assert link.subcarrier_spacing == pytest.approx(5.0e6)
    assert link.jam_power == 0.0


def test_ir_study_puts_nodes_between_warden_and_jammers():
    sc = ir_study_scenario(rng=np.random.default_rng(3))
    toward = sc.jammer_positions.mean(axis=0) - sc.warden_position
    toward /= np.linalg.norm(toward)
    displaced = sc.warden_position + 1.5 * toward
    for node in sc.node_positions:
        before = np.linalg.norm(sc.warden_position - node)
        after = np.linalg.norm(displaced - node)
        assert after < before
    assert sc.warden_box_halfwidth == (2.0, 2.0, 0.0)
