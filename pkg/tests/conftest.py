import dataclasses

import numpy as np
import pytest

from covertauction.channel import AlphaMuParams, Position3D
from covertauction.metrics import CovertLinkScenario, ThresholdSearch

RAYLEIGH = AlphaMuParams(alpha=2.0, mu=1.0, mean_power=1.0)


def make_link_scenario(**overrides) -> CovertLinkScenario:
    """A small single-link scenario with sane magnitudes for fast tests."""
    base = dict(
        node_pos=Position3D(0.0, 0.0, 0.0),
        jammer_pos=Position3D(0.0, 8.0, 0.0),
        receiver_pos=Position3D(10.0, 0.0, 0.0),
        warden_pos=Position3D(5.0, 0.0, 0.0),
        exponent_node_warden=2.0,
        exponent_jammer_warden=2.0,
        exponent_node_receiver=2.0,
        exponent_jammer_node=2.0,
        fading_warden_signal=RAYLEIGH,
        fading_warden_jam=RAYLEIGH,
        fading_comm_signal=RAYLEIGH,
        fading_comm_jam=RAYLEIGH,
        fading_radar_signal=RAYLEIGH,
        fading_radar_jam=RAYLEIGH,
        noise_comm=1e-6,
        noise_radar=1e-6,
        subcarriers=1,
        subcarrier_spacing=5e6,
        tx_power=1e-3,
        jam_power=1e-2,
        pri=2e-4,
    )
    base.update(overrides)
    return CovertLinkScenario.uniform(**base)


@pytest.fixture
def link_scenario():
    return make_link_scenario()


@pytest.fixture
def rng():
    return np.random.default_rng(20260819)


def passes(criterion: str, detail: str = "") -> None:
    suffix = f" ({detail})" if detail else ""
    print(f"[PASS] {criterion}{suffix}")
