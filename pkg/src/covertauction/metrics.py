"""Covertness and throughput metrics for a single JRC link.

A link involves four actors: the transmitting node, its receiver, a friendly
jammer, and a warden trying to detect the transmission. The warden observes

    Y1 = sigma_c^2 + C2w * h_wg^2             (node silent)
    Y2 = C1w * h_wm^2 + C2w * h_wg^2 + sigma_c^2   (node transmitting)

with C1w the node-to-warden and C2w the jammer-to-warden received power
scales, and thresholds the received energy at some eps. The detection error
probability dep(eps) = P(Y1 > eps) + P(Y2 < eps) is estimated empirically;
the warden picks the minimizing eps, and a channel's dep is the worst
(smallest) minimized dep across its sub-carriers, clamped to [0, 1].

Communication throughput (covert capacity) and radar mutual information are
ergodic Monte-Carlo means over the same alpha-mu fading families; neither
depends on the warden's position.

Fading entries accept either AlphaMuParams or a bare non-negative float,
which stands for a deterministic power gain of that value.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Union

import numpy as np
from numpy.random import Generator

from . import kernels
from .channel import AlphaMuParams, LinkGeometry, Position3D, alpha_mu_sample, path_gain

FadingSpec = Union[AlphaMuParams, float]


@dataclass(frozen=True)
class ThresholdSearch:
    """Controls the warden's threshold optimization.

    The scan covers (sigma_c^2, q-quantile of the received-power draws] with
    `grid_points` logarithmic points, then refines the best bracket by
    golden section to the relative tolerance.
    """

    grid_points: int = 64
    quantile: float = 0.999
    rel_tol: float = 1e-3

    def __post_init__(self) -> None:
        if not 2 <= self.grid_points <= 64:
            raise ValueError("grid_points must be in [2, 64]")
        if not 0.5 < self.quantile <= 1.0:
            raise ValueError("quantile must be in (0.5, 1]")
        if not 0.0 < self.rel_tol < 1.0:
            raise ValueError("rel_tol must be in (0, 1)")


@dataclass(frozen=True)
class DepEstimate:
    """Empirical detection error probability at one threshold."""

    p_fa: float
    p_md: float
    dep: float
    threshold: float
    stderr: float


def _as_fading_tuple(spec, count: int, label: str) -> tuple[FadingSpec, ...]:
    if isinstance(spec, (AlphaMuParams, float, int)):
        items = (spec,) * count
    else:
        items = tuple(spec)
    if len(items) != count:
        raise ValueError(f"{label} needs one entry per sub-carrier ({count})")
    out = []
    for item in items:
        if isinstance(item, AlphaMuParams):
            out.append(item)
        else:
            value = float(item)
            if not (math.isfinite(value) and value >= 0.0):
                raise ValueError(f"{label}: deterministic gain must be >= 0")
            out.append(value)
    return tuple(out)


@dataclass(frozen=True)
class CovertLinkScenario:
    """Everything needed to score one node-channel link.

    Positions are meters; powers are linear watts; `pri` is the pulse
    repetition interval in seconds; `subcarrier_spacing` is hertz. The four
    path-loss exponents cover the node-warden, jammer-warden, node-receiver
    and jammer-node links. Fading families are per sub-carrier tuples.
    """

    node_pos: Position3D
    jammer_pos: Position3D
    receiver_pos: Position3D
    warden_pos: Position3D
    exponent_node_warden: float
    exponent_jammer_warden: float
    exponent_node_receiver: float
    exponent_jammer_node: float
    fading_warden_signal: tuple[FadingSpec, ...]
    fading_warden_jam: tuple[FadingSpec, ...]
    fading_comm_signal: tuple[FadingSpec, ...]
    fading_comm_jam: tuple[FadingSpec, ...]
    fading_radar_signal: tuple[FadingSpec, ...]
    fading_radar_jam: tuple[FadingSpec, ...]
    noise_comm: float
    noise_radar: float
    subcarriers: int
    subcarrier_spacing: float
    tx_power: tuple[float, ...]
    jam_power: float
    pri: float

    def __post_init__(self) -> None:
        if self.subcarriers < 1:
            raise ValueError("need at least one sub-carrier")
        if not (math.isfinite(self.noise_comm) and self.noise_comm > 0):
            raise ValueError("communication noise power must be > 0")
        if not (math.isfinite(self.noise_radar) and self.noise_radar > 0):
            raise ValueError("radar noise power must be > 0")
        if not (math.isfinite(self.pri) and self.pri > 0):
            raise ValueError("pulse repetition interval must be > 0")
        if not (math.isfinite(self.subcarrier_spacing) and self.subcarrier_spacing > 0):
            raise ValueError("sub-carrier spacing must be > 0")
        if len(self.tx_power) != self.subcarriers:
            raise ValueError("tx_power needs one entry per sub-carrier")
        if any(p < 0 or not math.isfinite(p) for p in self.tx_power):
            raise ValueError("transmit powers must be finite and >= 0")
        if self.jam_power < 0 or not math.isfinite(self.jam_power):
            raise ValueError("jamming power must be finite and >= 0")
        for label in (
            "fading_warden_signal",
            "fading_warden_jam",
            "fading_comm_signal",
            "fading_comm_jam",
            "fading_radar_signal",
            "fading_radar_jam",
        ):
            if len(getattr(self, label)) != self.subcarriers:
                raise ValueError(f"{label} needs one entry per sub-carrier")

    @classmethod
    def uniform(
        cls,
        *,
        node_pos: Position3D,
        jammer_pos: Position3D,
        receiver_pos: Position3D,
        warden_pos: Position3D,
        exponent_node_warden: float,
        exponent_jammer_warden: float,
        exponent_node_receiver: float,
        exponent_jammer_node: float,
        fading_warden_signal,
        fading_warden_jam,
        fading_comm_signal,
        fading_comm_jam,
        fading_radar_signal,
        fading_radar_jam,
        noise_comm: float,
        noise_radar: float,
        subcarriers: int,
        subcarrier_spacing: float,
        tx_power,
        jam_power: float,
        pri: float,
    ) -> "CovertLinkScenario":
        """Build a scenario, broadcasting scalar fading specs and powers."""
        if subcarriers < 1:
            raise ValueError("need at least one sub-carrier")
        if isinstance(tx_power, (int, float)):
            tx = (float(tx_power),) * subcarriers
        else:
            tx = tuple(float(p) for p in tx_power)
        return cls(
            node_pos=node_pos,
            jammer_pos=jammer_pos,
            receiver_pos=receiver_pos,
            warden_pos=warden_pos,
            exponent_node_warden=exponent_node_warden,
            exponent_jammer_warden=exponent_jammer_warden,
            exponent_node_receiver=exponent_node_receiver,
            exponent_jammer_node=exponent_jammer_node,
            fading_warden_signal=_as_fading_tuple(
                fading_warden_signal, subcarriers, "fading_warden_signal"
            ),
            fading_warden_jam=_as_fading_tuple(
                fading_warden_jam, subcarriers, "fading_warden_jam"
            ),
            fading_comm_signal=_as_fading_tuple(
                fading_comm_signal, subcarriers, "fading_comm_signal"
            ),
            fading_comm_jam=_as_fading_tuple(
                fading_comm_jam, subcarriers, "fading_comm_jam"
            ),
            fading_radar_signal=_as_fading_tuple(
                fading_radar_signal, subcarriers, "fading_radar_signal"
            ),
            fading_radar_jam=_as_fading_tuple(
                fading_radar_jam, subcarriers, "fading_radar_jam"
            ),
            noise_comm=noise_comm,
            noise_radar=noise_radar,
            subcarriers=subcarriers,
            subcarrier_spacing=subcarrier_spacing,
            tx_power=tx,
            jam_power=jam_power,
            pri=pri,
        )

    # large-scale gains of the four links

    def node_warden_gain(self) -> float:
        return path_gain(
            LinkGeometry(self.node_pos, self.warden_pos, self.exponent_node_warden)
        )

    def jammer_warden_gain(self) -> float:
        return path_gain(
            LinkGeometry(self.jammer_pos, self.warden_pos, self.exponent_jammer_warden)
        )

    def node_receiver_gain(self) -> float:
        return path_gain(
            LinkGeometry(self.node_pos, self.receiver_pos, self.exponent_node_receiver)
        )

    def jammer_node_gain(self) -> float:
        return path_gain(
            LinkGeometry(self.jammer_pos, self.node_pos, self.exponent_jammer_node)
        )

    def with_warden(self, position: Position3D) -> "CovertLinkScenario":
        return replace(self, warden_pos=position)


def draw_power_gain(spec: FadingSpec, samples: int, rng: Generator) -> np.ndarray:
    """Sample power gains; a float spec is a deterministic gain."""
    if isinstance(spec, AlphaMuParams):
        return alpha_mu_sample(spec, rng, size=samples)
    return np.full(samples, float(spec))


def _check_samples(samples: int) -> None:
    if samples < 1:
        raise ValueError("need at least one Monte-Carlo sample")


def _check_subcarrier(scenario: CovertLinkScenario, subcarrier: int) -> None:
    if not 0 <= subcarrier < scenario.subcarriers:
        raise ValueError(
            f"sub-carrier {subcarrier} out of range [0, {scenario.subcarriers})"
        )


def _warden_scales(scenario: CovertLinkScenario, subcarrier: int) -> tuple[float, float]:
    c1 = scenario.node_warden_gain() * scenario.tx_power[subcarrier]
    c2 = scenario.jammer_warden_gain() * scenario.jam_power
    return c1, c2


def _warden_draws(
    scenario: CovertLinkScenario, subcarrier: int, samples: int, rng: Generator
) -> tuple[np.ndarray, np.ndarray]:
    # contract: signal fading first, then jamming fading
    hwm = draw_power_gain(scenario.fading_warden_signal[subcarrier], samples, rng)
    hwg = draw_power_gain(scenario.fading_warden_jam[subcarrier], samples, rng)
    return hwm, hwg


def estimate_fa_md(
    scenario: CovertLinkScenario,
    subcarrier: int,
    threshold: float,
    samples: int,
    rng: Generator,
) -> DepEstimate:
    """Empirical false-alarm and missed-detection rates at a fixed threshold."""
    _check_samples(samples)
    _check_subcarrier(scenario, subcarrier)
    if not math.isfinite(threshold):
        raise ValueError("threshold must be finite")
    c1, c2 = _warden_scales(scenario, subcarrier)
    hwm, hwg = _warden_draws(scenario, subcarrier, samples, rng)
    y1 = scenario.noise_comm + c2 * hwg
    y2 = y1 + c1 * hwm
    p_fa = float(np.count_nonzero(y1 > threshold)) / samples
    p_md = float(np.count_nonzero(y2 < threshold)) / samples
    stderr = math.sqrt(
        p_fa * (1.0 - p_fa) / samples + p_md * (1.0 - p_md) / samples
    )
    return DepEstimate(p_fa, p_md, p_fa + p_md, threshold, stderr)


def warden_optimal_threshold(
    scenario: CovertLinkScenario,
    subcarrier: int,
    search: ThresholdSearch,
    samples: int,
    rng: Generator,
) -> tuple[float, DepEstimate]:
    """The warden's best threshold and the dep it achieves on one sub-carrier."""
    _check_samples(samples)
    _check_subcarrier(scenario, subcarrier)
    c1, c2 = _warden_scales(scenario, subcarrier)
    hwm, hwg = _warden_draws(scenario, subcarrier, samples, rng)
    dep, eps, p_fa, p_md = kernels.optimal_dep(
        hwm,
        hwg,
        c1,
        c2,
        scenario.noise_comm,
        search.grid_points,
        search.quantile,
        search.rel_tol,
    )
    stderr = math.sqrt(
        p_fa * (1.0 - p_fa) / samples + p_md * (1.0 - p_md) / samples
    )
    return eps, DepEstimate(p_fa, p_md, dep, eps, stderr)


def channel_dep(
    scenario: CovertLinkScenario,
    samples: int,
    rng: Generator,
    search: ThresholdSearch | None = None,
) -> float:
    """Channel-level dep: the minimum warden-optimized dep across
    sub-carriers, clamped to [0, 1].

    One child RNG stream is derived per sub-carrier (Generator.spawn), so
    per-sub-carrier results are reproducible independently of evaluation
    order.
    """
    _check_samples(samples)
    search = search or ThresholdSearch()
    children = rng.spawn(scenario.subcarriers)
    worst = math.inf
    for m in range(scenario.subcarriers):
        _, est = warden_optimal_threshold(scenario, m, search, samples, children[m])
        worst = min(worst, est.dep)
    return min(1.0, max(0.0, worst))


def covert_cc(scenario: CovertLinkScenario, samples: int, rng: Generator) -> float:
    """Ergodic covert communication capacity in bits per second.

    Sum over sub-carriers of spacing * E[log2(1 + S_m h / (noise + J g))]
    with S_m the node-to-receiver and J the jammer-to-node received power
    scales; fading drawn independently per sub-carrier.
    """
    _check_samples(samples)
    gain_signal = scenario.node_receiver_gain()
    gain_jam = scenario.jammer_node_gain()
    total = 0.0
    for m in range(scenario.subcarriers):
        hm = draw_power_gain(scenario.fading_comm_signal[m], samples, rng)
        hg = draw_power_gain(scenario.fading_comm_jam[m], samples, rng)
        signal = gain_signal * scenario.tx_power[m] * hm
        interference = scenario.noise_comm + gain_jam * scenario.jam_power * hg
        total += scenario.subcarrier_spacing * float(
            np.mean(np.log2(1.0 + signal / interference))
        )
    return total


def covert_mi(scenario: CovertLinkScenario, samples: int, rng: Generator) -> float:
    """Ergodic radar mutual information in bits over one coherent interval.

    (spacing * pri / 2) * sum over sub-carriers of
    E[log2(1 + pri * S_m G / (noise + J W))] with per-sub-carrier energy
    spectral densities G, W drawn from their alpha-mu families.
    """
    _check_samples(samples)
    gain_signal = scenario.node_receiver_gain()
    gain_jam = scenario.jammer_node_gain()
    total = 0.0
    for m in range(scenario.subcarriers):
        g_esd = draw_power_gain(scenario.fading_radar_signal[m], samples, rng)
        j_esd = draw_power_gain(scenario.fading_radar_jam[m], samples, rng)
        signal = scenario.pri * gain_signal * scenario.tx_power[m] * g_esd
        interference = scenario.noise_radar + gain_jam * scenario.jam_power * j_esd
        total += float(np.mean(np.log2(1.0 + signal / interference)))
    return (scenario.subcarrier_spacing * scenario.pri / 2.0) * total


def valuation(
    indicator: int,
    eta_mi: float,
    eta_cc: float,
    mi: float,
    cc: float,
    dep: float,
) -> float:
    """Monetary value of a channel to a node.

    indicator gates availability (0 or 1); eta_mi and eta_cc weight the radar
    and communication metrics; dep multiplies the weighted sum, so a channel
    that is easy to detect is worth little.
    """
    if indicator not in (0, 1):
        raise ValueError("indicator must be 0 or 1")
    if eta_mi < 0 or eta_cc < 0:
        raise ValueError("metric weights must be >= 0")
    if mi < 0 or cc < 0:
        raise ValueError("metrics must be >= 0")
    if not 0.0 <= dep <= 1.0:
        raise ValueError("dep must lie in [0, 1]")
    return indicator * (eta_mi * mi + eta_cc * cc) * dep
