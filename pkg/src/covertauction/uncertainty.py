"""Bid uncertainty sets and their construction from channel physics.

Two set families feed the robust auction:

* ``IntervalUncertainty``: a per-(bidder, channel) box.  The physically
  grounded construction sweeps the warden position over a rectangular
  region of ignorance, takes the extreme detection probabilities it
  finds, and scales them by the bidder's covert-rate gain.  The box
  endpoints are what the robust allocation program consumes.

* ``HistoricalUncertainty``: built from past bid records.  Bids on a
  channel are modelled as a shared per-channel factor inside known
  limits plus an idiosyncratic component whose mean and dispersion are
  estimated from history; the per-bidder component band shrinks like
  1/sqrt(n_bidders).

Worst-case profiles over either family are coordinatewise, and a test
pins that against a tiny per-channel linear program.
"""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass

import numpy as np

from .channel import Position3D
from .metrics import ThresholdSearch, covert_cc, covert_mi
from . import kernels
from .pso import pso_minimize


@dataclass(frozen=True)
class WardenBox:
    """Axis-aligned region the warden is believed to occupy."""

    center: Position3D
    half_width: tuple

    def __post_init__(self):
        hw = tuple(float(h) for h in self.half_width)
        if len(hw) != 3:
            raise ValueError("half_width needs three entries")
        if any(not np.isfinite(h) or h < 0.0 for h in hw):
            raise ValueError("half widths must be finite and nonnegative")
        object.__setattr__(self, "half_width", hw)

    @property
    def lower(self) -> np.ndarray:
        return self.center.as_array() - np.asarray(self.half_width)

    @property
    def upper(self) -> np.ndarray:
        return self.center.as_array() + np.asarray(self.half_width)

    def contains(self, position: Position3D, tol: float = 1e-9) -> bool:
        p = position.as_array()
        return bool(np.all(p >= self.lower - tol) and np.all(p <= self.upper + tol))

    def grid(self, points_per_axis: int) -> np.ndarray:
        """Uniform lattice over the box, (points**3, 3).

        An odd count puts the center itself on the lattice, which the
        interval builder relies on: the nominal position is always one
        of the evaluated candidates.
        """
        if points_per_axis < 1:
            raise ValueError("points_per_axis must be positive")
        axes = [
            np.linspace(lo, hi, points_per_axis) if hi > lo else np.array([lo])
            for lo, hi in zip(self.lower, self.upper)
        ]
        xx, yy, zz = np.meshgrid(*axes, indexing="ij")
        return np.column_stack([xx.ravel(), yy.ravel(), zz.ravel()])

    def scaled(self, factor: float) -> "WardenBox":
        return WardenBox(self.center, tuple(factor * h for h in self.half_width))


def _as_matrix(name, arr, shape=None):
    a = np.asarray(arr, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"{name} must be a 2-d array")
    if shape is not None and a.shape != shape:
        raise ValueError(f"{name} has shape {a.shape}, expected {shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} must be finite")
    return a


@dataclass(frozen=True)
class IntervalUncertainty:
    """Box-shaped bid uncertainty: bids live in [center - radius, center + radius].

    The optional fields record how a physically constructed instance
    came about (detection-probability endpoints, covert-rate gain, and
    the warden positions achieving the extremes); synthetic instances
    leave them as None.
    """

    center: np.ndarray
    radius: np.ndarray
    dep_low: np.ndarray | None = None
    dep_high: np.ndarray | None = None
    dep_nominal: np.ndarray | None = None
    gain: np.ndarray | None = None
    pos_low: np.ndarray | None = None
    pos_high: np.ndarray | None = None

    def __post_init__(self):
        center = _as_matrix("center", self.center)
        radius = _as_matrix("radius", self.radius, center.shape)
        if np.any(radius < 0.0):
            raise ValueError("radius must be nonnegative")
        if np.any(center - radius < -1e-9 * np.maximum(1.0, np.abs(center))):
            raise ValueError("bid intervals must stay nonnegative")
        center.setflags(write=False)
        radius.setflags(write=False)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", radius)

    @property
    def n_bidders(self) -> int:
        return self.center.shape[0]

    @property
    def n_channels(self) -> int:
        return self.center.shape[1]

    def lower_bounds(self) -> np.ndarray:
        return np.clip(self.center - self.radius, 0.0, None)

    def upper_bounds(self) -> np.ndarray:
        return self.center + self.radius

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(b"interval")
        h.update(np.asarray(self.center.shape).tobytes())
        h.update(self.center.tobytes())
        h.update(self.radius.tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class HistoricalUncertainty:
    """Bid uncertainty estimated from past auction rounds.

    Per channel j a shared factor f_j is only known to sit inside
    [factor_low_j, factor_high_j]; each bidder adds an idiosyncratic
    component whose per-bidder band is the estimated mean plus/minus
    ``conservativeness * std / sqrt(n_bidders)``.
    """

    factor_low: np.ndarray
    factor_high: np.ndarray
    component_mean: np.ndarray
    component_std: np.ndarray
    conservativeness: float
    n_bidders: int

    def __post_init__(self):
        fl = np.asarray(self.factor_low, dtype=float).ravel()
        fh = np.asarray(self.factor_high, dtype=float).ravel()
        mu = np.asarray(self.component_mean, dtype=float).ravel()
        sd = np.asarray(self.component_std, dtype=float).ravel()
        m = fl.shape[0]
        if any(v.shape[0] != m for v in (fh, mu, sd)) or m == 0:
            raise ValueError("per-channel arrays must share a nonzero length")
        if not all(np.all(np.isfinite(v)) for v in (fl, fh, mu, sd)):
            raise ValueError("historical parameters must be finite")
        if np.any(fh < fl):
            raise ValueError("factor_high must dominate factor_low")
        if np.any(sd < 0.0):
            raise ValueError("component dispersion must be nonnegative")
        if self.conservativeness < 0.0:
            raise ValueError("conservativeness must be nonnegative")
        if self.n_bidders < 1:
            raise ValueError("need at least one bidder")
        for name, v in (
            ("factor_low", fl),
            ("factor_high", fh),
            ("component_mean", mu),
            ("component_std", sd),
        ):
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @property
    def n_channels(self) -> int:
        return self.factor_low.shape[0]

    def component_halfwidth(self) -> np.ndarray:
        return self.conservativeness * self.component_std / np.sqrt(self.n_bidders)

    def lower_bounds(self) -> np.ndarray:
        lo = self.factor_low + self.component_mean - self.component_halfwidth()
        return np.tile(np.clip(lo, 0.0, None), (self.n_bidders, 1))

    def upper_bounds(self) -> np.ndarray:
        up = self.factor_high + self.component_mean + self.component_halfwidth()
        return np.tile(up, (self.n_bidders, 1))

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(b"historical")
        for v in (
            self.factor_low,
            self.factor_high,
            self.component_mean,
            self.component_std,
        ):
            h.update(v.tobytes())
        h.update(np.float64(self.conservativeness).tobytes())
        h.update(np.int64(self.n_bidders).tobytes())
        return h.hexdigest()


def contains(uset, bids, tol: float = 1e-9) -> bool:
    """Is the bid matrix consistent with the uncertainty set?

    For interval sets this is the obvious coordinatewise check.  For
    historical sets the shared factor is unobserved, so the test asks
    whether *some* factor value inside its limits explains each
    channel's aggregate bid once the component band (which scales with
    sqrt(n_bidders) in aggregate) is granted.
    """
    bids = np.asarray(bids, dtype=float)
    if isinstance(uset, IntervalUncertainty):
        if bids.shape != set_shape(uset):
            raise ValueError("bid matrix shape does not match the set")
        slack = uset.radius + tol * np.maximum(1.0, np.abs(uset.center))
        return bool(np.all(np.abs(bids - uset.center) <= slack))
    if isinstance(uset, HistoricalUncertainty):
        n = uset.n_bidders
        if bids.shape != (n, uset.n_channels):
            raise ValueError("bid matrix shape does not match the set")
        sums = bids.sum(axis=0)
        agg_half = uset.conservativeness * np.sqrt(n) * uset.component_std
        f_lo = (sums - n * uset.component_mean - agg_half) / n
        f_hi = (sums - n * uset.component_mean + agg_half) / n
        lo = np.maximum(f_lo, uset.factor_low)
        hi = np.minimum(f_hi, uset.factor_high)
        return bool(np.all(lo <= hi + tol * np.maximum(1.0, np.abs(sums) / n)))
    raise TypeError(f"unsupported uncertainty set {type(uset).__name__}")


def set_shape(uset) -> tuple:
    return (uset.n_bidders, uset.n_channels)


def worst_case_profile(uset, allocation_row, bidder: int, *, sense: str = "lower"):
    """Extreme bid vector for one bidder against a channel allocation.

    ``sense="lower"`` minimises and ``sense="upper"`` maximises
    sum_j u_j * allocation_row_j over the set's slice for this bidder.
    Both set families are boxes in each coordinate once the shared
    factor is pushed to its own extreme, so with a nonnegative
    allocation the optimum is the corresponding bound vector.  The
    allocation is validated (the profile itself does not depend on it
    beyond nonnegativity).
    """
    if sense not in ("lower", "upper"):
        raise ValueError("sense must be 'lower' or 'upper'")
    alloc = np.asarray(allocation_row, dtype=float).ravel()
    if alloc.shape[0] != uset.n_channels:
        raise ValueError("allocation length does not match the channel count")
    if np.any(alloc < -1e-12):
        raise ValueError("allocation must be nonnegative")
    if not 0 <= bidder < uset.n_bidders:
        raise IndexError("bidder index out of range")
    bounds = uset.lower_bounds() if sense == "lower" else uset.upper_bounds()
    return bounds[bidder].copy()


def sample_realized_bids(uset, rng: np.random.Generator) -> np.ndarray:
    """Draw one bid matrix from inside the uncertainty set.

    Physically built interval sets resample the detection probability
    uniformly between its extremes and rescale by the stored gain, so
    the draw corresponds to an actual warden position story; bare
    interval sets draw uniformly in the box.  Historical sets draw the
    shared factor once per channel and the components per bidder.
    """
    if isinstance(uset, IntervalUncertainty):
        if uset.dep_low is not None and uset.gain is not None:
            dep = rng.uniform(uset.dep_low, np.maximum(uset.dep_low, uset.dep_high))
            return uset.gain * dep
        lo = uset.lower_bounds()
        hi = uset.upper_bounds()
        return rng.uniform(lo, np.maximum(lo, hi))
    if isinstance(uset, HistoricalUncertainty):
        f = rng.uniform(uset.factor_low, np.maximum(uset.factor_low, uset.factor_high))
        hw = uset.component_halfwidth()
        comp = rng.uniform(
            uset.component_mean - hw,
            uset.component_mean + hw,
            size=(uset.n_bidders, uset.n_channels),
        )
        return np.clip(f[None, :] + comp, 0.0, None)
    raise TypeError(f"unsupported uncertainty set {type(uset).__name__}")


@dataclass(frozen=True)
class BoxSearchConfig:
    """Knobs for the warden-box extremum search."""

    grid_points_per_axis: int = 5
    particles: int = 20
    iterations: int = 50
    inertia: float = 0.7
    cognitive: float = 1.5
    social: float = 1.5
    threshold: ThresholdSearch = ThresholdSearch()

    def __post_init__(self):
        if self.grid_points_per_axis < 1:
            raise ValueError("grid_points_per_axis must be positive")
        if self.particles < 1 or self.iterations < 0:
            raise ValueError("invalid swarm size or iteration count")


class BoxSearchState:
    """Carry-over between nested box searches on the same market.

    Holds the common random fading draws per (bidder, channel) and the
    best positions/extremes seen so far.  Reusing the state across a
    sweep of growing boxes makes the resulting interval endpoints
    monotone by construction: every candidate that defined the previous
    extreme is re-evaluated under identical noise inside the larger box.
    """

    def __init__(self):
        self.fading = {}
        self.pos_low = {}
        self.pos_high = {}
        self.dep_low = {}
        self.dep_high = {}
        self.rates = {}


def _pair_fading(scenario, samples, rng):
    """Per-sub-carrier warden-side power gain draws, fixed across positions."""
    from .metrics import draw_power_gain

    draws = []
    children = rng.spawn(scenario.subcarriers)
    for m, child in enumerate(children):
        hwm = draw_power_gain(scenario.fading_warden_signal[m], samples, child)
        hwg = draw_power_gain(scenario.fading_warden_jam[m], samples, child)
        draws.append((hwm, hwg))
    return draws


def _dep_at_positions(scenario, fading_draws, positions, search):
    """Channel detection probability at each candidate warden position.

    Only the two distance scalars move with the warden, so the fading
    arrays are shared across all positions (common random numbers) and
    the threshold scan runs as a batch per sub-carrier.
    """
    pos = np.atleast_2d(np.asarray(positions, dtype=float))
    node = scenario.node_pos.as_array()
    jammer = scenario.jammer_pos.as_array()
    d_nw = np.linalg.norm(pos - node[None, :], axis=1)
    d_jw = np.linalg.norm(pos - jammer[None, :], axis=1)
    if np.any(d_nw <= 0.0) or np.any(d_jw <= 0.0):
        raise ValueError("candidate warden position coincides with a transmitter")
    g_nw = d_nw ** (-scenario.exponent_node_warden)
    g_jw = d_jw ** (-scenario.exponent_jammer_warden)
    dep = np.full(pos.shape[0], np.inf)
    for m, (hwm, hwg) in enumerate(fading_draws):
        c1 = scenario.tx_power[m] * g_nw
        c2 = scenario.jam_power * g_jw
        out = kernels.optimal_dep_batch(
            hwm,
            hwg,
            c1,
            c2,
            scenario.noise_comm,
            grid_points=search.grid_points,
            quantile=search.quantile,
            rel_tol=search.rel_tol,
        )
        dep = np.minimum(dep, out[0])
    return np.clip(dep, 0.0, 1.0)


def dep_at_position(scenario, state: BoxSearchState, bidder: int, channel: int,
                    position, config: BoxSearchConfig | None = None) -> float:
    """Detection probability at one warden position under a search
    state's stored draws.

    Useful after ``build_interval_from_warden_box``: the same common
    random numbers that shaped the interval endpoints score any further
    candidate position, so the result is directly comparable to the
    stored extremes.
    """
    cfg = config or BoxSearchConfig()
    key = (bidder, channel)
    if key not in state.fading:
        raise KeyError(f"no stored draws for pair {key}; build the interval first")
    pos = np.asarray(position, dtype=float).reshape(1, 3)
    return float(_dep_at_positions(scenario, state.fading[key], pos, cfg.threshold)[0])


def build_interval_from_warden_box(
    scenarios,
    box: WardenBox,
    *,
    samples: int,
    rng: np.random.Generator,
    indicator=None,
    eta_mi=None,
    eta_cc=None,
    config: BoxSearchConfig | None = None,
    state: BoxSearchState | None = None,
):
    """Turn warden-position ignorance into a bid interval set.

    ``scenarios`` is an (n_bidders, n_channels) nested sequence of
    single-link scenarios whose warden position marks the nominal
    (box-center) location.  For every pair the detection probability is
    minimised and maximised over the box (coarse lattice plus swarm
    refinement, common random numbers throughout), the covert rates are
    estimated once, and the bid interval becomes
    gain * [dep_min, dep_max] with gain = indicator * (eta_mi * MI +
    eta_cc * CC).

    Returns ``(interval_set, state)``; feed the state back in when
    sweeping nested boxes so the endpoints stay monotone.
    """
    cfg = config or BoxSearchConfig()
    n = len(scenarios)
    if n == 0 or len(scenarios[0]) == 0:
        raise ValueError("scenario grid must be non-empty")
    m = len(scenarios[0])
    ind = np.ones((n, m)) if indicator is None else _as_matrix("indicator", indicator, (n, m))
    if not np.all(np.isin(ind, (0.0, 1.0))):
        raise ValueError("indicator entries must be 0 or 1")
    w_mi = np.ones((n, m)) if eta_mi is None else _as_matrix("eta_mi", eta_mi, (n, m))
    w_cc = np.ones((n, m)) if eta_cc is None else _as_matrix("eta_cc", eta_cc, (n, m))
    if np.any(w_mi < 0.0) or np.any(w_cc < 0.0):
        raise ValueError("rate weights must be nonnegative")
    st = state if state is not None else BoxSearchState()

    grid_pts = box.grid(cfg.grid_points_per_axis)
    dep_lo = np.zeros((n, m))
    dep_hi = np.zeros((n, m))
    dep_nom = np.zeros((n, m))
    gain = np.zeros((n, m))
    pos_lo = np.zeros((n, m, 3))
    pos_hi = np.zeros((n, m, 3))

    for i in range(n):
        if len(scenarios[i]) != m:
            raise ValueError("scenario grid must be rectangular")
        for j in range(m):
            sc = scenarios[i][j]
            key = (i, j)
            child = rng.spawn(1)[0]
            if key not in st.fading:
                st.fading[key] = _pair_fading(sc, samples, child.spawn(1)[0])
            fading_draws = st.fading[key]

            center = sc.warden_pos.as_array()
            center_inside = box.contains(sc.warden_pos)
            if not center_inside:
                warnings.warn(
                    "nominal warden position lies outside the search box; "
                    "the interval may not bracket the nominal valuation",
                    stacklevel=2,
                )
            cand = [grid_pts]
            for store in (st.pos_low, st.pos_high):
                if key in store:
                    cand.append(np.clip(store[key], box.lower, box.upper)[None, :])
            cand.append(center[None, :])  # kept last; excluded below if outside
            cand = np.vstack(cand)
            dep_cand = _dep_at_positions(sc, fading_draws, cand, cfg.threshold)
            in_box = dep_cand if center_inside else dep_cand[:-1]
            k_lo = int(np.argmin(in_box))
            k_hi = int(np.argmax(in_box))
            best_lo, p_lo = float(dep_cand[k_lo]), cand[k_lo]
            best_hi, p_hi = float(dep_cand[k_hi]), cand[k_hi]
            nominal = float(dep_cand[-1])

            if np.any(np.asarray(box.half_width) > 0.0):
                def neg(objset):
                    def f(p):
                        d = _dep_at_positions(sc, fading_draws, p, cfg.threshold)
                        return d if objset == "lo" else -d

                    return f

                swarm_kw = dict(
                    n_particles=cfg.particles,
                    iterations=cfg.iterations,
                    inertia=cfg.inertia,
                    cognitive=cfg.cognitive,
                    social=cfg.social,
                )
                p, v = pso_minimize(
                    neg("lo"), box.lower, box.upper,
                    rng=child.spawn(1)[0], init=[p_lo, center], **swarm_kw,
                )
                if v < best_lo:
                    best_lo, p_lo = float(v), p
                p, v = pso_minimize(
                    neg("hi"), box.lower, box.upper,
                    rng=child.spawn(1)[0], init=[p_hi, center], **swarm_kw,
                )
                if -v > best_hi:
                    best_hi, p_hi = float(-v), p

            if key in st.dep_low and st.dep_low[key] < best_lo:
                best_lo, p_lo = st.dep_low[key], st.pos_low[key]
            if key in st.dep_high and st.dep_high[key] > best_hi:
                best_hi, p_hi = st.dep_high[key], st.pos_high[key]
            st.dep_low[key], st.pos_low[key] = best_lo, np.asarray(p_lo)
            st.dep_high[key], st.pos_high[key] = best_hi, np.asarray(p_hi)

            if key not in st.rates:
                rate_rng = child.spawn(1)[0]
                mi = covert_mi(sc, samples, rate_rng.spawn(1)[0])
                cc = covert_cc(sc, samples, rate_rng.spawn(1)[0])
                st.rates[key] = (mi, cc)
            mi, cc = st.rates[key]

            dep_lo[i, j] = best_lo
            dep_hi[i, j] = best_hi
            dep_nom[i, j] = min(max(nominal, best_lo), best_hi)
            gain[i, j] = ind[i, j] * (w_mi[i, j] * mi + w_cc[i, j] * cc)
            pos_lo[i, j] = p_lo
            pos_hi[i, j] = p_hi

    lo_v = gain * dep_lo
    hi_v = gain * dep_hi
    interval = IntervalUncertainty(
        center=(lo_v + hi_v) / 2.0,
        radius=(hi_v - lo_v) / 2.0,
        dep_low=dep_lo,
        dep_high=dep_hi,
        dep_nominal=dep_nom,
        gain=gain,
        pos_low=pos_lo,
        pos_high=pos_hi,
    )
    return interval, st


def build_historical_from_history(
    history, *, conservativeness: float = 1.0, factor_bounds=None
) -> HistoricalUncertainty:
    """Estimate a historical uncertainty set from past bid rounds.

    ``history`` is (rounds, bidders, channels).  The per-round shared
    factor on each channel is taken as the cross-bidder median; the
    leftovers define the idiosyncratic component's mean and dispersion.
    ``factor_bounds=(low, high)`` overrides the fitted factor range
    (arrays or scalars, per channel).
    """
    h = np.asarray(history, dtype=float)
    if h.ndim != 3 or h.shape[0] < 2 or h.shape[1] < 1:
        raise ValueError("history must be (rounds >= 2, bidders, channels)")
    if not np.all(np.isfinite(h)):
        raise ValueError("history must be finite")
    factors = np.median(h, axis=1)  # (rounds, channels)
    residuals = h - factors[:, None, :]
    mu = residuals.mean(axis=(0, 1))
    sd = residuals.std(axis=(0, 1))
    if factor_bounds is not None:
        f_lo, f_hi = factor_bounds
        f_lo = np.broadcast_to(np.asarray(f_lo, dtype=float), (h.shape[2],)).copy()
        f_hi = np.broadcast_to(np.asarray(f_hi, dtype=float), (h.shape[2],)).copy()
    else:
        f_lo = factors.min(axis=0)
        f_hi = factors.max(axis=0)
    return HistoricalUncertainty(
        factor_low=f_lo,
        factor_high=f_hi,
        component_mean=mu,
        component_std=sd,
        conservativeness=conservativeness,
        n_bidders=h.shape[1],
    )
