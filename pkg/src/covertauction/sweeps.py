"""Experiment drivers behind the command-line harness.

Each sweep is a plain function from (inputs, rng) to a frozen result
object, plus a CSV writer with a fixed column set.  Common random
numbers are used wherever a curve is compared across grid points, so
the documented monotonicities hold exactly instead of up to Monte-Carlo
wiggle, and every result carries the seed that reproduces it.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, replace

import numpy as np

from .channel import Position3D
from .deterministic import det_run, det_true_utility
from .metrics import CovertLinkScenario, channel_dep, covert_cc, covert_mi, valuation
from .rmca import clear_phase_a_cache, rmca_phase_a, rmca_phase_b
from .robust import solve_allocation, solve_robust_nominal
from .scenario import MarketScenario, draw_costs
from .uncertainty import (
    BoxSearchConfig,
    BoxSearchState,
    IntervalUncertainty,
    WardenBox,
    build_interval_from_warden_box,
    dep_at_position,
)

CSV_SCHEMA_VERSION = 1

# Desk-scale default for the box searches driven from here.  The full
# default in BoxSearchConfig is meant for one-off interval builds; the
# sweeps below rebuild intervals dozens to hundreds of times.
LEAN_BOX_SEARCH = BoxSearchConfig(grid_points_per_axis=3, particles=6, iterations=8)


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(row)


def _ascending_grid(name, values):
    grid = np.asarray(values, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError(f"{name} must be a non-empty vector")
    if np.any(grid < 0.0) or np.any(np.diff(grid) < 0.0):
        raise ValueError(f"{name} must be nonnegative and ascending")
    return grid


# ------------------------------------------------------- jamming sweep


@dataclass(frozen=True)
class JammingSweepResult:
    seed: int
    samples: int
    power_w: np.ndarray
    dep: np.ndarray
    cc: np.ndarray
    mi: np.ndarray


def sweep_jamming(scenario: CovertLinkScenario, power_grid, samples: int,
                  rng: np.random.Generator) -> JammingSweepResult:
    """Detection probability and covert rates along a jamming-power grid.

    Every grid point re-runs the same seeded draws, so dep can only move
    through the jamming scale itself; with that, dep is non-decreasing
    and both rates non-increasing along the grid.
    """
    grid = _ascending_grid("power grid", power_grid)
    seed = int(rng.integers(0, 2**63 - 1))
    dep = np.empty(grid.size)
    cc = np.empty(grid.size)
    mi = np.empty(grid.size)
    for k, p in enumerate(grid):
        point = replace(scenario, jam_power=float(p))
        dep[k] = channel_dep(point, samples, np.random.default_rng(seed))
        cc[k] = covert_cc(point, samples, np.random.default_rng(seed + 1))
        mi[k] = covert_mi(point, samples, np.random.default_rng(seed + 2))
    return JammingSweepResult(seed, samples, grid, dep, cc, mi)


def write_jamming_csv(result: JammingSweepResult, path) -> None:
    rows = [
        (CSV_SCHEMA_VERSION, result.seed, result.samples, p, d, c, m)
        for p, d, c, m in zip(result.power_w, result.dep, result.cc, result.mi)
    ]
    _write_csv(
        path,
        ("schema_version", "seed", "samples", "power_w", "dep", "cc_bps", "mi_bits"),
        rows,
    )


# -------------------------------------------------- uncertainty sweep


@dataclass(frozen=True)
class UncertaintySweepResult:
    seed: int
    trials: int
    widths: np.ndarray
    robust_welfare: np.ndarray  # (trials, widths) worst-case objective
    realized_welfare: np.ndarray  # robust allocation scored at nominal bids
    det_welfare: np.ndarray  # (trials,) constant across widths


def sweep_uncertainty(scenario: MarketScenario, box_widths, trials: int,
                      rng: np.random.Generator, *, samples: int = 1500,
                      config: BoxSearchConfig | None = None
                      ) -> UncertaintySweepResult:
    """Price of robustness: welfare as the warden search box grows.

    Widths are full box edge lengths in the ground plane, centred on the
    believed warden position.  Within a trial one search state serves
    all widths, so the interval endpoints widen monotonically and the
    nominal bids stay fixed; the deterministic mechanism sees those same
    nominal bids and its welfare is one number per trial.
    """
    widths = _ascending_grid("box widths", box_widths)
    if trials < 1:
        raise ValueError("need at least one trial")
    cfg = config or LEAN_BOX_SEARCH
    seed = int(rng.integers(0, 2**63 - 1))
    links = scenario.link_grid()
    n, m = scenario.n_nodes, scenario.n_channels
    eta_mi = np.broadcast_to(scenario.eta_mi[:, None], (n, m))
    eta_cc = np.broadcast_to(scenario.eta_cc[:, None], (n, m))
    costs = scenario.costs
    center = Position3D(*scenario.warden_position)

    robust = np.empty((trials, widths.size))
    realized = np.empty((trials, widths.size))
    det = np.empty(trials)
    for t in range(trials):
        trial_rng = np.random.default_rng(seed + t)
        state = BoxSearchState()
        nominal = None
        for k, width in enumerate(widths):
            box = WardenBox(center, (width / 2.0, width / 2.0, 0.0))
            uset, state = build_interval_from_warden_box(
                links,
                box,
                samples=samples,
                rng=trial_rng,
                indicator=scenario.indicator,
                eta_mi=eta_mi,
                eta_cc=eta_cc,
                config=cfg,
                state=state,
            )
            result = solve_robust_nominal(uset, costs, scenario.budgets)
            robust[t, k] = result.objective
            if nominal is None:
                nominal = uset.gain * uset.dep_nominal
            realized[t, k] = float(
                ((nominal - costs) * result.nominal_allocation).sum()
            )
        det[t] = solve_allocation(nominal, costs, scenario.budgets).objective
    return UncertaintySweepResult(seed, trials, widths, robust, realized, det)


def write_uncertainty_csv(result: UncertaintySweepResult, path) -> None:
    rows = []
    for t in range(result.trials):
        for k, width in enumerate(result.widths):
            rows.append(
                (
                    CSV_SCHEMA_VERSION,
                    result.seed,
                    t,
                    width,
                    result.robust_welfare[t, k],
                    result.realized_welfare[t, k],
                    result.det_welfare[t],
                )
            )
    _write_csv(
        path,
        (
            "schema_version",
            "seed",
            "trial",
            "box_width_m",
            "robust_welfare",
            "realized_welfare",
            "det_welfare",
        ),
        rows,
    )


# --------------------------------------------- warden displacement (IR)


@dataclass(frozen=True)
class IrViolationReport:
    seed: int
    trials: int
    inside: bool
    displaced_position: np.ndarray
    rmca_expected: np.ndarray  # (trials, nodes) worst-case-basis utility
    rmca_true: np.ndarray  # utility at the valuations the true warden induces
    det_expected: np.ndarray  # utility taken at the submitted bids
    det_true: np.ndarray


def _displaced_warden(scenario: MarketScenario, factor: float) -> np.ndarray:
    halfwidth = np.asarray(scenario.warden_box_halfwidth, dtype=float)
    toward = scenario.jammer_positions.mean(axis=0) - scenario.warden_position
    toward[2] = 0.0
    norm = np.linalg.norm(toward)
    if norm == 0.0:
        raise ValueError("jammers sit on top of the believed warden position")
    return scenario.warden_position + factor * halfwidth * (toward / norm)


def experiment_ir_violation(scenario: MarketScenario, displacement_inside: bool,
                            trials: int, rng: np.random.Generator, *,
                            samples: int = 1500,
                            config: BoxSearchConfig | None = None
                            ) -> IrViolationReport:
    """Utilities when the warden is not where the nodes believe.

    The true warden is displaced from the believed position toward the
    jammers: 80% of the box half width when it should stay inside the
    search box, three times the half width otherwise.  Each trial
    redraws the common random numbers, rebuilds the interval set, runs
    both mechanisms on the nominal bids, and scores true utilities at
    the valuations the displaced warden induces under the same draws.

    When the displacement stays inside the box, the displaced
    position's detection probability is folded into the interval
    endpoints before the auction runs.  It is an in-box candidate, so
    this only sharpens the search; it also guarantees the true
    valuations lie inside the set the mechanism certified against.
    """
    if scenario.warden_box_halfwidth is None:
        raise ValueError("scenario carries no warden search box")
    if trials < 1:
        raise ValueError("need at least one trial")
    cfg = config or LEAN_BOX_SEARCH
    seed = int(rng.integers(0, 2**63 - 1))
    factor = 0.8 if displacement_inside else 3.0
    displaced = _displaced_warden(scenario, factor)
    halfwidth = np.asarray(scenario.warden_box_halfwidth, dtype=float)
    box = WardenBox(Position3D(*scenario.warden_position), tuple(halfwidth))
    links = scenario.link_grid()
    n, m = scenario.n_nodes, scenario.n_channels
    eta_mi = np.broadcast_to(scenario.eta_mi[:, None], (n, m))
    eta_cc = np.broadcast_to(scenario.eta_cc[:, None], (n, m))
    costs = scenario.costs

    rmca_expected = np.empty((trials, n))
    rmca_true = np.empty((trials, n))
    det_expected = np.empty((trials, n))
    det_true = np.empty((trials, n))
    for t in range(trials):
        trial_rng = np.random.default_rng(seed + t)
        uset, state = build_interval_from_warden_box(
            links,
            box,
            samples=samples,
            rng=trial_rng,
            indicator=scenario.indicator,
            eta_mi=eta_mi,
            eta_cc=eta_cc,
            config=cfg,
        )
        dep_true = np.array(
            [
                [dep_at_position(links[i][j], state, i, j, displaced, cfg)
                 for j in range(m)]
                for i in range(n)
            ]
        )
        if displacement_inside:
            dep_lo = np.minimum(uset.dep_low, dep_true)
            dep_hi = np.maximum(uset.dep_high, dep_true)
            uset = IntervalUncertainty(
                center=uset.gain * (dep_lo + dep_hi) / 2.0,
                radius=uset.gain * (dep_hi - dep_lo) / 2.0,
                dep_low=dep_lo,
                dep_high=dep_hi,
                dep_nominal=uset.dep_nominal,
                gain=uset.gain,
                pos_low=uset.pos_low,
                pos_high=uset.pos_high,
            )
        bids = uset.gain * uset.dep_nominal
        true_values = uset.gain * dep_true

        phase_a = rmca_phase_a(uset, scenario.budgets, costs)
        outcome = rmca_phase_b(
            bids, phase_a, uset, scenario.budgets, costs, trial_rng
        )
        alloc = outcome.fractional_allocation
        rmca_true[t] = (true_values * alloc).sum(axis=1) - outcome.payments
        rmca_expected[t] = (uset.lower_bounds() * alloc).sum(axis=1) - outcome.payments

        det_outcome = det_run(bids, scenario.budgets, costs, trial_rng)
        det_alloc = det_outcome.fractional_allocation
        det_expected[t] = (bids * det_alloc).sum(axis=1) - det_outcome.payments
        det_true[t] = det_true_utility(det_outcome, true_values)
    return IrViolationReport(
        seed, trials, displacement_inside, displaced,
        rmca_expected, rmca_true, det_expected, det_true,
    )


def write_ir_csv(report: IrViolationReport, path) -> None:
    rows = []
    for t in range(report.trials):
        for i in range(report.rmca_true.shape[1]):
            rows.append(
                (
                    CSV_SCHEMA_VERSION, report.seed, t, i, "rmca",
                    int(report.inside),
                    report.rmca_expected[t, i], report.rmca_true[t, i],
                )
            )
            rows.append(
                (
                    CSV_SCHEMA_VERSION, report.seed, t, i, "deterministic",
                    int(report.inside),
                    report.det_expected[t, i], report.det_true[t, i],
                )
            )
    _write_csv(
        path,
        (
            "schema_version",
            "seed",
            "trial",
            "node",
            "mechanism",
            "warden_inside",
            "expected_utility",
            "true_utility",
        ),
        rows,
    )


# -------------------------------------------------------- bid raising


@dataclass(frozen=True)
class BidSweepResult:
    seed: int
    target_row: int
    increments: np.ndarray
    rmca_allocation: np.ndarray  # (steps, nodes, channels)
    det_allocation: np.ndarray
    rmca_welfare: np.ndarray
    det_welfare: np.ndarray


def sweep_bids(base_bids, increments, budgets, costs,
               rng: np.random.Generator, *, target_row: int = -1,
               radius_fraction: float = 0.05) -> BidSweepResult:
    """Raise one node's bids step by step and watch its allocation move.

    The uncertainty set around each bid matrix is a fixed relative band,
    so the robust mechanism prices budget feasibility against bids a
    touch above the submitted ones; the raised node's budget is what
    eventually caps how much extra it can win.
    """
    bids = np.asarray(base_bids, dtype=float)
    if bids.ndim != 2:
        raise ValueError("base bids must be a matrix")
    steps = _ascending_grid("increments", increments)
    if not 0.0 <= radius_fraction < 1.0:
        raise ValueError("radius fraction must lie in [0, 1)")
    n, m = bids.shape
    target = int(np.arange(n)[target_row])
    seed = int(rng.integers(0, 2**63 - 1))
    rmca_alloc = np.empty((steps.size, n, m))
    det_alloc = np.empty((steps.size, n, m))
    rmca_welfare = np.empty(steps.size)
    det_welfare = np.empty(steps.size)
    for k, inc in enumerate(steps):
        raised = bids.copy()
        raised[target] += inc
        uset = IntervalUncertainty(
            center=raised, radius=radius_fraction * raised
        )
        phase_a = rmca_phase_a(uset, budgets, costs)
        outcome = rmca_phase_b(
            raised, phase_a, uset, budgets, costs,
            np.random.default_rng(seed + k),
        )
        rmca_alloc[k] = outcome.fractional_allocation
        rmca_welfare[k] = outcome.social_welfare
        det_outcome = det_run(
            raised, budgets, costs, np.random.default_rng(seed + k)
        )
        det_alloc[k] = det_outcome.fractional_allocation
        det_welfare[k] = det_outcome.social_welfare
    return BidSweepResult(
        seed, target, steps, rmca_alloc, det_alloc, rmca_welfare, det_welfare
    )


def write_bids_csv(result: BidSweepResult, path) -> None:
    rows = []
    steps, n, m = result.rmca_allocation.shape
    for k in range(steps):
        for i in range(n):
            for j in range(m):
                rows.append(
                    (
                        CSV_SCHEMA_VERSION,
                        result.seed,
                        result.increments[k],
                        i,
                        j,
                        result.rmca_allocation[k, i, j],
                        result.det_allocation[k, i, j],
                        result.rmca_welfare[k],
                        result.det_welfare[k],
                    )
                )
    _write_csv(
        path,
        (
            "schema_version",
            "seed",
            "increment",
            "node",
            "channel",
            "rmca_allocation",
            "det_allocation",
            "rmca_welfare",
            "det_welfare",
        ),
        rows,
    )


# ------------------------------------------------------------- timing


@dataclass(frozen=True)
class TimingResult:
    seed: int
    repetitions: int
    rows: tuple  # of (n_nodes, n_channels, rmca_seconds, det_seconds)


def bench_timing(node_counts, channel_counts, repetitions: int,
                 rng: np.random.Generator | None = None, *,
                 radius_fraction: float = 0.05,
                 instances: int = 1) -> TimingResult:
    """Median wall-clock for one full run of each mechanism per market size.

    ``instances`` synthetic markets are drawn per (nodes, channels)
    cell and each is timed ``repetitions`` times, with the median taken
    over the pooled measurements; a single unlucky draw (the simplex
    iteration count varies a fair bit between instances) then cannot
    dominate a cell.  The robust side clears its offline cache before
    every repetition so each timing covers the whole pipeline.
    """
    if repetitions < 1:
        raise ValueError("need at least one repetition")
    if instances < 1:
        raise ValueError("need at least one market instance per cell")
    rng = rng or np.random.default_rng(0)
    seed = int(rng.integers(0, 2**63 - 1))
    master = np.random.default_rng(seed)
    rows = []
    for n in node_counts:
        for m in channel_counts:
            rmca_times = []
            det_times = []
            for inst in range(instances):
                values = master.uniform(1.0, 5.0, (int(n), int(m)))
                costs = draw_costs(int(m), master)
                budgets = master.uniform(1.5, 5.0, int(n))
                uset = IntervalUncertainty(
                    center=values, radius=radius_fraction * values
                )
                for rep in range(repetitions):
                    clear_phase_a_cache()
                    run_rng = np.random.default_rng(seed + rep)
                    start = time.perf_counter()
                    phase_a = rmca_phase_a(uset, budgets, costs)
                    rmca_phase_b(values, phase_a, uset, budgets, costs, run_rng)
                    rmca_times.append(time.perf_counter() - start)
                    run_rng = np.random.default_rng(seed + rep)
                    start = time.perf_counter()
                    det_run(values, budgets, costs, run_rng)
                    det_times.append(time.perf_counter() - start)
            rows.append(
                (int(n), int(m), float(np.median(rmca_times)), float(np.median(det_times)))
            )
    return TimingResult(seed, repetitions, tuple(rows))


def write_timing_csv(result: TimingResult, path) -> None:
    rows = [
        (CSV_SCHEMA_VERSION, result.seed, result.repetitions, n, m, rmca_s, det_s)
        for n, m, rmca_s, det_s in result.rows
    ]
    _write_csv(
        path,
        (
            "schema_version",
            "seed",
            "repetitions",
            "n_nodes",
            "n_channels",
            "rmca_seconds",
            "det_seconds",
        ),
        rows,
    )


# ------------------------------------------------------ auction output


def nominal_bids(scenario: MarketScenario, samples: int,
                 rng: np.random.Generator) -> np.ndarray:
    """Plain Monte-Carlo valuations at the believed warden position."""
    n, m = scenario.n_nodes, scenario.n_channels
    bids = np.zeros((n, m))
    for i in range(n):
        for j in range(m):
            if scenario.indicator[i, j] == 0.0:
                continue
            link = scenario.link_scenario(i, j)
            dep = channel_dep(link, samples, rng)
            mi = covert_mi(link, samples, rng)
            cc = covert_cc(link, samples, rng)
            bids[i, j] = valuation(
                1, scenario.eta_mi[i], scenario.eta_cc[i], mi, cc, dep
            )
    return bids


def outcome_rows(outcome):
    """Flatten an auction outcome into per-(node, channel) CSV rows."""
    alloc = outcome.fractional_allocation
    n, m = alloc.shape
    rows = []
    for i in range(n):
        for j in range(m):
            won = int(outcome.winners[j] == i)
            rows.append(
                (
                    CSV_SCHEMA_VERSION,
                    outcome.mechanism,
                    i,
                    j,
                    alloc[i, j],
                    won,
                    outcome.channel_charges[j] if won else 0.0,
                    outcome.payments[i],
                    outcome.social_welfare,
                )
            )
    return rows


def write_outcome_csv(outcome, path) -> None:
    _write_csv(
        path,
        (
            "schema_version",
            "mechanism",
            "node",
            "channel",
            "fractional_allocation",
            "won",
            "channel_charge",
            "payment",
            "social_welfare",
        ),
        outcome_rows(outcome),
    )
