"""Command-line front end: generate scenarios, run sweeps, run auctions.

Every subcommand is a thin shell around one driver in sweeps.py or one
constructor in scenario.py; all the science lives there.  Outputs are
CSV files with a header row (or scenario JSON for gen-scenario), and
every run prints the seed it used so the file can be reproduced.  Exit
status is 0 on success, 2 when an input fails validation.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .channel import Position3D
from .deterministic import det_run
from .rmca import rmca_phase_a, rmca_phase_b
from .scenario import (
    GeneratorConfig,
    generate_scenario,
    ir_study_scenario,
    jamming_study_scenario,
    load_scenario,
    save_scenario,
    scenario_hash,
)
from .sweeps import (
    LEAN_BOX_SEARCH,
    bench_timing,
    experiment_ir_violation,
    nominal_bids,
    sweep_bids,
    sweep_jamming,
    sweep_uncertainty,
    write_bids_csv,
    write_ir_csv,
    write_jamming_csv,
    write_outcome_csv,
    write_timing_csv,
    write_uncertainty_csv,
)
from .uncertainty import WardenBox, build_interval_from_warden_box


def _float_list(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}")


def _int_list(text: str) -> list[int]:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated int list: {text!r}")


def _positive(kind):
    def parse(text: str):
        value = kind(text)
        if value <= 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return value

    return parse


def _cmd_gen_scenario(args) -> int:
    config = GeneratorConfig(
        n_nodes=args.nodes,
        n_channels=args.channels,
        subcarriers=args.subcarriers,
        calibration_samples=args.calibration_samples,
    )
    scenario = generate_scenario(config, np.random.default_rng(args.seed))
    save_scenario(scenario, args.out)
    print(f"scenario seed {scenario.seed} hash {scenario_hash(scenario)} -> {args.out}")
    return 0


def _cmd_sweep_jamming(args) -> int:
    grid = np.concatenate(
        [[0.0], np.geomspace(args.min_power, args.max_power, args.points)]
    )
    scenario = jamming_study_scenario(subcarriers=args.subcarriers)
    result = sweep_jamming(
        scenario, grid, args.samples, np.random.default_rng(args.seed)
    )
    write_jamming_csv(result, args.out)
    print(f"jamming sweep seed {result.seed} ({grid.size} points) -> {args.out}")
    return 0


def _cmd_sweep_uncertainty(args) -> int:
    scenario = load_scenario(args.scenario)
    result = sweep_uncertainty(
        scenario,
        args.widths,
        args.trials,
        np.random.default_rng(args.seed),
        samples=args.samples,
    )
    write_uncertainty_csv(result, args.out)
    print(
        f"uncertainty sweep seed {result.seed} "
        f"({args.trials} trials x {len(args.widths)} widths) -> {args.out}"
    )
    return 0


def _cmd_ir_violation(args) -> int:
    rng = np.random.default_rng(args.seed)
    scenario = ir_study_scenario(args.nodes, args.channels, rng)
    report = experiment_ir_violation(
        scenario, args.displacement == "inside", args.trials, rng,
        samples=args.samples,
    )
    write_ir_csv(report, args.out)
    worst = float(report.rmca_true.min())
    print(
        f"ir study seed {report.seed} ({args.trials} trials, warden "
        f"{args.displacement}) worst robust true utility {worst:.6f} -> {args.out}"
    )
    return 0


def _cmd_sweep_bids(args) -> int:
    bids = np.loadtxt(args.bids, delimiter=",", ndmin=2)
    increments = np.arange(args.steps) * args.step_size
    result = sweep_bids(
        bids,
        increments,
        args.budgets,
        args.costs,
        np.random.default_rng(args.seed),
        target_row=args.target_row,
    )
    write_bids_csv(result, args.out)
    print(
        f"bid sweep seed {result.seed} (row {result.target_row}, "
        f"{args.steps} steps of {args.step_size}) -> {args.out}"
    )
    return 0


def _cmd_bench_timing(args) -> int:
    result = bench_timing(
        args.nodes,
        args.channels,
        args.reps,
        np.random.default_rng(args.seed),
        instances=args.instances,
    )
    write_timing_csv(result, args.out)
    print(f"timing bench seed {result.seed} ({len(result.rows)} cells) -> {args.out}")
    return 0


def _cmd_auction_run(args) -> int:
    """One full allocate-price-round pass on a stored market.

    The deterministic run estimates each link once and bids that; the
    robust run bids the box-centre values carried by its own interval
    set, so the submitted bids and the gating set come from the same
    channel draws and wholesale rejection cannot trigger.
    """
    scenario = load_scenario(args.scenario)
    rng = np.random.default_rng(args.seed)
    if args.mechanism == "deterministic":
        bids = nominal_bids(scenario, args.samples, rng)
        outcome = det_run(bids, scenario.budgets, scenario.costs, rng)
    else:
        half = args.box_halfwidth or scenario.warden_box_halfwidth
        if half is None:
            raise ValueError(
                "scenario stores no warden box; pass --box-halfwidth"
            )
        box = WardenBox(Position3D(*scenario.warden_position), tuple(half))
        n, m = scenario.n_nodes, scenario.n_channels
        uset, _ = build_interval_from_warden_box(
            scenario.link_grid(),
            box,
            samples=args.samples,
            rng=rng,
            indicator=scenario.indicator,
            eta_mi=np.broadcast_to(scenario.eta_mi[:, None], (n, m)),
            eta_cc=np.broadcast_to(scenario.eta_cc[:, None], (n, m)),
            config=LEAN_BOX_SEARCH if args.lean_search else None,
        )
        bids = uset.gain * uset.dep_nominal
        phase_a = rmca_phase_a(uset, scenario.budgets, scenario.costs)
        outcome = rmca_phase_b(
            bids, phase_a, uset, scenario.budgets, scenario.costs, rng
        )
    write_outcome_csv(outcome, args.out)
    sold = int((outcome.winners >= 0).sum())
    print(
        f"{args.mechanism} auction on {args.scenario}: welfare "
        f"{outcome.social_welfare:.4f}, {sold}/{scenario.n_channels} "
        f"channels sold -> {args.out}"
    )
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="covert-auction",
        description="Spectrum auctions for covert joint radar-communication links",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, samples_default=None):
        p.add_argument("--seed", type=int, default=0, help="master RNG seed")
        if samples_default is not None:
            p.add_argument(
                "--samples", type=_positive(int), default=samples_default,
                help="Monte-Carlo draws per link metric",
            )
        p.add_argument("--out", required=True, help="output file path")

    p = sub.add_parser("gen-scenario", help="draw a random market and save it as JSON")
    common(p)
    p.add_argument("--nodes", type=_positive(int), default=20)
    p.add_argument("--channels", type=_positive(int), default=10)
    p.add_argument("--subcarriers", type=_positive(int), default=10)
    p.add_argument("--calibration-samples", type=_positive(int), default=256)
    p.set_defaults(func=_cmd_gen_scenario)

    p = sub.add_parser(
        "sweep-jamming",
        help="detection probability and covert rates against jamming power",
    )
    common(p, samples_default=100_000)
    p.add_argument("--points", type=_positive(int), default=25,
                   help="geometric grid points beyond the zero-power baseline")
    p.add_argument("--min-power", type=_positive(float), default=0.05)
    p.add_argument("--max-power", type=_positive(float), default=4.0)
    p.add_argument("--subcarriers", type=_positive(int), default=10)
    p.set_defaults(func=_cmd_sweep_jamming)

    p = sub.add_parser(
        "sweep-uncertainty", help="welfare of both mechanisms as the warden box grows"
    )
    common(p, samples_default=1500)
    p.add_argument("--scenario", required=True, help="market JSON from gen-scenario")
    p.add_argument("--widths", type=_float_list, default=[0.0, 1.0, 2.0, 4.0],
                   help="ascending box edge lengths in metres, e.g. 0,1,2,4")
    p.add_argument("--trials", type=_positive(int), default=10)
    p.set_defaults(func=_cmd_sweep_uncertainty)

    p = sub.add_parser(
        "ir-violation",
        help="true utilities when the warden is not where the bids assumed",
    )
    common(p, samples_default=1500)
    p.add_argument("--trials", type=_positive(int), default=100)
    p.add_argument("--nodes", type=_positive(int), default=3)
    p.add_argument("--channels", type=_positive(int), default=2)
    p.add_argument("--displacement", choices=("inside", "outside"), default="inside",
                   help="whether the true warden stays inside the search box")
    p.set_defaults(func=_cmd_ir_violation)

    p = sub.add_parser(
        "sweep-bids", help="allocations as one bidder's bids are raised uniformly"
    )
    common(p)
    p.add_argument("--bids", required=True,
                   help="CSV bid matrix, one row per node, no header")
    p.add_argument("--budgets", type=_float_list, required=True)
    p.add_argument("--costs", type=_float_list, required=True)
    p.add_argument("--steps", type=_positive(int), default=15)
    p.add_argument("--step-size", type=_positive(float), default=0.1)
    p.add_argument("--target-row", type=int, default=-1,
                   help="node whose bids are raised (default: last row)")
    p.set_defaults(func=_cmd_sweep_bids)

    p = sub.add_parser(
        "bench-timing", help="wall-clock of both mechanisms over market sizes"
    )
    common(p)
    p.add_argument("--nodes", type=_int_list, default=[5, 10, 15, 20])
    p.add_argument("--channels", type=_int_list, default=[10])
    p.add_argument("--reps", type=_positive(int), default=5)
    p.add_argument("--instances", type=_positive(int), default=3,
                   help="independent markets timed per grid cell")
    p.set_defaults(func=_cmd_bench_timing)

    p = sub.add_parser("auction", help="run one auction on a stored scenario")
    auction_sub = p.add_subparsers(dest="auction_command", required=True)
    p = auction_sub.add_parser("run", help="allocate, price and round once")
    common(p, samples_default=1500)
    p.add_argument("--scenario", required=True, help="market JSON from gen-scenario")
    p.add_argument("--mechanism", choices=("rmca", "deterministic"), required=True)
    p.add_argument("--box-halfwidth", type=_float_list, default=None,
                   help="warden box half widths x,y,z (default: stored in scenario)")
    p.add_argument("--lean-search", action="store_true",
                   help="small swarm budget for the warden box search")
    p.set_defaults(func=_cmd_auction_run)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
