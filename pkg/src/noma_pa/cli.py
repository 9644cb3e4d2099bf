"""Command line interface: ``noma-pa allocate|orders|outage <scenario.json>``.

Exit codes: 0 success (a diagnosed infeasible allocation is still a
success), 2 input error, 3 enumeration guard tripped.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .allocation import (
    STRATEGIES,
    diagnose,
    epsilon_bounds,
    general_allocation,
    interference_ceiling,
    oma_equivalent,
    oma_margins,
    decoding_margins,
    strategy_allocation,
)
from .channel import ChannelModel2, channel_from_dict
from .model import (
    DecodingOrder,
    DimensionMismatch,
    EpsilonVector,
    NomaError,
    PowerAllocation,
    SystemConfig,
    TooManyPermutations,
    canonicalize,
    db_to_linear,
    validate_config,
)
from .ordering import DEFAULT_MAX_ENUMERATE, rank_orders
from .outage import DEFAULT_TRIALS, parse_grid, sweep, write_csv

SCENARIO_DIR = Path(__file__).parent / "scenarios"
EXIT_INPUT = 2
EXIT_GUARD = 3


@dataclass(frozen=True)
class Scenario:
    """A validated scenario with every per-user vector in canonical order."""

    config: SystemConfig
    order: DecodingOrder
    channel: object
    strategy: str
    coefficients: tuple[float, ...] | None
    epsilon: tuple[float, ...] | None
    trials: int
    seed: int
    xi_grid_db: list[float]


def _vector(raw, name, k):
    if raw is None:
        return None
    if not isinstance(raw, list) or len(raw) != k:
        raise DimensionMismatch(f"{name} must be a list of {k} numbers")
    return [float(v) for v in raw]


def parse_scenario(raw: dict, seed: int | None = None) -> Scenario:
    """Validate a scenario mapping; ``seed`` overrides the file's seed."""
    if not isinstance(raw, dict):
        raise NomaError("scenario must be a JSON object")
    try:
        rates = raw["target_rates"]
        fractions = raw["oma_fractions"]
        snr_db = float(raw["transmit_snr_db"])
    except KeyError as exc:
        raise NomaError(f"scenario is missing {exc.args[0]!r}") from None
    except (TypeError, ValueError):
        raise NomaError("transmit_snr_db must be a number") from None
    config = validate_config(SystemConfig(rates, fractions, db_to_linear(snr_db)))
    canon, order = canonicalize(config)
    idx = order.indices
    k = config.num_users

    sim = raw.get("simulation", {}) or {}
    trials = int(sim.get("trials", DEFAULT_TRIALS))
    if seed is None:
        seed = int(sim.get("seed", 0))
    grid = parse_grid(sim.get("xi_grid_db", snr_db))

    channel = channel_from_dict(raw.get("channel", {"model": 1}), k, seed)
    if isinstance(channel, ChannelModel2):
        channel = channel.permuted(idx)

    strat = raw.get("strategy", "proportional")
    coeffs = eps = None
    if isinstance(strat, dict):
        name = strat.get("name", "explicit")
        coeffs = _vector(strat.get("coefficients"), "coefficients", k)
        eps = _vector(strat.get("epsilon"), "epsilon", k)
    else:
        name = str(strat)
    if name == "explicit":
        if (coeffs is None) == (eps is None):
            raise NomaError("explicit strategy needs exactly one of 'coefficients' or 'epsilon'")
    elif name not in STRATEGIES:
        raise NomaError(f"unknown strategy {name!r}")
    if coeffs is not None:
        coeffs = tuple(coeffs[i] for i in idx)
    if eps is not None:
        eps = tuple(eps[i] for i in idx)
    return Scenario(canon, order, channel, name, coeffs, eps, trials, seed, grid)


def load_scenario(path, seed: int | None = None) -> Scenario:
    path = Path(path)
    if not path.exists() and (SCENARIO_DIR / path.name).exists():
        path = SCENARIO_DIR / path.name
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise NomaError(f"cannot read scenario {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise NomaError(f"scenario {path} is not valid JSON: {exc}") from None
    return parse_scenario(raw, seed)


def with_strategy(sc: Scenario, name: str) -> Scenario:
    if name not in STRATEGIES:
        raise NomaError(f"--strategy must be one of {STRATEGIES}")
    return Scenario(sc.config, sc.order, sc.channel, name, None, None, sc.trials, sc.seed, sc.xi_grid_db)


def scenario_allocation(sc: Scenario) -> tuple[PowerAllocation, EpsilonVector | None]:
    if sc.strategy != "explicit":
        return strategy_allocation(sc.config, sc.strategy)
    if sc.epsilon is not None:
        eps = EpsilonVector(sc.epsilon)
        return general_allocation(sc.config, eps), eps
    return PowerAllocation(sc.coefficients), None


def _floats(values) -> list[float]:
    return [float(v) for v in values]


def allocate_report(sc: Scenario) -> dict:
    config = sc.config
    rates = config.rates
    oma = oma_equivalent(config)
    alloc, eps = scenario_allocation(sc)
    diag = diagnose(alloc, config)
    # the extra power each user received on top of its OMA-equivalent margin
    implied = decoding_margins(alloc, rates) - oma_margins(rates, config.fractions)
    if eps is None and np.all(implied >= -1e-12):
        eps = EpsilonVector(tuple(np.maximum(implied, 0.0)))
    bounds = []
    if eps is not None:
        for n in range(2, config.num_users + 1):
            ordering, budget = epsilon_bounds(config, eps.values, n)
            bounds.append(
                {
                    "user": n,
                    "epsilon": eps.values[n - 1],
                    "ordering_bound": ordering,
                    "budget_bound": budget,
                    "upper_bound": min(ordering, budget),
                }
            )
    return {
        "canonical_order": list(sc.order.permutation),
        "target_rates": list(config.target_rates),
        "oma_fractions": list(config.oma_fractions),
        "normalized_rates": _floats(config.normalized_rates),
        "strategy": sc.strategy,
        "oma_equivalent": list(oma.coefficients),
        "oma_interference": list(oma.interference),
        "total_oma_equivalent": oma.total,
        "headroom": oma.headroom,
        "epsilon": None if eps is None else list(eps.values),
        "coefficients": list(alloc.coefficients),
        "interference": list(alloc.interference),
        "total_power": alloc.total,
        "interference_ceilings": [
            interference_ceiling(rates, n) for n in range(1, config.num_users)
        ],
        "diagnostics": diag.as_dict(),
        "epsilon_bounds": bounds,
        "channel": sc.channel.describe(),
    }


def orders_csv(sc: Scenario, max_enumerate: int = DEFAULT_MAX_ENUMERATE) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("order", "total_power", "feasible"))
    for rep in rank_orders(sc.config, max_enumerate):
        writer.writerow((str(rep.order), repr(rep.total_power), str(rep.feasible).lower()))
    return buf.getvalue()


def outage_csv(sc: Scenario, analytic: bool, montecarlo: bool, trials=None, grid=None, workers=None) -> str:
    alloc, _ = scenario_allocation(sc)
    reports = sweep(
        sc.config,
        alloc,
        sc.channel,
        grid if grid is not None else sc.xi_grid_db,
        trials=trials if trials is not None else sc.trials,
        seed=sc.seed,
        analytic=analytic,
        montecarlo=montecarlo,
        workers=workers,
    )
    return write_csv(reports)


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _fail(exc: Exception, code: int) -> int:
    payload = {"error": type(exc).__name__, "message": str(exc)}
    sys.stderr.write(json.dumps(payload) + "\n")
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noma-pa",
        description="NOMA power allocation with target rates: allocations, decoding orders, outage.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("allocate", help="closed-form allocation and diagnostics as JSON")
    p.add_argument("scenario")
    p.add_argument("--strategy", choices=STRATEGIES)
    p.add_argument("--out")

    p = sub.add_parser("orders", help="rank every SIC decoding order by total power (CSV)")
    p.add_argument("scenario")
    p.add_argument("--max-enumerate", type=int, default=DEFAULT_MAX_ENUMERATE)
    p.add_argument("--out")

    p = sub.add_parser("outage", help="outage probabilities over an SNR sweep (CSV)")
    p.add_argument("scenario")
    p.add_argument("--analytic", action="store_true")
    p.add_argument("--montecarlo", action="store_true")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--xi-db", help="SNR grid in dB, 'start:stop:step' or a single value")
    p.add_argument("--strategy", choices=STRATEGIES)
    p.add_argument("--out")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        sc = load_scenario(args.scenario, seed=getattr(args, "seed", None))
        if getattr(args, "strategy", None):
            sc = with_strategy(sc, args.strategy)
        if args.command == "allocate":
            _emit(json.dumps(allocate_report(sc), indent=2) + "\n", args.out)
        elif args.command == "orders":
            _emit(orders_csv(sc, args.max_enumerate), args.out)
        else:
            if not (args.analytic or args.montecarlo):
                raise NomaError("outage needs --analytic and/or --montecarlo")
            if args.trials is not None and args.trials < 1:
                raise NomaError("--trials must be positive")
            grid = parse_grid(args.xi_db) if args.xi_db else None
            _emit(outage_csv(sc, args.analytic, args.montecarlo, args.trials, grid), args.out)
    except TooManyPermutations as exc:
        return _fail(exc, EXIT_GUARD)
    except ValueError as exc:
        return _fail(exc, EXIT_INPUT)
    return 0


if __name__ == "__main__":
    sys.exit(main())
