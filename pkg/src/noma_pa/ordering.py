"""Energy cost of OMA-equivalent allocations under arbitrary SIC decoding orders."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .allocation import oma_equivalent_coefficients
from .model import (
    BUDGET_TOL,
    DecodingOrder,
    DimensionMismatch,
    IndexOutOfRange,
    SystemConfig,
    TooManyPermutations,
)

DEFAULT_MAX_ENUMERATE = 40320


@dataclass(frozen=True)
class OrderEnergyReport:
    order: DecodingOrder
    # coefficients[n] belongs to the user decoded at stage n + 1
    coefficients: tuple[float, ...]
    total_power: float

    @property
    def feasible(self) -> bool:
        return self.total_power <= 1 + BUDGET_TOL


def _check_order(config: SystemConfig, order) -> DecodingOrder:
    if not isinstance(order, DecodingOrder):
        order = DecodingOrder(tuple(order))
    if len(order) != config.num_users:
        raise DimensionMismatch(
            f"order has {len(order)} entries, config has {config.num_users} users"
        )
    return order


def allocation_for_order(config: SystemConfig, order) -> OrderEnergyReport:
    """OMA-equivalent allocation when users are decoded in ``order``.

    ``order`` lists canonical user indices by SIC stage. The total is
    reported even when it exceeds 1.
    """
    order = _check_order(config, order)
    idx = order.indices
    coeffs = oma_equivalent_coefficients(config.rates[idx], config.fractions[idx])
    return OrderEnergyReport(order, tuple(coeffs), math.fsum(coeffs))


def rank_orders(
    config: SystemConfig, max_enumerate: int = DEFAULT_MAX_ENUMERATE
) -> list[OrderEnergyReport]:
    """Every decoding order sorted by ascending total power (ties keep lexicographic order)."""
    count = math.factorial(config.num_users)
    if count > max_enumerate:
        raise TooManyPermutations(count, max_enumerate)
    users = range(1, config.num_users + 1)
    reports = [
        allocation_for_order(config, DecodingOrder(p)) for p in itertools.permutations(users)
    ]
    reports.sort(key=lambda r: r.total_power)
    return reports


def adjacent_swap_delta(config: SystemConfig, order, stage: int) -> float:
    """Total power saved by exchanging SIC stages ``stage`` and ``stage + 1``.

    Positive exactly when the user decoded at ``stage`` has the larger
    normalized rate.
    """
    order = _check_order(config, order)
    if not 1 <= stage <= config.num_users - 1:
        raise IndexOutOfRange(f"stage {stage} outside 1..{config.num_users - 1}")
    before = allocation_for_order(config, order).total_power
    after = allocation_for_order(config, order.swapped(stage)).total_power
    return before - after


def bubble_to_canonical(config: SystemConfig, order) -> list[OrderEnergyReport]:
    """Walk from ``order`` to the canonical order by power-saving adjacent swaps.

    Returns the visited orders including start and end.
    """
    order = _check_order(config, order)
    path = [allocation_for_order(config, order)]
    while True:
        for stage in range(1, len(order)):
            # rounding on exact ties must not trigger a swap
            if adjacent_swap_delta(config, order, stage) > 1e-14:
                order = order.swapped(stage)
                path.append(allocation_for_order(config, order))
                break
        else:
            return path


def order_totals(config: SystemConfig, orders) -> np.ndarray:
    return np.array([allocation_for_order(config, o).total_power for o in orders])
