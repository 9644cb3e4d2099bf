"""Power-allocation mathematics for canonical (SIC-ordered) configurations.

Everything here is a pure function of the target rates and OMA time
fractions; none of it depends on channel gains or on the transmit SNR.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import (
    BUDGET_TOL,
    DimensionMismatch,
    EpsilonVector,
    IndexOutOfRange,
    NomaError,
    PowerAllocation,
    PowerBudgetExceeded,
    SystemConfig,
)

LN2 = math.log(2.0)
# relative slack for the non-strict pairwise check; equality is well-behaved
PAIRWISE_RTOL = 1e-12
# headroom within this of zero is treated as exactly zero
HEADROOM_ATOL = 1e-12

STRATEGIES = ("oma-equivalent", "proportional")


def pow2m1(x):
    """2**x - 1 without cancellation for small x; overflows to inf."""
    with np.errstate(over="ignore"):
        return np.expm1(np.asarray(x, dtype=float) * LN2)


def _prefix(rates: np.ndarray) -> np.ndarray:
    # prefix[j] = R_0 + ... + R_{j-1}
    return np.concatenate(([0.0], np.cumsum(rates)))


def _discounted_tail(values: np.ndarray, rates: np.ndarray) -> np.ndarray:
    """t_i = sum_{j>i} values_j * prod_{k=i+1}^{j-1} 2^{R_k} (0-based)."""
    k = len(values)
    pre = _prefix(rates)
    out = np.zeros(k)
    for i in range(k - 1):
        j = np.arange(i + 1, k)
        out[i] = math.fsum(values[j] * np.exp2(pre[j] - pre[i + 1]))
    return out


def oma_margins(rates, fractions) -> np.ndarray:
    """Decoding margin that reproduces OMA outage: (2^R - 1) / (2^{R/tau} - 1)."""
    rates = np.asarray(rates, dtype=float)
    fractions = np.asarray(fractions, dtype=float)
    return pow2m1(rates) / pow2m1(rates / fractions)


def interference_ceiling(rates, n: int) -> float:
    """Largest tolerable interference coefficient when decoding signal ``n``.

    Above ``2 ** -(R_1 + ... + R_n)`` every user that has to decode signal
    ``n`` is in outage regardless of its channel gain.
    """
    rates = np.asarray(rates, dtype=float)
    if not 1 <= n <= len(rates) - 1:
        raise IndexOutOfRange(f"interference stage {n} outside 1..{len(rates) - 1}")
    return float(np.exp2(-math.fsum(rates[:n])))


def decoding_margins(alloc: PowerAllocation, rates) -> np.ndarray:
    """a_n - (2^{R_n} - 1) A_n; nonpositive means certain failure of stage n."""
    return alloc.a - pow2m1(rates) * alloc.A


@dataclass(frozen=True)
class AllocationDiagnostics:
    certain_outage: tuple[bool, ...]
    margins: tuple[float, ...]
    margin_positive: tuple[bool, ...]
    wellbehaved_pairwise: tuple[bool, ...]
    wellbehaved_strict: tuple[bool, ...]

    @property
    def well_behaved(self) -> bool:
        return all(self.margin_positive) and all(self.wellbehaved_pairwise)

    @property
    def any_certain_outage(self) -> bool:
        return any(self.certain_outage)

    @property
    def offending_users(self) -> list[int]:
        """1-based users whose interference exceeds its ceiling."""
        return [i + 1 for i, flag in enumerate(self.certain_outage) if flag]

    def as_dict(self) -> dict:
        return {
            "certain_outage": list(self.certain_outage),
            "offending_users": self.offending_users,
            "margins": list(self.margins),
            "margin_positive": list(self.margin_positive),
            "wellbehaved_pairwise": list(self.wellbehaved_pairwise),
            "wellbehaved_strict": list(self.wellbehaved_strict),
            "well_behaved": self.well_behaved,
        }


def pairwise_ratio(rates) -> np.ndarray:
    """2^{R_{n+1}} (2^{R_n} - 1) / (2^{R_{n+1}} - 1) for n = 1..K-1."""
    rates = np.asarray(rates, dtype=float)
    g = pow2m1(rates)
    return np.exp2(rates[1:]) * g[:-1] / g[1:]


def diagnose(alloc: PowerAllocation, config: SystemConfig) -> AllocationDiagnostics:
    if alloc.num_users != config.num_users:
        raise DimensionMismatch(
            f"allocation has {alloc.num_users} users, config has {config.num_users}"
        )
    rates = config.rates
    a, A = alloc.a, alloc.A
    ceilings = np.exp2(-np.cumsum(rates))
    # A_K = 0 can never exceed anything
    certain = A > ceilings
    certain[-1] = False
    margins = decoding_margins(alloc, rates)
    bound = a[1:] * pairwise_ratio(rates)
    slack = PAIRWISE_RTOL * np.maximum(np.abs(a[:-1]), np.abs(bound))
    return AllocationDiagnostics(
        certain_outage=tuple(bool(x) for x in certain),
        margins=tuple(float(x) for x in margins),
        margin_positive=tuple(bool(x) for x in margins > 0),
        wellbehaved_pairwise=tuple(bool(x) for x in a[:-1] >= bound - slack),
        wellbehaved_strict=tuple(bool(x) for x in a[:-1] > bound),
    )


@dataclass(frozen=True)
class OmaEquivalentAllocation:
    """Minimal allocation giving every user exactly its OMA outage threshold."""

    coefficients: tuple[float, ...]
    interference: tuple[float, ...]
    total: float
    headroom: float

    @property
    def a(self) -> np.ndarray:
        return np.array(self.coefficients)

    @property
    def A(self) -> np.ndarray:
        return np.array(self.interference)

    def as_allocation(self) -> PowerAllocation:
        return PowerAllocation(self.coefficients)


def oma_equivalent_coefficients(rates, fractions) -> np.ndarray:
    """Closed-form OMA-equivalent coefficients for users decoded in the given order."""
    rates = np.asarray(rates, dtype=float)
    fractions = np.asarray(fractions, dtype=float)
    k = len(rates)
    floor = oma_margins(rates, fractions)
    pre = _prefix(rates)
    g = pow2m1(rates)
    coeffs = floor.copy()
    for i in range(k - 1):
        j = np.arange(i + 1, k)
        tail = math.fsum(floor[j] * np.exp2(pre[j] - pre[i]))
        coeffs[i] += g[i] / np.exp2(rates[i]) * tail
    return coeffs


def oma_equivalent(config: SystemConfig) -> OmaEquivalentAllocation:
    rates, fractions = config.rates, config.fractions
    coeffs = oma_equivalent_coefficients(rates, fractions)
    interference = _discounted_tail(oma_margins(rates, fractions), rates)
    total = math.fsum(coeffs)
    headroom = 1.0 - total
    if abs(headroom) <= HEADROOM_ATOL:
        headroom = 0.0
    return OmaEquivalentAllocation(
        coefficients=tuple(coeffs),
        interference=tuple(interference),
        total=total,
        headroom=headroom,
    )


def _eps_array(eps, k: int) -> np.ndarray:
    if not isinstance(eps, EpsilonVector):
        eps = EpsilonVector(eps)
    if len(eps) != k:
        raise DimensionMismatch(f"epsilon has {len(eps)} entries, expected {k}")
    return eps.array


def interference_increment(config: SystemConfig, eps) -> np.ndarray:
    """c_n: interference added on top of A_n^oma by the extra powers of later users."""
    e = _eps_array(eps, config.num_users)
    return _discounted_tail(e, config.rates)


def general_allocation(config: SystemConfig, eps) -> PowerAllocation:
    """OMA-equivalent allocation plus extras ``eps``, compensating earlier users.

    Each earlier user n receives ``(2^{R_n} - 1) c_n`` on top of its own
    extra so that its decoding margin grows by exactly ``eps_n``.
    """
    e = _eps_array(eps, config.num_users)
    base = oma_equivalent_coefficients(config.rates, config.fractions)
    c = _discounted_tail(e, config.rates)
    coeffs = base + e + pow2m1(config.rates) * c
    total = math.fsum(coeffs)
    if total > 1 + BUDGET_TOL:
        raise PowerBudgetExceeded(total)
    return PowerAllocation(tuple(np.minimum(coeffs, 1.0)))


def epsilon_bounds(config: SystemConfig, eps_prefix, n: int) -> tuple[float, float]:
    """The two upper limits on eps_n that keep the strategy well-behaved.

    Returns ``(ordering_bound, budget_bound)``: the first keeps the stage
    ``n - 1`` threshold at or below the stage ``n`` threshold, the second keeps
    the total within the power budget given the extras already spent on
    users ``1..n-1``. Only the first ``n - 1`` entries of ``eps_prefix`` are
    read.
    """
    k = config.num_users
    if not 2 <= n <= k:
        raise IndexOutOfRange(f"user {n} outside 2..{k}")
    prefix = np.asarray(eps_prefix, dtype=float)
    if prefix.size < n - 1:
        raise DimensionMismatch(f"need {n - 1} prefix entries, got {prefix.size}")
    prefix = prefix[: n - 1]
    if np.any(prefix < 0):
        raise NomaError("epsilon prefix entries must be nonnegative")

    rates, fractions = config.rates, config.fractions
    g = pow2m1(rates)
    i = n - 1  # 0-based position of user n
    ordering = (
        prefix[i - 1] * g[i] / g[i - 1]
        + g[i] / pow2m1(rates[i - 1] / fractions[i - 1])
        - g[i] / pow2m1(rates[i] / fractions[i])
    )

    headroom = oma_equivalent(config).headroom
    pre = _prefix(rates)
    m = np.arange(i)
    # prod_{l=m}^{n-1} 2^{-R_l} in 1-based terms
    spent = math.fsum(prefix * np.exp2(-(pre[i] - pre[m])))
    budget = headroom * np.exp2(-pre[i]) - spent
    return float(ordering), float(budget)


def epsilon_upper_bound(config: SystemConfig, eps_prefix, n: int) -> float:
    return min(epsilon_bounds(config, eps_prefix, n))


def proportional_strategy(config: SystemConfig) -> EpsilonVector:
    """Split the headroom so each earlier user gets a geometrically larger share.

    The extras satisfy, with equality, the total-cost recursion
    ``eps_tot[n-1] = eps_tot[n] 2^{R_n} (2^{R_{n-1}} - 1) / (2^{R_n} - 1)``
    where ``eps_tot[n] = eps[n] * prod_{l<n} 2^{R_l}``, and their total cost
    uses the whole headroom.
    """
    rates = config.rates
    headroom = max(oma_equivalent(config).headroom, 0.0)
    if headroom == 0.0:
        return EpsilonVector.zeros(config.num_users)
    pre = _prefix(rates)
    s = pre[-1]
    k = config.num_users
    i = np.arange(k)
    eps = (
        headroom
        * pow2m1(rates)
        / pow2m1(s)
        * np.exp2(-pre[i])
        * np.exp2(s - pre[i + 1])
    )
    return EpsilonVector(tuple(eps))


def total_extra_cost(config: SystemConfig, eps) -> np.ndarray:
    """eps_n * prod_{l<n} 2^{R_l}: total power consumed by user n's extra."""
    e = _eps_array(eps, config.num_users)
    return e * np.exp2(_prefix(config.rates)[:-1])


def strategy_allocation(config: SystemConfig, name: str) -> tuple[PowerAllocation, EpsilonVector]:
    """Allocation and extras for a named strategy."""
    if name == "oma-equivalent":
        eps = EpsilonVector.zeros(config.num_users)
    elif name == "proportional":
        eps = proportional_strategy(config)
    else:
        raise NomaError(f"unknown strategy {name!r}; expected one of {STRATEGIES}")
    return general_allocation(config, eps), eps
