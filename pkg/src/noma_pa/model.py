"""Domain types shared by every other module.

User and stage indices exposed through function arguments are 1-based, the
way they appear in the SIC decoding order (user 1 is decoded first). Arrays
returned by the library are plain 0-based numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

FRACTION_SUM_TOL = 1e-9
BUDGET_TOL = 1e-12
TIE_TOL = 1e-12


class NomaError(ValueError):
    """Base class for input and contract violations."""


class EmptySystem(NomaError):
    pass


class NonPositiveRate(NomaError):
    pass


class NonPositiveFraction(NomaError):
    pass


class FractionSumMismatch(NomaError):
    def __init__(self, actual: float):
        self.actual = actual
        super().__init__(f"OMA time fractions sum to {actual!r}, expected 1")


class DimensionMismatch(NomaError):
    pass


class IndexOutOfRange(NomaError):
    pass


class PowerBudgetExceeded(NomaError):
    def __init__(self, total: float):
        self.total = total
        super().__init__(f"power allocation sums to {total!r} > 1")


class InvalidPermutation(NomaError):
    pass


class TooManyPermutations(NomaError):
    def __init__(self, count: int, limit: int):
        self.count = count
        self.limit = limit
        super().__init__(f"{count} decoding orders exceed the enumeration limit {limit}")


def _as_tuple(values) -> tuple[float, ...]:
    return tuple(float(v) for v in np.atleast_1d(np.asarray(values, dtype=float)))


@dataclass(frozen=True)
class SystemConfig:
    """Target rates, OMA time fractions and the linear transmit SNR."""

    target_rates: tuple[float, ...]
    oma_fractions: tuple[float, ...]
    transmit_snr: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "target_rates", _as_tuple(self.target_rates))
        object.__setattr__(self, "oma_fractions", _as_tuple(self.oma_fractions))
        object.__setattr__(self, "transmit_snr", float(self.transmit_snr))

    @property
    def num_users(self) -> int:
        return len(self.target_rates)

    @property
    def rates(self) -> np.ndarray:
        return np.array(self.target_rates)

    @property
    def fractions(self) -> np.ndarray:
        return np.array(self.oma_fractions)

    @property
    def normalized_rates(self) -> np.ndarray:
        """r_n = R_n / tau_n, the quantity that fixes the SIC order."""
        return self.rates / self.fractions

    def with_snr(self, transmit_snr: float) -> "SystemConfig":
        return SystemConfig(self.target_rates, self.oma_fractions, transmit_snr)

    def with_snr_db(self, snr_db: float) -> "SystemConfig":
        return self.with_snr(db_to_linear(snr_db))


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


def validate_config(raw: SystemConfig) -> SystemConfig:
    """Check every SystemConfig invariant except the canonical ordering."""
    if raw.num_users == 0:
        raise EmptySystem("a system needs at least one user")
    if len(raw.oma_fractions) != raw.num_users:
        raise DimensionMismatch(
            f"{raw.num_users} target rates but {len(raw.oma_fractions)} OMA fractions"
        )
    rates, fractions = raw.rates, raw.fractions
    if not np.all(np.isfinite(rates)) or np.any(rates <= 0):
        raise NonPositiveRate(f"target rates must be positive, got {raw.target_rates}")
    if not np.all(np.isfinite(fractions)) or np.any(fractions <= 0):
        raise NonPositiveFraction(f"OMA fractions must be positive, got {raw.oma_fractions}")
    total = math.fsum(raw.oma_fractions)
    if abs(total - 1.0) > FRACTION_SUM_TOL:
        raise FractionSumMismatch(total)
    if not (math.isfinite(raw.transmit_snr) and raw.transmit_snr > 0):
        raise NomaError(f"transmit SNR must be positive, got {raw.transmit_snr}")
    return raw


def make_config(target_rates, oma_fractions, transmit_snr: float = 1.0) -> SystemConfig:
    return validate_config(SystemConfig(target_rates, oma_fractions, transmit_snr))


@dataclass(frozen=True)
class DecodingOrder:
    """A permutation of the 1-based user indices ``1..K``."""

    permutation: tuple[int, ...]

    def __post_init__(self):
        perm = tuple(int(p) for p in self.permutation)
        if sorted(perm) != list(range(1, len(perm) + 1)):
            raise InvalidPermutation(f"{perm} is not a permutation of 1..{len(perm)}")
        object.__setattr__(self, "permutation", perm)

    def __len__(self) -> int:
        return len(self.permutation)

    def __iter__(self):
        return iter(self.permutation)

    @property
    def indices(self) -> np.ndarray:
        """0-based positions, convenient for fancy indexing."""
        return np.array(self.permutation, dtype=np.intp) - 1

    @classmethod
    def identity(cls, num_users: int) -> "DecodingOrder":
        return cls(tuple(range(1, num_users + 1)))

    def is_identity(self) -> bool:
        return self.permutation == tuple(range(1, len(self.permutation) + 1))

    def swapped(self, stage: int) -> "DecodingOrder":
        """Return the order with stages ``stage`` and ``stage + 1`` exchanged."""
        if not 1 <= stage <= len(self) - 1:
            raise IndexOutOfRange(f"stage {stage} outside 1..{len(self) - 1}")
        perm = list(self.permutation)
        perm[stage - 1], perm[stage] = perm[stage], perm[stage - 1]
        return DecodingOrder(tuple(perm))

    def __str__(self) -> str:
        return "-".join(str(p) for p in self.permutation)


def canonicalize(config: SystemConfig) -> tuple[SystemConfig, DecodingOrder]:
    """Sort users by ascending normalized rate.

    Returns the reordered config and the order whose k-th entry is the
    original (1-based) index of the user now at canonical position k. Ties
    within ``TIE_TOL`` relative keep their input order.
    """
    r = config.normalized_rates
    keys = sorted(range(config.num_users), key=lambda i: r[i])
    order = _stabilize_ties(keys, r)
    idx = np.array(order)
    canon = SystemConfig(
        config.rates[idx], config.fractions[idx], config.transmit_snr
    )
    return canon, DecodingOrder(tuple(int(i) + 1 for i in order))


def _stabilize_ties(keys: list[int], r: np.ndarray) -> list[int]:
    # within each run of values equal up to TIE_TOL, restore input order
    out: list[int] = []
    run: list[int] = []
    for i in keys:
        if run and abs(r[i] - r[run[0]]) > TIE_TOL * max(abs(r[run[0]]), 1.0):
            out.extend(sorted(run))
            run = []
        run.append(i)
    out.extend(sorted(run))
    return out


def is_canonical(config: SystemConfig) -> bool:
    _, order = canonicalize(config)
    return order.is_identity()


def interference_from(coefficients: np.ndarray) -> np.ndarray:
    """A_n = sum of the coefficients decoded after user n (A_K = 0)."""
    a = np.asarray(coefficients, dtype=float)
    tail = np.cumsum(a[::-1])[::-1]
    return np.append(tail[1:], 0.0)


@dataclass(frozen=True)
class PowerAllocation:
    """Power coefficients a_n in SIC order plus the implied interference A_n."""

    coefficients: tuple[float, ...]
    interference: tuple[float, ...] = field(default=())

    def __post_init__(self):
        a = _as_tuple(self.coefficients)
        if not a:
            raise EmptySystem("allocation has no users")
        arr = np.array(a)
        if not np.all(np.isfinite(arr)) or np.any(arr < 0) or np.any(arr > 1):
            raise NomaError(f"coefficients must lie in [0, 1], got {a}")
        total = math.fsum(a)
        if total > 1 + BUDGET_TOL:
            raise PowerBudgetExceeded(total)
        object.__setattr__(self, "coefficients", a)
        object.__setattr__(self, "interference", tuple(interference_from(arr)))

    @property
    def num_users(self) -> int:
        return len(self.coefficients)

    @property
    def a(self) -> np.ndarray:
        return np.array(self.coefficients)

    @property
    def A(self) -> np.ndarray:
        return np.array(self.interference)

    @property
    def total(self) -> float:
        return math.fsum(self.coefficients)


@dataclass(frozen=True)
class EpsilonVector:
    """Extra power added on top of the OMA-equivalent allocation."""

    values: tuple[float, ...]

    def __post_init__(self):
        v = _as_tuple(self.values)
        if any(not math.isfinite(x) or x < 0 for x in v):
            raise NomaError(f"epsilon entries must be nonnegative, got {v}")
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.values)

    @classmethod
    def zeros(cls, num_users: int) -> "EpsilonVector":
        return cls((0.0,) * num_users)
