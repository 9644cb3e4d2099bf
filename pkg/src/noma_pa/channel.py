"""Fading-channel models: gain samplers for Monte Carlo and analytic CDFs.

Model 1 orders K i.i.d. unit-mean exponential gains, so user n sees the
n-th smallest. Model 2 gives user n an N x M Rayleigh MIMO channel with
per-entry power beta_n, a common unit-norm precoder and matched-filter
detection, so its gain ||H_n p||^2 is Erlang(N, beta_n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc, gammaincc

from . import kernels
from .model import DimensionMismatch, NomaError
from .rng import scenario_stream

PRECODER_NORM_TOL = 1e-12


@dataclass(frozen=True)
class ChannelModel1:
    num_users: int

    def describe(self) -> dict:
        return {"model": 1}


@dataclass(frozen=True)
class ChannelModel2:
    tx_antennas: int
    rx_antennas: int
    betas: tuple[float, ...]
    precoder: tuple[complex, ...]

    def __post_init__(self):
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        object.__setattr__(self, "precoder", tuple(complex(p) for p in self.precoder))
        if self.tx_antennas < 1 or self.rx_antennas < 1:
            raise NomaError("antenna counts must be positive")
        if any(not b > 0 for b in self.betas):
            raise NomaError(f"channel scales must be positive, got {self.betas}")
        if len(self.precoder) != self.tx_antennas:
            raise DimensionMismatch(
                f"precoder has {len(self.precoder)} taps for {self.tx_antennas} antennas"
            )
        norm = math.sqrt(sum(abs(p) ** 2 for p in self.precoder))
        if abs(norm - 1.0) > PRECODER_NORM_TOL:
            raise NomaError(f"precoder norm is {norm}, expected 1")

    @property
    def num_users(self) -> int:
        return len(self.betas)

    @classmethod
    def with_random_precoder(cls, tx_antennas, rx_antennas, betas, seed: int) -> "ChannelModel2":
        p = isotropic_precoder(scenario_stream(seed), tx_antennas)
        return cls(tx_antennas, rx_antennas, tuple(betas), tuple(p))

    def permuted(self, indices) -> "ChannelModel2":
        """Reorder the per-user scales (0-based ``indices``)."""
        betas = tuple(self.betas[i] for i in indices)
        return ChannelModel2(self.tx_antennas, self.rx_antennas, betas, self.precoder)

    def describe(self) -> dict:
        return {
            "model": 2,
            "betas": list(self.betas),
            "tx_antennas": self.tx_antennas,
            "rx_antennas": self.rx_antennas,
            "precoder": [[p.real, p.imag] for p in self.precoder],
        }


def isotropic_precoder(rng: np.random.Generator, tx_antennas: int) -> np.ndarray:
    """Unit vector uniformly distributed on the complex sphere."""
    z = rng.standard_normal(tx_antennas) + 1j * rng.standard_normal(tx_antennas)
    return z / np.linalg.norm(z)


def sample_gains_model1(rng: np.random.Generator, num_users: int, trials: int | None = None):
    """Ascending gains; shape ``(num_users,)`` or ``(trials, num_users)``."""
    if num_users < 1:
        raise NomaError("need at least one user")
    shape = (num_users,) if trials is None else (trials, num_users)
    return np.sort(rng.standard_exponential(shape), axis=-1)


def sample_gains_model2(rng: np.random.Generator, model: ChannelModel2, trials: int | None = None):
    """||H_n p||^2 per user from explicit complex Gaussian channel matrices."""
    c = 1 if trials is None else trials
    shape = (c, model.num_users, model.rx_antennas, model.tx_antennas)
    scale = np.sqrt(np.asarray(model.betas) / 2.0)[None, :, None, None]
    hr = np.ascontiguousarray(rng.standard_normal(shape) * scale)
    hi = np.ascontiguousarray(rng.standard_normal(shape) * scale)
    p = np.asarray(model.precoder)
    gains = kernels.model2_gains(hr, hi, np.ascontiguousarray(p.real), np.ascontiguousarray(p.imag))
    return gains[0] if trials is None else gains


def sample_gains(rng: np.random.Generator, channel, trials: int):
    if isinstance(channel, ChannelModel1):
        return sample_gains_model1(rng, channel.num_users, trials)
    if isinstance(channel, ChannelModel2):
        return sample_gains_model2(rng, channel, trials)
    raise NomaError(f"unsupported channel {channel!r}")


def cdf_model1(t, n: int, num_users: int):
    """CDF of the n-th smallest of ``num_users`` unit exponentials.

    Sum over j >= n of C(K, j) p^j (1 - p)^(K - j) with p = 1 - exp(-t).
    Above one half the complement of the survival sum is used instead, so
    values near 1 round consistently.
    """
    if not 1 <= n <= num_users:
        raise NomaError(f"order index {n} outside 1..{num_users}")
    t = np.asarray(t, dtype=float)
    p = -np.expm1(-t)
    q = np.exp(-t)
    total = np.zeros_like(p)
    for j in range(n, num_users + 1):
        total = total + math.comb(num_users, j) * p**j * q ** (num_users - j)
    return np.where(total > 0.5, 1.0 - sf_model1(t, n, num_users), total)


def cdf_model2(t, shape: int, scale: float):
    """Erlang CDF with integer shape and scale (mean shape * scale)."""
    if shape < 1 or scale <= 0:
        raise NomaError("Erlang needs shape >= 1 and scale > 0")
    t = np.asarray(t, dtype=float)
    return gammainc(shape, t / scale)


def sf_model1(t, n: int, num_users: int):
    """1 - cdf_model1, summed directly so tiny tails keep full precision."""
    if not 1 <= n <= num_users:
        raise NomaError(f"order index {n} outside 1..{num_users}")
    t = np.asarray(t, dtype=float)
    p = -np.expm1(-t)
    q = np.exp(-t)
    total = np.zeros_like(p)
    for j in range(n):
        total = total + math.comb(num_users, j) * p**j * q ** (num_users - j)
    return np.minimum(total, 1.0)


def sf_model2(t, shape: int, scale: float):
    if shape < 1 or scale <= 0:
        raise NomaError("Erlang needs shape >= 1 and scale > 0")
    return gammaincc(shape, np.asarray(t, dtype=float) / scale)


def gain_sf(channel, t, n: int):
    """Probability that user ``n``'s gain is at least ``t``."""
    if isinstance(channel, ChannelModel1):
        return sf_model1(t, n, channel.num_users)
    if isinstance(channel, ChannelModel2):
        return sf_model2(t, channel.rx_antennas, channel.betas[n - 1])
    raise NomaError(f"unsupported channel {channel!r}")


def gain_cdf(channel, t, n: int):
    """CDF of user ``n``'s (1-based, canonical) channel gain at ``t``."""
    if isinstance(channel, ChannelModel1):
        return cdf_model1(t, n, channel.num_users)
    if isinstance(channel, ChannelModel2):
        return cdf_model2(t, channel.rx_antennas, channel.betas[n - 1])
    raise NomaError(f"unsupported channel {channel!r}")


def channel_from_dict(spec: dict, num_users: int, seed: int):
    """Build a channel from the scenario's ``channel`` section.

    Scales are taken in input user order; callers reorder them alongside
    the canonical user order.
    """
    model = spec.get("model", 1)
    if model == 1:
        return ChannelModel1(num_users)
    if model == 2:
        betas = spec.get("betas")
        if betas is None or len(betas) != num_users:
            raise DimensionMismatch(f"model 2 needs {num_users} betas")
        m = int(spec.get("tx_antennas", 2))
        n = int(spec.get("rx_antennas", 3))
        if "precoder" in spec:
            p = [complex(re, im) for re, im in spec["precoder"]]
            return ChannelModel2(m, n, tuple(betas), tuple(p))
        return ChannelModel2.with_random_precoder(m, n, betas, seed)
    raise NomaError(f"unknown channel model {model!r}")
