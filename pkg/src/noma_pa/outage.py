"""Outage thresholds, analytic outage probabilities and the Monte Carlo engine.

A user is in outage when its channel gain falls below a threshold; with SIC
every stage m <= n that user n must decode contributes one threshold, and
the user's outage event is the union, i.e. gain below the largest of them.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .allocation import decoding_margins, pow2m1, strategy_allocation
from .channel import gain_cdf, gain_sf, sample_gains
from .model import IndexOutOfRange, NomaError, PowerAllocation, SystemConfig, db_to_linear
from .rng import stream

CHUNK_TRIALS = 1 << 16
DEFAULT_TRIALS = 1_000_000
MODES = ("noma", "oma", "both")


@dataclass(frozen=True)
class OutageThresholds:
    """Channel-gain thresholds seen by one user (1-based ``user``)."""

    user: int
    stage_thresholds: tuple[float, ...]
    effective: float
    certain_outage: bool


def stage_thresholds(config: SystemConfig, alloc: PowerAllocation) -> np.ndarray:
    """T_m for every SIC stage m; +inf when the stage margin is not positive.

    The threshold for decoding signal m does not depend on which user does
    the decoding, so one value per stage covers every user n >= m.
    """
    rates = config.rates
    margins = decoding_margins(alloc, rates)
    with np.errstate(divide="ignore"):
        thr = pow2m1(rates) / (config.transmit_snr * margins)
    thr[margins <= 0] = np.inf
    return thr


def effective_thresholds(config: SystemConfig, alloc: PowerAllocation) -> np.ndarray:
    """Per-user outage threshold: the largest stage threshold up to the user's own."""
    return np.maximum.accumulate(stage_thresholds(config, alloc))


def noma_thresholds(config: SystemConfig, alloc: PowerAllocation) -> list[OutageThresholds]:
    thr = stage_thresholds(config, alloc)
    out = []
    for n in range(1, config.num_users + 1):
        stages = thr[:n]
        out.append(
            OutageThresholds(
                user=n,
                stage_thresholds=tuple(float(x) for x in stages),
                effective=float(stages.max()),
                certain_outage=bool(np.isinf(stages).any()),
            )
        )
    return out


def oma_thresholds(config: SystemConfig) -> np.ndarray:
    return pow2m1(config.normalized_rates) / config.transmit_snr


def oma_threshold(config: SystemConfig, n: int) -> float:
    """(2^{R_n / tau_n} - 1) / xi for 1-based user ``n``."""
    if not 1 <= n <= config.num_users:
        raise IndexOutOfRange(f"user {n} outside 1..{config.num_users}")
    return float(oma_thresholds(config)[n - 1])


def _mode_thresholds(config, alloc, mode):
    if mode == "noma":
        return effective_thresholds(config, alloc)
    if mode == "oma":
        return oma_thresholds(config)
    raise NomaError(f"mode must be 'noma' or 'oma', got {mode!r}")


def analytic_outage(config: SystemConfig, alloc, channel, mode: str = "noma") -> np.ndarray:
    """Per-user outage probability from the channel CDFs."""
    thr = _mode_thresholds(config, alloc, mode)
    probs = np.empty(config.num_users)
    for i, t in enumerate(thr):
        probs[i] = 1.0 if np.isinf(t) else float(gain_cdf(channel, t, i + 1))
    return probs


def analytic_success(config: SystemConfig, alloc, channel, mode: str = "noma") -> np.ndarray:
    """1 - analytic_outage without cancellation, for comparisons deep in the tail."""
    thr = _mode_thresholds(config, alloc, mode)
    probs = np.empty(config.num_users)
    for i, t in enumerate(thr):
        probs[i] = 0.0 if np.isinf(t) else float(gain_sf(channel, t, i + 1))
    return probs


def binomial_se(p, trials: int):
    p = np.asarray(p, dtype=float)
    return np.sqrt(p * (1 - p) / trials)


@dataclass
class OutageReport:
    """Outage probabilities at one transmit SNR; missing parts are ``None``.

    ``stage_empirical[n, m]`` is the fraction of trials in which user n + 1
    fails to decode signal m + 1 (NaN for m > n).
    """

    xi_db: float
    trials: int = 0
    seed: int | None = None
    channel: dict = field(default_factory=dict)
    analytic_noma: np.ndarray | None = None
    analytic_oma: np.ndarray | None = None
    empirical_noma: np.ndarray | None = None
    empirical_oma: np.ndarray | None = None
    stage_empirical: np.ndarray | None = None

    @property
    def xi(self) -> float:
        return db_to_linear(self.xi_db)


def resolve_workers(workers: int | None = None) -> int:
    """Worker count from the argument or ``NOMA_PA_THREADS`` (0 means all cores)."""
    if workers is None:
        raw = os.environ.get("NOMA_PA_THREADS", "0")
        try:
            workers = int(raw)
        except ValueError:
            raise NomaError(f"NOMA_PA_THREADS must be an integer, got {raw!r}") from None
    if workers < 0:
        raise NomaError("worker count must be nonnegative")
    return workers or (os.cpu_count() or 1)


def _threshold_slots(points, num_users: int) -> np.ndarray:
    """Stack thresholds into (points, users, 2 + users) slots.

    Slot 0 is the effective NOMA threshold, slot 1 the OMA one, slot 2 + m the
    stage-m threshold; stages after the user's own are -inf so never count.
    """
    k = num_users
    slots = np.full((len(points), k, 2 + k), -np.inf)
    for x, (cfg, alloc) in enumerate(points):
        slots[x, :, 1] = oma_thresholds(cfg)
        if alloc is None:
            continue
        thr = stage_thresholds(cfg, alloc)
        slots[x, :, 0] = np.maximum.accumulate(thr)
        for n in range(k):
            slots[x, n, 2 : 3 + n] = thr[: n + 1]
    return slots


def _chunk_counts(channel, slots, seed, chunk, trials):
    n = min(CHUNK_TRIALS, trials - chunk * CHUNK_TRIALS)
    gains = sample_gains(stream(seed, chunk), channel, n)
    return kernels.count_below(np.ascontiguousarray(gains), slots)


def simulate_counts(channel, slots: np.ndarray, trials: int, seed: int, workers: int | None = None):
    """Sum of per-chunk outage counts; independent of the worker count."""
    if trials < 1:
        raise NomaError("need at least one trial")
    slots = np.ascontiguousarray(slots, dtype=np.float64)
    chunks = range(math.ceil(trials / CHUNK_TRIALS))
    nworkers = min(resolve_workers(workers), len(chunks))
    total = np.zeros(slots.shape, dtype=np.int64)
    if nworkers <= 1:
        for c in chunks:
            total += _chunk_counts(channel, slots, seed, c, trials)
    else:
        with ThreadPoolExecutor(max_workers=nworkers) as pool:
            for counts in pool.map(lambda c: _chunk_counts(channel, slots, seed, c, trials), chunks):
                total += counts
    return total


def capacity_outage(config: SystemConfig, alloc: PowerAllocation, gains: np.ndarray):
    """Outage indicators recomputed from SIC stage capacities.

    Returns ``(user_outage, stage_failure)`` with shapes ``(trials, K)`` and
    ``(trials, K, K)``; ``stage_failure[t, n, m]`` is False for m > n.
    """
    a, A, rates = alloc.a, alloc.A, config.rates
    xi = config.transmit_snr
    g = np.asarray(gains)[:, :, None]  # user n's gain decoding stage m
    with np.errstate(divide="ignore", invalid="ignore"):
        cap = np.log2(1 + a[None, None, :] * xi * g / (1 + xi * g * A[None, None, :]))
    fail = cap < rates[None, None, :]
    k = config.num_users
    fail &= np.tril(np.ones((k, k), dtype=bool))[None]
    return fail.any(axis=2), fail


def _check_against_capacities(config, alloc, channel, seed, trials):
    n = min(trials, 10_000, CHUNK_TRIALS)
    gains = sample_gains(stream(seed, 0), channel, n)
    user_cap, stage_cap = capacity_outage(config, alloc, gains)
    thr = stage_thresholds(config, alloc)
    stage_thr = gains[:, :, None] < thr[None, None, :]
    stage_thr &= np.tril(np.ones((config.num_users,) * 2, dtype=bool))[None]
    user_thr = gains < np.maximum.accumulate(thr)[None, :]
    if not (np.array_equal(user_cap, user_thr) and np.array_equal(stage_cap, stage_thr)):
        raise AssertionError("threshold outage disagrees with capacity outage")


def _report_from_counts(counts, trials, num_users, xi_db, seed, channel, mode):
    k = num_users
    rep = OutageReport(xi_db=xi_db, trials=trials, seed=seed, channel=channel.describe())
    frac = counts / trials
    if mode in ("noma", "both"):
        rep.empirical_noma = frac[:, 0]
        stage = frac[:, 2:].copy()
        stage[np.triu(np.ones((k, k), dtype=bool), 1)] = np.nan
        rep.stage_empirical = stage
    if mode in ("oma", "both"):
        rep.empirical_oma = frac[:, 1]
    return rep


def montecarlo_outage(
    config: SystemConfig,
    alloc: PowerAllocation | None,
    channel,
    trials: int = DEFAULT_TRIALS,
    seed: int = 0,
    mode: str = "both",
    workers: int | None = None,
    debug: bool = False,
) -> OutageReport:
    """Empirical outage at the config's transmit SNR.

    With ``debug=True`` the threshold comparison is checked against the
    SIC capacities on the first 10^4 trials.
    """
    if mode not in MODES:
        raise NomaError(f"mode must be one of {MODES}, got {mode!r}")
    if alloc is None and mode != "oma":
        raise NomaError("NOMA outage needs an allocation")
    if debug and alloc is not None:
        _check_against_capacities(config, alloc, channel, seed, trials)
    slots = _threshold_slots([(config, alloc)], config.num_users)
    counts = simulate_counts(channel, slots, trials, seed, workers)
    xi_db = 10 * math.log10(config.transmit_snr)
    return _report_from_counts(counts[0], trials, config.num_users, xi_db, seed, channel, mode)


def parse_grid(spec) -> list[float]:
    """``"start:stop:step"`` in dB, stop included when it lies on the grid."""
    if isinstance(spec, (int, float)):
        return [float(spec)]
    if isinstance(spec, (list, tuple)):
        return [float(v) for v in spec]
    parts = [p.strip() for p in str(spec).split(":")]
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise NomaError(f"bad SNR grid {spec!r}") from None
    if len(values) == 1:
        return values
    if len(values) != 3:
        raise NomaError(f"SNR grid must be 'start:stop:step', got {spec!r}")
    start, stop, step = values
    if step <= 0 or stop < start:
        raise NomaError(f"SNR grid {spec!r} is empty")
    count = math.floor((stop - start) / step + 1e-9) + 1
    return [round(start + i * step, 12) for i in range(count)]


def _resolve_alloc(config, alloc_spec):
    if isinstance(alloc_spec, str):
        return strategy_allocation(config, alloc_spec)[0]
    return alloc_spec


def sweep(
    config: SystemConfig,
    alloc_spec,
    channel,
    xi_grid_db,
    trials: int = DEFAULT_TRIALS,
    seed: int = 0,
    analytic: bool = True,
    montecarlo: bool = True,
    workers: int | None = None,
) -> list[OutageReport]:
    """Outage reports over a transmit-SNR grid.

    ``alloc_spec`` is a strategy name, a ``PowerAllocation`` or a callable
    ``config -> PowerAllocation``; callables are re-evaluated at every grid
    point. Monte Carlo uses the same channel draws at every point.
    """
    grid = parse_grid(xi_grid_db) if isinstance(xi_grid_db, str) else [float(x) for x in xi_grid_db]
    if not grid:
        raise NomaError("SNR grid is empty")
    if not (analytic or montecarlo):
        raise NomaError("nothing to compute: enable analytic and/or montecarlo")
    per_point = callable(alloc_spec)
    fixed = None if per_point else _resolve_alloc(config, alloc_spec)
    points = []
    for xi_db in grid:
        cfg = config.with_snr_db(xi_db)
        points.append((cfg, alloc_spec(cfg) if per_point else fixed))

    if montecarlo:
        counts = simulate_counts(channel, _threshold_slots(points, config.num_users), trials, seed, workers)
    reports = []
    for x, (xi_db, (cfg, alloc)) in enumerate(zip(grid, points)):
        mode = "both" if alloc is not None else "oma"
        if montecarlo:
            rep = _report_from_counts(counts[x], trials, config.num_users, xi_db, seed, channel, mode)
        else:
            rep = OutageReport(xi_db=xi_db, channel=channel.describe())
        if analytic:
            if alloc is not None:
                rep.analytic_noma = analytic_outage(cfg, alloc, channel, "noma")
            rep.analytic_oma = analytic_outage(cfg, alloc, channel, "oma")
        reports.append(rep)
    return reports


CSV_COLUMNS = ("xi_db", "user", "metric", "value", "trials", "seed")


def _fmt(value: float) -> str:
    return repr(float(value))


def report_rows(reports: list[OutageReport]):
    """CSV rows ordered by (xi, user, metric)."""
    rows = []
    for rep in sorted(reports, key=lambda r: r.xi_db):
        k = next(
            len(v)
            for v in (rep.analytic_noma, rep.analytic_oma, rep.empirical_noma, rep.empirical_oma)
            if v is not None
        )
        mc = ("", "") if rep.seed is None else (str(rep.trials), str(rep.seed))
        for n in range(k):
            base = [_fmt(rep.xi_db), str(n + 1)]
            if rep.analytic_noma is not None:
                rows.append(base + ["noma_analytic", _fmt(rep.analytic_noma[n]), "", ""])
            if rep.analytic_oma is not None:
                rows.append(base + ["oma_analytic", _fmt(rep.analytic_oma[n]), "", ""])
            if rep.empirical_noma is not None:
                rows.append(base + ["noma_mc", _fmt(rep.empirical_noma[n]), *mc])
            if rep.empirical_oma is not None:
                rows.append(base + ["oma_mc", _fmt(rep.empirical_oma[n]), *mc])
            if rep.stage_empirical is not None:
                for m in range(n + 1):
                    rows.append(base + [f"stage_mc:{m + 1}", _fmt(rep.stage_empirical[n, m]), *mc])
    return rows


def write_csv(reports: list[OutageReport], out=None) -> str:
    """Write the sweep CSV to ``out`` (a text stream) and return it as a string."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    writer.writerows(report_rows(reports))
    text = buf.getvalue()
    if out is not None:
        out.write(text)
    return text
