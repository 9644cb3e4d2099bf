"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py --trials 1000000

Both backends see the same channel draws and thresholds; the script checks
that they agree exactly before reporting timings.
"""

import argparse
import time

import numpy as np

from noma_pa import kernels
from noma_pa.allocation import strategy_allocation
from noma_pa.channel import ChannelModel2
from noma_pa.model import make_config
from noma_pa.outage import CHUNK_TRIALS, _threshold_slots, parse_grid
from noma_pa.rng import stream

RATES = (0.5, 1.2, 0.9, 1.3, 1.1)
FRACTIONS = (0.15, 0.3, 0.2, 0.2, 0.15)
BETAS = (0.5, 1.4, 0.8, 1.7, 1.1)


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - start)
    return min(times), result


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--trials", type=int, default=1_000_000)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--grid", default="0:40:2")
    args = parser.parse_args(argv)

    try:
        compiled = kernels.get_backend("cython")
    except ImportError:
        print("compiled kernels are not built; nothing to compare")
        return 1
    fallback = kernels.get_backend("python")

    cfg = make_config(RATES, FRACTIONS)
    channel = ChannelModel2.with_random_precoder(2, 3, BETAS, 0)
    points = []
    for xi_db in parse_grid(args.grid):
        c = cfg.with_snr_db(xi_db)
        points.append((c, strategy_allocation(c, "proportional")[0]))
    slots = np.ascontiguousarray(_threshold_slots(points, cfg.num_users))

    # draw the raw channel coefficients once, chunk by chunk as the simulator does
    chunks = []
    scale = np.sqrt(np.asarray(BETAS) / 2)[None, :, None, None]
    p = np.asarray(channel.precoder)
    for c in range(-(-args.trials // CHUNK_TRIALS)):
        n = min(CHUNK_TRIALS, args.trials - c * CHUNK_TRIALS)
        rng = stream(0, c)
        shape = (n, 5, channel.rx_antennas, channel.tx_antennas)
        hr = np.ascontiguousarray(rng.standard_normal(shape) * scale)
        hi = np.ascontiguousarray(rng.standard_normal(shape) * scale)
        chunks.append((hr, hi))
    pr, pi = np.ascontiguousarray(p.real), np.ascontiguousarray(p.imag)

    print(f"trials={args.trials} grid points={len(points)} slots={slots.shape}")
    print(f"{'kernel':<14}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}")
    gains = {}
    for name, mod in (("python", fallback), ("cython", compiled)):
        t, g = best_of(lambda: [mod.model2_gains(hr, hi, pr, pi) for hr, hi in chunks], args.repeat)
        gains[name] = (t, g)
    for a, b in zip(gains["python"][1], gains["cython"][1]):
        if not np.array_equal(a, b):
            raise SystemExit("backends disagree on model2_gains")
    print(f"{'model2_gains':<14}{gains['python'][0]:>12.3f}{gains['cython'][0]:>12.3f}"
          f"{gains['python'][0] / gains['cython'][0]:>9.1f}x")

    counts = {}
    for name, mod in (("python", fallback), ("cython", compiled)):
        t, c = best_of(lambda: sum(mod.count_below(g, slots) for g in gains["cython"][1]), args.repeat)
        counts[name] = (t, c)
    if not np.array_equal(counts["python"][1], counts["cython"][1]):
        raise SystemExit("backends disagree on count_below")
    print(f"{'count_below':<14}{counts['python'][0]:>12.3f}{counts['cython'][0]:>12.3f}"
          f"{counts['python'][0] / counts['cython'][0]:>9.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
