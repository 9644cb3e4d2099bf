"""Pure numpy versions of the Monte Carlo inner loops.

Floating-point operations are accumulated in the same order as the compiled
kernels so both backends produce the same gains.
"""

import numpy as np


def model2_gains(hr, hi, pr, pi):
    hr = np.asarray(hr, dtype=np.float64)
    hi = np.asarray(hi, dtype=np.float64)
    c, k, nrx, ntx = hr.shape
    g = np.zeros((c, k))
    for j in range(nrx):
        re = np.zeros((c, k))
        im = np.zeros((c, k))
        for m in range(ntx):
            re = re + (hr[:, :, j, m] * pr[m] - hi[:, :, j, m] * pi[m])
            im = im + (hr[:, :, j, m] * pi[m] + hi[:, :, j, m] * pr[m])
        g = g + (re * re + im * im)
    return g


def count_below(gains, thresholds):
    gains = np.asarray(gains, dtype=np.float64)
    thresholds = np.asarray(thresholds, dtype=np.float64)
    if thresholds.shape[1] != gains.shape[1]:
        raise ValueError("thresholds and gains disagree on the number of users")
    counts = np.empty(thresholds.shape, dtype=np.int64)
    for x in range(thresholds.shape[0]):
        counts[x] = np.count_nonzero(gains[:, :, None] < thresholds[x][None], axis=0)
    return counts
