import numpy as np
import pytest

from noma_pa import kernels
from noma_pa.channel import ChannelModel2, sample_gains_model2
from noma_pa.rng import stream

backends = [kernels.get_backend("python")]
try:
    backends.append(kernels.get_backend("cython"))
except ImportError:
    pass


def test_backend_name():
    assert kernels.BACKEND in ("cython", "python")


@pytest.mark.parametrize("mod", backends, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def test_model2_gains_small_case(mod):
    # H = [[1+1j, 2], [0, 1j]], p = (1, 1j) / sqrt(2): H p = (1 + 3j, -1) / sqrt(2)
    hr = np.array([[[[1.0, 2.0], [0.0, 0.0]]]])
    hi = np.array([[[[1.0, 0.0], [0.0, 1.0]]]])
    s = 1 / np.sqrt(2)
    g = mod.model2_gains(hr, hi, np.array([s, 0.0]), np.array([0.0, s]))
    assert g.shape == (1, 1)
    assert g[0, 0] == pytest.approx(5.5, rel=1e-15)


@pytest.mark.parametrize("mod", backends, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def test_count_below(mod):
    gains = np.array([[0.1, 1.0], [0.5, 2.0], [0.9, 3.0]])
    thr = np.array([[[0.5, np.inf, -np.inf], [2.0, 3.0, 0.0]]])
    counts = mod.count_below(gains, thr)
    np.testing.assert_array_equal(counts, [[[1, 3, 0], [1, 2, 0]]])
    assert counts.dtype == np.int64


@pytest.mark.skipif(len(backends) < 2, reason="compiled kernels not built")
def test_backends_agree_exactly():
    py, cy = backends
    rng = stream(3, 0)
    hr = rng.standard_normal((500, 4, 3, 2))
    hi = rng.standard_normal((500, 4, 3, 2))
    pr, pi = rng.standard_normal(2), rng.standard_normal(2)
    ga = py.model2_gains(hr, hi, pr, pi)
    gb = cy.model2_gains(hr, hi, pr, pi)
    np.testing.assert_array_equal(ga, gb)
    thr = rng.exponential(size=(6, 4, 5))
    np.testing.assert_array_equal(py.count_below(ga, thr), cy.count_below(gb, thr))


def test_dispatch_uses_selected_backend():
    ch = ChannelModel2.with_random_precoder(2, 3, (1.0, 2.0), 0)
    g = sample_gains_model2(stream(0, 0), ch, 10)
    assert g.shape == (10, 2)


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")
