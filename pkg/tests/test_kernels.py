"""Kernel backends against scipy references and against each other."""

import numpy as np
import pytest
from scipy import special, stats

from adhocsim import kernels
from adhocsim.kernels import numpy_impl

BACKENDS = [numpy_impl]
if kernels.BACKEND == "numba":
    from adhocsim.kernels import numba_impl

    BACKENDS.append(numba_impl)


@pytest.fixture(params=BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
def impl(request):
    return request.param


def test_j0_matches_scipy(impl):
    x = np.concatenate([np.linspace(0.0, 30.0, 3001), np.geomspace(30.0, 2000.0, 400)])
    assert np.max(np.abs(impl.j0(x) - special.j0(x))) < 5e-15


def test_i0e_matches_scipy(impl):
    x = np.concatenate([np.linspace(0.0, 60.0, 2401), np.geomspace(60.0, 1e6, 300)])
    rel = np.abs(impl.i0e(x) - special.i0e(x)) / special.i0e(x)
    assert rel.max() < 1e-12


def test_gaussian_q_matches_scipy(impl):
    x = np.linspace(0.0, 12.0, 500)
    ref = 0.5 * special.erfc(x / np.sqrt(2.0))
    assert np.allclose(impl.gaussian_q(x), ref, rtol=1e-13, atol=0.0)


def test_marcum_q1_matches_noncentral_chi2(impl):
    rng = np.random.default_rng(1)
    a = rng.uniform(0.0, 25.0, 400)
    b = rng.uniform(0.0, 35.0, 400)
    ref = stats.ncx2.sf(b**2, 2, a**2)
    assert np.max(np.abs(impl.marcum_q1(a, b) - ref)) < 1e-12


def test_marcum_q1_edges(impl):
    assert impl.marcum_q1(0.0, 2.0)[0] == pytest.approx(np.exp(-2.0), rel=1e-12)
    assert impl.marcum_q1(3.0, 0.0)[0] == pytest.approx(1.0, abs=1e-12)
    assert impl.marcum_q1(0.0, 0.0)[0] == pytest.approx(1.0, abs=1e-12)
    # far tail underflows to zero rather than failing
    assert impl.marcum_q1(1.0, 60.0)[0] == 0.0


def test_ber_dqpsk_range_and_zero(impl):
    g = np.linspace(0.0, 60.0, 200)
    pb = impl.ber_dqpsk(g)
    assert pb[0] == pytest.approx(0.5, abs=1e-12)
    assert np.all(pb <= 0.5) and np.all(pb >= 0.0)
    assert np.all(np.diff(pb) <= 1e-15)


def test_packet_success_log1p_precision(impl):
    # no catastrophic cancellation for tiny error probabilities
    pb = np.array([1e-13])
    ps = impl.packet_success(pb, 2384.0)[0]
    assert ps < 1.0
    assert (1.0 - ps) == pytest.approx(2384.0 * 1e-13, rel=1e-3)
    assert impl.packet_success(np.array([0.0]), 2384.0)[0] == 1.0
    assert impl.packet_success(np.array([1.0]), 1.0)[0] == 0.0


def test_fading_sample_deterministic(impl):
    rng = np.random.default_rng(7)
    m = 16
    fi = rng.uniform(0, 500, m)
    pi_ = rng.uniform(-np.pi, np.pi, m)
    fq = rng.uniform(0, 500, m)
    pq = rng.uniform(-np.pi, np.pi, m)
    t = np.array([0.0, 0.5, 5.0, 5.0, 2.0])
    h1 = impl.fading_sample(t, fi, pi_, fq, pq, 0.25)
    h2 = impl.fading_sample(t, fi, pi_, fq, pq, 0.25)
    assert np.array_equal(h1, h2)
    assert h1[2] == h1[3]  # same t, same value, order-free


@pytest.mark.skipif(kernels.BACKEND != "numba", reason="needs both backends")
def test_backends_agree():
    from adhocsim.kernels import numba_impl

    g = np.geomspace(1e-3, 5e3, 400)
    # below ~1e-18 the two terms of the DQPSK expression cancel and the
    # backends' different summation orders diverge relatively; irrelevant
    # for any packet-success value at these block lengths
    assert np.allclose(numba_impl.ber_dqpsk(g), numpy_impl.ber_dqpsk(g), rtol=1e-7, atol=1e-18)
    x = np.linspace(0, 300, 1000)
    assert np.allclose(numba_impl.j0(x), numpy_impl.j0(x), rtol=0, atol=1e-14)
    assert np.allclose(numba_impl.i0e(x), numpy_impl.i0e(x), rtol=1e-13, atol=0)
    a = np.linspace(0, 20, 101)
    b = np.linspace(0, 30, 101)
    assert np.allclose(numba_impl.marcum_q1(a, b), numpy_impl.marcum_q1(a, b), rtol=1e-10, atol=1e-14)

    rng = np.random.default_rng(3)
    fi = rng.uniform(0, 900, 64)
    pi_ = rng.uniform(-np.pi, np.pi, 64)
    fq = rng.uniform(0, 900, 64)
    pq = rng.uniform(-np.pi, np.pi, 64)
    t = np.linspace(0, 2, 5000)
    ha = numba_impl.fading_sample(t, fi, pi_, fq, pq, 0.125)
    hb = numpy_impl.fading_sample(t, fi, pi_, fq, pq, 0.125)
    assert np.allclose(ha, hb, rtol=1e-12, atol=1e-12)
