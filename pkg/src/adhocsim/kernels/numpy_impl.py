"""Vectorized numpy implementations of the hot numeric kernels.

This is the fallback backend (``ADHOCSIM_NUMBA=0``) and the reference the
numba backend is cross-checked against. All functions take/return float64
arrays; scalars go through ``np.atleast_1d``.
"""

import numpy as np
from scipy.special import erfc as _erfc

from . import _coeffs as C

__all__ = [
    "j0",
    "i0e",
    "gaussian_q",
    "marcum_q1",
    "ber_dbpsk",
    "ber_dqpsk",
    "cck_bit_error",
    "packet_success",
    "fading_sample",
]


def _polevl(x, coef):
    ans = np.full_like(x, coef[0])
    for c in coef[1:]:
        ans = ans * x + c
    return ans


def _p1evl(x, coef):
    ans = x + coef[0]
    for c in coef[1:]:
        ans = ans * x + c
    return ans


def j0(x):
    """Bessel function of the first kind, order zero."""
    x = np.abs(np.asarray(x, dtype=np.float64))
    out = np.empty_like(x)

    small = x <= 5.0
    if np.any(small):
        xs = x[small]
        z = xs * xs
        tiny = xs < 1e-5
        p = (z - C.J0_DR1) * (z - C.J0_DR2) * _polevl(z, C.J0_RP) / _p1evl(z, C.J0_RQ)
        out[small] = np.where(tiny, 1.0 - z / 4.0, p)

    big = ~small
    if np.any(big):
        xb = x[big]
        w = 5.0 / xb
        q = 25.0 / (xb * xb)
        p = _polevl(q, C.J0_PP) / _polevl(q, C.J0_PQ)
        qq = _polevl(q, C.J0_QP) / _p1evl(q, C.J0_QQ)
        xn = xb - C.PIO4
        out[big] = C.SQ2OPI * (p * np.cos(xn) - w * qq * np.sin(xn)) / np.sqrt(xb)
    return out


def _i0e_series(xs, terms):
    q = xs * xs / 4.0
    term = np.ones_like(xs)
    s = np.ones_like(xs)
    for k in range(1, terms + 1):
        term = term * q / (k * k)
        s += term
    return s * np.exp(-xs)


def i0e(x):
    """exp(-x) * I0(x) for x >= 0.

    Power series up to the switchover (all-positive terms, no cancellation;
    22 terms suffice below 8, 48 up to 20), Hankel asymptotic beyond, where
    its truncation error ~e^{-2x} is < 1 ulp.
    """
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)

    tiny = x < 8.0
    mid = (x >= 8.0) & (x < C.I0E_SWITCH)
    if np.any(tiny):
        out[tiny] = _i0e_series(x[tiny], 22)
    if np.any(mid):
        out[mid] = _i0e_series(x[mid], C.I0E_SERIES_TERMS)

    big = x >= C.I0E_SWITCH
    if np.any(big):
        xb = x[big]
        term = np.ones_like(xb)
        s = np.ones_like(xb)
        for k in range(1, C.I0E_ASYMPT_TERMS + 1):
            term = term * (2 * k - 1.0) ** 2 / (8.0 * k * xb)
            s += term
        out[big] = s / np.sqrt(2.0 * np.pi * xb)
    return out


def gaussian_q(x):
    """Tail probability of the standard normal."""
    x = np.asarray(x, dtype=np.float64)
    return 0.5 * _erfc(x / np.sqrt(2.0))


def _marcum_direct(a, b):
    """Q1(a, b) for b >= a via panel Gauss-Legendre of the scaled integrand.

    Q1(a,b) = int_b^inf x * i0e(a x) * exp(-(x-a)^2/2) dx; the integrand is
    O(1)-scaled for any a, b, so no overflow for large arguments.
    """
    hi = np.maximum(a, b) + C.MARCUM_TAIL
    out = np.zeros_like(a)
    width = hi - b
    live = width > 0
    if not np.any(live):
        return out
    al, bl, hil = a[live], b[live], hi[live]
    n_panels = int(np.ceil(np.max(hil - bl) / C.MARCUM_PANEL_WIDTH))
    # uniform partition of [b, hi] into n_panels panels per element
    edges = bl[:, None] + (hil - bl)[:, None] * np.linspace(0.0, 1.0, n_panels + 1)
    lo_e = edges[:, :-1, None]
    hi_e = edges[:, 1:, None]
    half = 0.5 * (hi_e - lo_e)
    mid = 0.5 * (hi_e + lo_e)
    xx = mid + half * C.GL_NODES  # (m, panels, nodes)
    aa = al[:, None, None]
    f = xx * i0e(aa * xx) * np.exp(-0.5 * (xx - aa) ** 2)
    vals = np.einsum("mpn,n->m", f * half, C.GL_WEIGHTS)
    out[live] = vals
    return out


def marcum_q1(a, b):
    """First-order Marcum Q function Q1(a, b), elementwise."""
    a = np.atleast_1d(np.asarray(a, dtype=np.float64))
    b = np.atleast_1d(np.asarray(b, dtype=np.float64))
    a, b = np.broadcast_arrays(a, b)
    a = np.ascontiguousarray(a)
    b = np.ascontiguousarray(b)
    out = np.empty_like(a)

    direct = b >= a
    if np.any(direct):
        out[direct] = _marcum_direct(a[direct], b[direct])
    flip = ~direct
    if np.any(flip):
        af, bf = a[flip], b[flip]
        # Q1(a,b) = 1 + e^{-(a^2+b^2)/2} I0(ab) - Q1(b,a) for a > b
        cross = i0e(af * bf) * np.exp(-0.5 * (af - bf) ** 2)
        out[flip] = 1.0 + cross - _marcum_direct(bf, af)
    return np.clip(out, 0.0, 1.0)


def ber_dbpsk(g):
    """DBPSK bit error probability 0.5*exp(-g)."""
    g = np.asarray(g, dtype=np.float64)
    return 0.5 * np.exp(-g)


def ber_dqpsk(g):
    """Gray-coded DQPSK bit error probability via Marcum Q.

    P_b = Q1(a,b) - 0.5*I0(ab)*exp(-(a^2+b^2)/2),
    a = sqrt(2g(1-1/sqrt(2))), b = sqrt(2g(1+1/sqrt(2))).
    """
    g = np.atleast_1d(np.asarray(g, dtype=np.float64))
    isq = 1.0 / np.sqrt(2.0)
    a = np.sqrt(2.0 * g * (1.0 - isq))
    b = np.sqrt(2.0 * g * (1.0 + isq))
    pb = marcum_q1(a, b) - 0.5 * i0e(a * b) * np.exp(-0.5 * (a - b) ** 2)
    return np.clip(pb, 0.0, 0.5)


def cck_bit_error(g, d2, mult, chip_scale, bits_per_symbol):
    """CCK bit error probability from a union bound over the codebook.

    SER <= sum_k mult[k] * Q(sqrt(d2[k] * chip_scale * g / 2)), converted to
    a bit error probability by dividing by bits/symbol and capping at 1/2.
    """
    g = np.atleast_1d(np.asarray(g, dtype=np.float64))
    arg = np.sqrt(0.5 * chip_scale * np.outer(g, d2))
    ser = gaussian_q(arg) @ mult
    return np.minimum(0.5, ser / bits_per_symbol)


def packet_success(pb, nbits):
    """(1 - pb)^nbits evaluated as exp(nbits*log1p(-pb)); exact for tiny pb."""
    pb = np.asarray(pb, dtype=np.float64)
    out = np.zeros_like(pb)
    ok = pb < 1.0
    out[ok] = np.exp(nbits * np.log1p(-pb[ok]))
    return out


def fading_sample(t, freq_i, phase_i, freq_q, phase_q, amp):
    """Sum-of-sinusoids fading gain h(t) for an array of times.

    h(t) = amp * [sum_n cos(freq_i[n] t + phase_i[n])
                  + 1j sum_n cos(freq_q[n] t + phase_q[n])]
    """
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    out = np.empty(t.shape, dtype=np.complex128)
    # chunk the (times x oscillators) outer product to bound memory
    step = 65536
    for s in range(0, t.size, step):
        tt = t[s : s + step, None]
        re = np.cos(tt * freq_i + phase_i).sum(axis=1)
        im = np.cos(tt * freq_q + phase_q).sum(axis=1)
        out[s : s + step] = amp * (re + 1j * im)
    return out
