"""Numba-compiled kernels (the default backend).

Same public surface as ``numpy_impl`` but built from scalar @njit functions
with explicit loops; per-call overhead is small enough for the event-driven
simulator, bulk arrays compile to tight machine loops.
"""

import math

import numpy as np
from numba import njit

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
    "j0_scalar",
    "marcum_q1_scalar",
    "ber_dqpsk_scalar",
    "fading_sample_scalar",
]

_J0_RP = C.J0_RP
_J0_RQ = C.J0_RQ
_J0_PP = C.J0_PP
_J0_PQ = C.J0_PQ
_J0_QP = C.J0_QP
_J0_QQ = C.J0_QQ
_GLX = C.GL_NODES
_GLW = C.GL_WEIGHTS


@njit(cache=True)
def _polevl(x, coef):
    ans = coef[0]
    for j in range(1, coef.shape[0]):
        ans = ans * x + coef[j]
    return ans


@njit(cache=True)
def _p1evl(x, coef):
    ans = x + coef[0]
    for j in range(1, coef.shape[0]):
        ans = ans * x + coef[j]
    return ans


@njit(cache=True)
def j0_scalar(x):
    x = abs(x)
    if x <= 5.0:
        z = x * x
        if x < 1e-5:
            return 1.0 - z / 4.0
        p = (z - 5.78318596294678452118) * (z - 30.4712623436620863991)
        return p * _polevl(z, _J0_RP) / _p1evl(z, _J0_RQ)
    w = 5.0 / x
    q = 25.0 / (x * x)
    p = _polevl(q, _J0_PP) / _polevl(q, _J0_PQ)
    qq = _polevl(q, _J0_QP) / _p1evl(q, _J0_QQ)
    xn = x - 0.785398163397448309616
    return 0.79788456080286535588 * (p * math.cos(xn) - w * qq * math.sin(xn)) / math.sqrt(x)


@njit(cache=True)
def _i0e_scalar(x):
    if x < 20.0:
        q = x * x / 4.0
        term = 1.0
        s = 1.0
        for k in range(1, 49):
            term = term * q / (k * k)
            s += term
            if term < 1e-18 * s:
                break
        return s * math.exp(-x)
    term = 1.0
    s = 1.0
    for k in range(1, 15):
        term = term * (2.0 * k - 1.0) ** 2 / (8.0 * k * x)
        s += term
    return s / math.sqrt(2.0 * math.pi * x)


@njit(cache=True)
def _q_scalar(x):
    return 0.5 * math.erfc(x / math.sqrt(2.0))


@njit(cache=True)
def _marcum_direct_scalar(a, b):
    # integral of x*i0e(a x)*exp(-(x-a)^2/2) over [b, max(a,b)+tail]
    hi = max(a, b) + 40.0
    if hi <= b:
        return 0.0
    n_panels = int(math.ceil((hi - b) * 3.0 / 20.0))
    total = 0.0
    for p in range(n_panels):
        lo_e = b + (hi - b) * p / n_panels
        hi_e = b + (hi - b) * (p + 1) / n_panels
        half = 0.5 * (hi_e - lo_e)
        mid = 0.5 * (hi_e + lo_e)
        acc = 0.0
        for n in range(_GLX.shape[0]):
            x = mid + half * _GLX[n]
            acc += _GLW[n] * x * _i0e_scalar(a * x) * math.exp(-0.5 * (x - a) ** 2)
        total += acc * half
    return total


@njit(cache=True)
def marcum_q1_scalar(a, b):
    if b >= a:
        v = _marcum_direct_scalar(a, b)
    else:
        cross = _i0e_scalar(a * b) * math.exp(-0.5 * (a - b) ** 2)
        v = 1.0 + cross - _marcum_direct_scalar(b, a)
    if v < 0.0:
        return 0.0
    if v > 1.0:
        return 1.0
    return v


@njit(cache=True)
def ber_dqpsk_scalar(g):
    isq = 1.0 / math.sqrt(2.0)
    a = math.sqrt(2.0 * g * (1.0 - isq))
    b = math.sqrt(2.0 * g * (1.0 + isq))
    pb = marcum_q1_scalar(a, b) - 0.5 * _i0e_scalar(a * b) * math.exp(-0.5 * (a - b) ** 2)
    if pb < 0.0:
        return 0.0
    if pb > 0.5:
        return 0.5
    return pb


@njit(cache=True)
def _cck_bit_error_scalar(g, d2, mult, chip_scale, bits_per_symbol):
    ser = 0.0
    for k in range(d2.shape[0]):
        ser += mult[k] * _q_scalar(math.sqrt(0.5 * chip_scale * d2[k] * g))
    pb = ser / bits_per_symbol
    if pb > 0.5:
        return 0.5
    return pb


@njit(cache=True)
def _packet_success_scalar(pb, nbits):
    if pb >= 1.0:
        return 0.0
    return math.exp(nbits * math.log1p(-pb))


@njit(cache=True)
def _ber_scalar(model, g, cck4_d2, cck4_m, cck8_d2, cck8_m, chip_scale):
    if model == 0:
        return 0.5 * math.exp(-g)
    if model == 1:
        return ber_dqpsk_scalar(g)
    if model == 2:
        return _cck_bit_error_scalar(g, cck4_d2, cck4_m, chip_scale, 4.0)
    return _cck_bit_error_scalar(g, cck8_d2, cck8_m, chip_scale, 8.0)


@njit(cache=True)
def success_prob_model_scalar(model, g, nbits, cck4_d2, cck4_m, cck8_d2, cck8_m, chip_scale):
    return _packet_success_scalar(
        _ber_scalar(model, g, cck4_d2, cck4_m, cck8_d2, cck8_m, chip_scale), nbits
    )


@njit(cache=True)
def rate_metrics_scalar(g, nbits, cck4_d2, cck4_m, cck8_d2, cck8_m, chip_scale, durations, out):
    """P_s,i(g)/D_i for the four rates into ``out`` (event-loop fast path)."""
    for i in range(4):
        pb = _ber_scalar(i, g, cck4_d2, cck4_m, cck8_d2, cck8_m, chip_scale)
        out[i] = _packet_success_scalar(pb, nbits) / durations[i]


@njit(cache=True)
def fading_sample_scalar(t, freq_i, phase_i, freq_q, phase_q, amp):
    re = 0.0
    im = 0.0
    for n in range(freq_i.shape[0]):
        re += math.cos(freq_i[n] * t + phase_i[n])
        im += math.cos(freq_q[n] * t + phase_q[n])
    return complex(amp * re, amp * im)


# ---- array drivers -------------------------------------------------------


@njit(cache=True)
def _j0_arr(x, out):
    for i in range(x.shape[0]):
        out[i] = j0_scalar(x[i])


@njit(cache=True)
def _i0e_arr(x, out):
    for i in range(x.shape[0]):
        out[i] = _i0e_scalar(x[i])


@njit(cache=True)
def _q_arr(x, out):
    for i in range(x.shape[0]):
        out[i] = _q_scalar(x[i])


@njit(cache=True)
def _marcum_arr(a, b, out):
    for i in range(a.shape[0]):
        out[i] = marcum_q1_scalar(a[i], b[i])


@njit(cache=True)
def _dqpsk_arr(g, out):
    for i in range(g.shape[0]):
        out[i] = ber_dqpsk_scalar(g[i])


@njit(cache=True)
def _cck_arr(g, d2, mult, chip_scale, bits_per_symbol, out):
    for i in range(g.shape[0]):
        out[i] = _cck_bit_error_scalar(g[i], d2, mult, chip_scale, bits_per_symbol)


@njit(cache=True)
def _ps_arr(pb, nbits, out):
    for i in range(pb.shape[0]):
        out[i] = _packet_success_scalar(pb[i], nbits)


@njit(cache=True)
def _fading_arr(t, freq_i, phase_i, freq_q, phase_q, amp, out):
    for i in range(t.shape[0]):
        out[i] = fading_sample_scalar(t[i], freq_i, phase_i, freq_q, phase_q, amp)


def _as1d(x):
    return np.ascontiguousarray(np.atleast_1d(np.asarray(x, dtype=np.float64)))


def j0(x):
    x = _as1d(x)
    out = np.empty_like(x)
    _j0_arr(x, out)
    return out


def i0e(x):
    x = _as1d(x)
    out = np.empty_like(x)
    _i0e_arr(x, out)
    return out


def gaussian_q(x):
    x = _as1d(x)
    out = np.empty_like(x)
    _q_arr(x, out)
    return out


def marcum_q1(a, b):
    a = _as1d(a)
    b = _as1d(b)
    a, b = np.broadcast_arrays(a, b)
    a = np.ascontiguousarray(a)
    b = np.ascontiguousarray(b)
    out = np.empty_like(a)
    _marcum_arr(a, b, out)
    return out


def ber_dbpsk(g):
    g = _as1d(g)
    return 0.5 * np.exp(-g)


def ber_dqpsk(g):
    g = _as1d(g)
    out = np.empty_like(g)
    _dqpsk_arr(g, out)
    return out


def cck_bit_error(g, d2, mult, chip_scale, bits_per_symbol):
    g = _as1d(g)
    out = np.empty_like(g)
    _cck_arr(g, d2, mult, float(chip_scale), float(bits_per_symbol), out)
    return out


def packet_success(pb, nbits):
    pb = _as1d(pb)
    out = np.empty_like(pb)
    _ps_arr(pb, float(nbits), out)
    return out


def fading_sample(t, freq_i, phase_i, freq_q, phase_q, amp):
    t = _as1d(t)
    out = np.empty(t.shape, dtype=np.complex128)
    _fading_arr(t, freq_i, phase_i, freq_q, phase_q, amp, out)
    return out
