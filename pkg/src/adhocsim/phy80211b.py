"""802.11b physical layer: rate set, bit-error models, packet success, airtimes.

The SNR argument ``g`` throughout is the linear link SNR referenced to the
1 Msym/s DSSS symbol (the quantity the channel module produces). Default
bit-error models, all pluggable through ``BER_MODELS``:

* 1 Mbps DBPSK:  P_b = 0.5*exp(-g)
* 2 Mbps DQPSK:  Marcum-Q expression with a,b = sqrt(2g(1 -/+ 1/sqrt(2)))
* 5.5/11 Mbps CCK: union bound over the exact 16/256-word CCK codebooks,
  chip SNR g/11 (energy conservation at 11 Mchip/s), SER/bits-per-symbol.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels

# ---- rate set -------------------------------------------------------------


@dataclass(frozen=True)
class RateClass:
    id: str
    bit_rate: float  # bits/s
    ber_model: str


R1 = RateClass("R1", 1e6, "dbpsk")
R2 = RateClass("R2", 2e6, "dqpsk")
R5_5 = RateClass("R5_5", 5.5e6, "cck4")
R11 = RateClass("R11", 11e6, "cck8")

RATES = (R1, R2, R5_5, R11)
RATE_BY_ID = {r.id: r for r in RATES}

# ---- CCK codebooks and union-bound distance spectra ------------------------

# chip k carries phase phi1 + sum of the flagged phi's; chips 4 and 7 negated
_CCK_INCIDENCE = np.array(
    [
        [1, 1, 1, 1],
        [1, 0, 1, 1],
        [1, 1, 0, 1],
        [1, 0, 0, 1],
        [1, 1, 1, 0],
        [1, 0, 1, 0],
        [1, 1, 0, 0],
        [1, 0, 0, 0],
    ],
    dtype=float,
)
_CCK_SIGNS = np.array([1, 1, 1, -1, 1, 1, -1, 1], dtype=float)

CCK_CHIP_SNR_SCALE = 1.0 / 11.0  # E_c/N0 per unit link SNR at 11 Mchip/s


def _cck_codebook(phases):
    words = np.empty((len(phases), 8), dtype=np.complex128)
    for i, phi in enumerate(phases):
        ang = _CCK_INCIDENCE @ np.asarray(phi, dtype=float)
        words[i] = _CCK_SIGNS * np.exp(1j * ang)
    return words


def _distance_spectrum(codebook):
    """Mean multiplicity of each squared chip distance over transmitted words."""
    k = codebook.shape[0]
    d2 = np.sum(np.abs(codebook[:, None, :] - codebook[None, :, :]) ** 2, axis=2)
    vals, counts = np.unique(np.round(d2[d2 > 1e-9], 9), return_counts=True)
    return vals, counts / k


def _build_spectra():
    qpsk = (0.0, np.pi / 2, np.pi, 3 * np.pi / 2)
    full = [(p1, p2, p3, p4) for p1 in qpsk for p2 in qpsk for p3 in qpsk for p4 in qpsk]
    half = [
        (p1, p2, 0.0, p4)
        for p1 in qpsk
        for p2 in (np.pi / 2, 3 * np.pi / 2)
        for p4 in (0.0, np.pi)
    ]
    d2_8, m_8 = _distance_spectrum(_cck_codebook(full))
    d2_4, m_4 = _distance_spectrum(_cck_codebook(half))
    return (d2_4, m_4), (d2_8, m_8)


(_CCK4_D2, _CCK4_MULT), (_CCK8_D2, _CCK8_MULT) = _build_spectra()


# ---- bit error models ------------------------------------------------------


def _ber_cck4(g):
    return kernels.cck_bit_error(g, _CCK4_D2, _CCK4_MULT, CCK_CHIP_SNR_SCALE, 4.0)


def _ber_cck8(g):
    return kernels.cck_bit_error(g, _CCK8_D2, _CCK8_MULT, CCK_CHIP_SNR_SCALE, 8.0)


BER_MODELS = {
    "dbpsk": kernels.ber_dbpsk,
    "dqpsk": kernels.ber_dqpsk,
    "cck4": _ber_cck4,
    "cck8": _ber_cck8,
}


def bit_error_prob(rate, snr):
    """Bit error probability of ``rate`` at linear SNR; scalar in, float out."""
    out = np.atleast_1d(BER_MODELS[rate.ber_model](np.asarray(snr, dtype=np.float64)))
    return float(out[0]) if np.ndim(snr) == 0 else out


def packet_success_prob(rate, snr, nbits):
    """Probability that ``nbits`` bits all decode: (1 - P_b)^nbits."""
    if nbits < 1:
        raise ValueError("nbits must be >= 1")
    out = kernels.packet_success(
        np.atleast_1d(np.asarray(bit_error_prob(rate, snr))), float(nbits)
    )
    return float(out[0]) if np.ndim(snr) == 0 else out


# ---- frame layout and airtimes ---------------------------------------------

PLCP_SECONDS = 192e-6  # long preamble + PLCP header, always 1 Mbps
SIFS = 10e-6
SLOT = 20e-6
DIFS = 50e-6
CONTROL_RATE = R1  # control frames at 1 Mbps

DATA_PAYLOAD_BYTES = 256
MAC_OVERHEAD_BYTES = 28  # MAC header + FCS
ACK_BYTES = 14
CTS_BYTES = 38  # control header + position/CSI/pilot fields; 304 bits
HELLO_BYTES = 48
MRTS_BASE_BYTES = 38  # CTS-sized body
MRTS_ENTRY_BYTES = 6  # per candidate address/order entry

DATA_MPDU_BITS = 8 * (DATA_PAYLOAD_BYTES + MAC_OVERHEAD_BYTES)  # 2272
ACK_BITS = 8 * ACK_BYTES  # 112
# block length for the success probability: data MPDU plus ACK; PLCP
# excluded (sent at the robust base modulation, assumed error free)
DATA_EXCHANGE_BITS = DATA_MPDU_BITS + ACK_BITS  # 2384


@dataclass(frozen=True)
class FrameSpec:
    kind: str  # HELLO | MRTS | CTS | DATA | ACK
    payload_bytes: int
    mac_overhead_bytes: int
    plcp_seconds: float = PLCP_SECONDS

    @property
    def mpdu_bits(self):
        return 8 * (self.payload_bytes + self.mac_overhead_bytes)


def data_frame(payload_bytes=DATA_PAYLOAD_BYTES):
    return FrameSpec("DATA", payload_bytes, MAC_OVERHEAD_BYTES)


def ack_frame():
    return FrameSpec("ACK", 0, ACK_BYTES)


def cts_frame():
    return FrameSpec("CTS", CTS_BYTES - 14, 14)


def hello_frame():
    return FrameSpec("HELLO", HELLO_BYTES - MAC_OVERHEAD_BYTES, MAC_OVERHEAD_BYTES)


def mrts_frame(n_candidates):
    return FrameSpec("MRTS", MRTS_BASE_BYTES - 14 + MRTS_ENTRY_BYTES * n_candidates, 14)


def airtime(spec, rate=CONTROL_RATE):
    """On-air duration of one frame: PLCP at 1 Mbps + MPDU at ``rate``."""
    return spec.plcp_seconds + spec.mpdu_bits / rate.bit_rate


def frame_duration(rate, spec=None):
    """Transmission duration D_i: DATA at ``rate`` + SIFS + ACK at 1 Mbps."""
    if spec is None:
        spec = data_frame()
    return airtime(spec, rate) + SIFS + airtime(ack_frame(), CONTROL_RATE)


DURATIONS = np.array([frame_duration(r) for r in RATES])
RATE_INDEX = {r.id: i for i, r in enumerate(RATES)}


def rate_metric_curves(snr, nbits=DATA_EXCHANGE_BITS):
    """P_s,i(snr)/D_i for all four rates; shape (4, len(snr))."""
    snr = np.atleast_1d(np.asarray(snr, dtype=np.float64))
    out = np.empty((len(RATES), snr.size))
    for i, (r, d) in enumerate(zip(RATES, DURATIONS)):
        out[i] = kernels.packet_success(bit_error_prob(r, snr), float(nbits)) / d
    return out


# scalar fast paths for the event loop; the numpy backend falls back to the
# vectorized route with size-1 arrays
if kernels.BACKEND == "numba":
    from .kernels import numba_impl as _nb

    def rate_metric_values(snr, nbits=DATA_EXCHANGE_BITS):
        """P_s,i(snr)/D_i for one scalar SNR; shape (4,)."""
        out = np.empty(4)
        _nb.rate_metrics_scalar(
            float(snr), float(nbits), _CCK4_D2, _CCK4_MULT, _CCK8_D2, _CCK8_MULT,
            CCK_CHIP_SNR_SCALE, DURATIONS, out,
        )
        return out

    def success_prob_scalar(rate, snr, nbits):
        return _nb.success_prob_model_scalar(
            RATE_INDEX[rate.id], float(snr), float(nbits),
            _CCK4_D2, _CCK4_MULT, _CCK8_D2, _CCK8_MULT, CCK_CHIP_SNR_SCALE,
        )

else:

    def rate_metric_values(snr, nbits=DATA_EXCHANGE_BITS):
        return rate_metric_curves(snr, nbits)[:, 0]

    def success_prob_scalar(rate, snr, nbits):
        return packet_success_prob(rate, float(snr), nbits)


def best_rate(snr, nbits=DATA_EXCHANGE_BITS):
    """(rate, P_s/D) pair maximizing success-per-second at linear SNR."""
    vals = rate_metric_values(snr, nbits)
    i = int(np.argmax(vals))
    return RATES[i], float(vals[i])
