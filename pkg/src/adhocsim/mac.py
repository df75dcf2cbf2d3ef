"""MAC-layer building blocks: exchange timing, CSI aging, joint rate/relay
selection, and DCF backoff state.

The multi-candidate handshake polls up to L relays with one request frame;
candidates answer with response (CTS) frames in the listed order at SIFS
spacing, and the data frame starts one SIFS after the last response slot.
CSI acquired from the request (receiver-side measurement fed back) is aged
by the whole response phase; CSI measured at the sender from response
pilots is aged only by the per-slot delay, which channel prediction then
compensates.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import phy80211b as phy

__all__ = [
    "MacTiming",
    "CsiScheme",
    "RelayCandidate",
    "cts_delay",
    "rts_csi_age",
    "select_rate_relay",
    "exchange_schedule",
    "BackoffState",
    "NoCandidateError",
]


class CsiScheme(Enum):
    RTS_CSI = "RTS_CSI"
    CTS_CSI = "CTS_CSI"
    IDEAL = "IDEAL"


@dataclass(frozen=True)
class MacTiming:
    sifs: float = phy.SIFS
    slot: float = phy.SLOT
    difs: float = phy.DIFS
    cts_airtime: float = phy.airtime(phy.cts_frame())

    def mrts_airtime(self, n_candidates):
        return phy.airtime(phy.mrts_frame(n_candidates))


DEFAULT_TIMING = MacTiming()


@dataclass
class RelayCandidate:
    node_id: int
    position: tuple
    progress: float  # meters toward the destination
    snr_estimate: float  # linear; per-scheme semantics
    csi_age_s: float = 0.0


class NoCandidateError(Exception):
    """Selection invoked with an empty candidate list."""


def cts_delay(total, index, timing=DEFAULT_TIMING):
    """Age of CSI measured from response ``index`` (1-based) of ``total``:
    (L - l)(SIFS + T_CTS) + SIFS seconds until the data frame starts."""
    if not 1 <= index <= total:
        raise ValueError(f"index {index} out of range 1..{total}")
    return (total - index) * (timing.sifs + timing.cts_airtime) + timing.sifs


def rts_csi_age(total, timing=DEFAULT_TIMING):
    """Age of CSI measured at request reception: the full response phase,
    L(SIFS + T_CTS) + SIFS seconds."""
    if total < 1:
        raise ValueError("need at least one candidate")
    return total * (timing.sifs + timing.cts_airtime) + timing.sifs


def select_rate_relay(candidates, nbits=phy.DATA_EXCHANGE_BITS):
    """Joint argmax of progress * P_s,i(snr_estimate)/D_i over (relay, rate).

    Deterministic tie-break: lower node id, then lower rate. Returns
    (candidate, rate, metric value).
    """
    if not candidates:
        raise NoCandidateError("empty candidate list")
    best = None
    for cand in sorted(candidates, key=lambda c: c.node_id):
        vals = cand.progress * phy.rate_metric_values(cand.snr_estimate, nbits)
        i = int(np.argmax(vals))
        if best is None or vals[i] > best[0]:
            best = (float(vals[i]), cand, phy.RATES[i])
    return best[1], best[2], best[0]


@dataclass(frozen=True)
class ExchangeSchedule:
    """Timed plan of one request/response exchange starting at mrts_start."""

    mrts_start: float
    mrts_end: float
    cts_starts: tuple  # per candidate, listed order
    cts_ends: tuple
    data_start: float


def exchange_schedule(mrts_start, n_candidates, timing=DEFAULT_TIMING):
    """Slot arithmetic of the handshake timeline.

    Response l occupies [mrts_end + l*SIFS + (l-1)*T_CTS, ... + T_CTS];
    the data frame starts one SIFS after slot L ends, so its start minus
    the end of slot l equals cts_delay(L, l) and its start minus mrts_end
    equals rts_csi_age(L).
    """
    if n_candidates < 1:
        raise ValueError("need at least one candidate")
    mrts_end = mrts_start + timing.mrts_airtime(n_candidates)
    starts, ends = [], []
    for l in range(1, n_candidates + 1):
        s = mrts_end + l * timing.sifs + (l - 1) * timing.cts_airtime
        starts.append(s)
        ends.append(s + timing.cts_airtime)
    return ExchangeSchedule(
        mrts_start, mrts_end, tuple(starts), tuple(ends), ends[-1] + timing.sifs
    )


@dataclass
class BackoffState:
    """Binary exponential backoff: CW doubles on failure between min and max."""

    cw_min: int = 31
    cw_max: int = 1023
    cw: int = 31
    retries: int = 0

    def draw_slots(self, rng):
        return int(rng.integers(0, self.cw + 1))

    def on_failure(self):
        self.cw = min(2 * self.cw + 1, self.cw_max)
        self.retries += 1

    def reset(self):
        self.cw = self.cw_min
        self.retries = 0
