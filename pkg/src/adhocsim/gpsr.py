"""Greedy geographic routing over a HELLO-maintained neighbor table.

Neighbors are ranked by progress toward the destination times the best
average-SNR link throughput; only neighbors strictly closer to the
destination qualify. An empty candidate list signals a local maximum of
greedy forwarding (perimeter recovery is out of scope; callers drop and
count).
"""

import math
from dataclasses import dataclass

from . import phy80211b as phy

EMA_ALPHA = 0.3
HELLO_INTERVAL_S = 1.5
EXPIRY_INTERVALS = 3  # entries older than 3 HELLO intervals are dead


@dataclass
class NeighborEntry:
    node_id: int
    position: tuple
    last_heard: float
    avg_sinr: float


class LocalMaximumError(Exception):
    """No neighbor offers positive progress toward the destination."""


class NeighborTable:
    def __init__(self, hello_interval_s=HELLO_INTERVAL_S, alpha=EMA_ALPHA):
        self.entries = {}
        self.expiry_s = EXPIRY_INTERVALS * hello_interval_s
        self.alpha = alpha

    def process_hello(self, node_id, position, measured_sinr, now):
        """Upsert an entry; the SINR estimate is an EMA seeded by the first
        measurement."""
        e = self.entries.get(node_id)
        if e is None:
            self.entries[node_id] = NeighborEntry(node_id, position, now, measured_sinr)
        else:
            e.position = position
            e.last_heard = now
            e.avg_sinr = (1.0 - self.alpha) * e.avg_sinr + self.alpha * measured_sinr

    def expire(self, now):
        dead = [nid for nid, e in self.entries.items() if now - e.last_heard > self.expiry_s]
        for nid in dead:
            del self.entries[nid]

    def fresh_entries(self, now):
        return [e for e in self.entries.values() if now - e.last_heard <= self.expiry_s]

    def candidate_list(self, self_pos, dest_pos, limit, now, nbits=phy.DATA_EXCHANGE_BITS):
        """Up to ``limit`` neighbors with positive progress, best ranked first.

        Rank = progress * best-rate throughput at the HELLO-averaged SINR;
        ties break on node id. Empty list = greedy local maximum.
        """
        if limit < 1:
            raise ValueError("limit must be >= 1")
        d_self = math.dist(self_pos, dest_pos)
        ranked = []
        for e in self.fresh_entries(now):
            progress = d_self - math.dist(e.position, dest_pos)
            if progress <= 0.0:
                continue
            lam = float(phy.rate_metric_values(e.avg_sinr, nbits).max())
            ranked.append((-progress * lam, e.node_id, e, progress))
        ranked.sort()
        return [(e, progress) for _, _, e, progress in ranked[:limit]]
