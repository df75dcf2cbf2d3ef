"""Deterministic discrete-event simulation of the adaptive rate/relay network.

One run is one single-threaded event loop: CBR sources hand packets to
greedy geographic routing, the MAC polls up to L relay candidates with a
request frame, candidates answer in listed order, and the sender picks the
(relay, rate) pair maximizing progress times expected throughput under the
configured CSI scheme (request-side measurement, response-pilot prediction,
or genie). Fading is frozen per frame and evaluated lazily; every random
draw comes from a named per-subsystem stream derived from the master seed,
so runs are bit-reproducible.

Reception is frame-level: one Bernoulli draw against the packet success
probability at the frame-start SINR. Each transmission freezes its start
context (overlapping transmissions, busy senders) in a same-time event that
runs after all simultaneous starts, so head-on collisions interfere
symmetrically.
"""

import heapq
import math
from dataclasses import dataclass, field, fields

import numpy as np
from scipy import stats as _stats

from . import channel, gpsr, mac, mobility, phy80211b as phy, predictor

__all__ = [
    "ScenarioConfig",
    "RunMetrics",
    "run",
    "aggregate",
    "parse_config_file",
    "config_from_text",
    "full_scale_config",
    "METRICS_COLUMNS",
]

# receivers with mean SNR below this can't decode even in a deep upfade
RX_CONSIDER_MIN_AVG_SNR = 0.02
ACK_AIRTIME = phy.airtime(phy.ack_frame())
NAV_GUARD_DURATION = phy.frame_duration(phy.R1)  # worst-case data+ack hold


# ---- configuration -----------------------------------------------------------


@dataclass(frozen=True)
class ScenarioConfig:
    node_count: int = 20
    arena_m: float = 400.0
    v_max_mps: float = 10.0
    relay_count: int = 3
    csi_scheme: str = "CTS_CSI"
    flow_count: int = 5
    packet_bytes: int = 256
    packet_interval_s: float = 0.25  # 0 => saturated sources
    hello_interval_s: float = 1.5
    sim_end_s: float = 300.0
    seed: int = 1
    # traffic-start window; the full-scale scenario's [10, 200] window,
    # scaled to the 300 s desk horizon
    warmup_start_s: float = 10.0
    warmup_end_s: float = 60.0
    pause_s: float = 2.0
    tx_power_w: float = 1e-3
    noise_dbm: float = -102.0
    carrier_hz: float = 2.4e9
    antenna_height_m: float = 1.5
    antenna_gain: float = 1.0
    cs_threshold_dbm: float = -93.0
    pilot_snr_db: float = 30.0
    retry_limit: int = 7
    queue_limit: int = 50
    hop_limit: int = 32
    fading: bool = True
    doppler_override_hz: float = -1.0  # <0 => derive from relative speed
    static_positions: tuple = ()  # ((x, y), ...) disables mobility
    log_events: bool = False
    log_trajectory: bool = False

    def __post_init__(self):
        if self.csi_scheme not in ("RTS_CSI", "CTS_CSI", "IDEAL"):
            raise ValueError(f"unknown csi_scheme {self.csi_scheme!r}")
        if self.node_count < 2:
            raise ValueError("need at least two nodes")
        if 2 * self.flow_count > self.node_count:
            raise ValueError("flows need disjoint source/destination nodes")
        if self.relay_count < 1:
            raise ValueError("relay_count must be >= 1")
        if self.static_positions and len(self.static_positions) != self.node_count:
            raise ValueError("static_positions must cover every node")
        if not (0 <= self.warmup_start_s <= self.warmup_end_s <= self.sim_end_s):
            raise ValueError("warmup window must fit inside the run")

    @property
    def noise_w(self):
        return 10.0 ** (self.noise_dbm / 10.0) * 1e-3

    @property
    def cs_threshold_w(self):
        return 10.0 ** (self.cs_threshold_dbm / 10.0) * 1e-3

    def path_loss_params(self):
        return channel.PathLossParams(
            tx_power_w=self.tx_power_w,
            antenna_height_m=self.antenna_height_m,
            antenna_gain=self.antenna_gain,
            carrier_hz=self.carrier_hz,
            noise_w=self.noise_w,
        )


def full_scale_config(**overrides):
    """Full-scale scenario: 50 nodes, 500 m arena, 10 flows, 1000 s."""
    base = dict(
        node_count=50,
        arena_m=500.0,
        flow_count=10,
        sim_end_s=1000.0,
        warmup_start_s=10.0,
        warmup_end_s=200.0,
    )
    base.update(overrides)
    return ScenarioConfig(**base)


_BOOL_TRUE = ("1", "true", "yes", "on")
_BOOL_FALSE = ("0", "false", "no", "off")


def config_from_text(text):
    """Parse flat ``key = value`` scenario text; unknown keys are rejected."""
    spec = {f.name: f for f in fields(ScenarioConfig)}
    values = {}
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {ln}: expected 'key = value'")
        key, val = (part.strip() for part in line.split("=", 1))
        if key not in spec:
            raise ValueError(f"line {ln}: unknown config key {key!r}")
        values[key] = _coerce(key, val, spec[key].type)
    return ScenarioConfig(**values)


def _coerce(key, val, ftype):
    if key == "static_positions":
        if not val or val.lower() == "none":
            return ()
        pts = []
        for chunk in val.split(";"):
            x, y = chunk.split(",")
            pts.append((float(x), float(y)))
        return tuple(pts)
    if ftype in ("bool", bool):
        low = val.lower()
        if low in _BOOL_TRUE:
            return True
        if low in _BOOL_FALSE:
            return False
        raise ValueError(f"bad boolean for {key}: {val!r}")
    if ftype in ("int", int):
        return int(val)
    if ftype in ("float", float):
        return float(val)
    return val


def parse_config_file(path):
    with open(path) as fh:
        return config_from_text(fh.read())


# ---- metrics -------------------------------------------------------------------

DROP_CAUSES = ("no_progress", "retry_limit", "queue_full", "ttl", "in_flight_at_end")

METRICS_COLUMNS = [
    "seed",
    "vmax",
    "L",
    "scheme",
    "throughput_pps",
    "delay_s",
    "pdr",
    "hops",
    "drops_nocand",
    "drops_retry",
]


@dataclass
class RunMetrics:
    sent: int = 0
    delivered: int = 0
    drops: dict = field(default_factory=lambda: {c: 0 for c in DROP_CAUSES})
    delay_sum_s: float = 0.0
    hop_sum: int = 0
    measure_window_s: float = 1.0
    attempt_count: int = 0
    attempt_metric_sum: float = 0.0  # sum over data attempts of success/D_i
    contention_overhead_s: float = 0.0
    per_flow_sent: dict = field(default_factory=dict)
    per_flow_delivered: dict = field(default_factory=dict)
    events: list = None
    trajectory: list = None

    @property
    def throughput_pps(self):
        return self.delivered / self.measure_window_s

    @property
    def mean_delay_s(self):
        return self.delay_sum_s / self.delivered if self.delivered else 0.0

    @property
    def packet_delivery_ratio(self):
        return self.delivered / self.sent if self.sent else 1.0

    @property
    def mean_hops(self):
        return self.hop_sum / self.delivered if self.delivered else 0.0

    @property
    def per_attempt_throughput_pps(self):
        """Mean over data attempts of success/D_i; the link-theory estimand."""
        return self.attempt_metric_sum / self.attempt_count if self.attempt_count else 0.0

    @property
    def mean_contention_overhead_s(self):
        return self.contention_overhead_s / self.attempt_count if self.attempt_count else 0.0

    def csv_row(self, cfg):
        return {
            "seed": cfg.seed,
            "vmax": cfg.v_max_mps,
            "L": cfg.relay_count,
            "scheme": cfg.csi_scheme,
            "throughput_pps": f"{self.throughput_pps:.6f}",
            "delay_s": f"{self.mean_delay_s:.6f}",
            "pdr": f"{self.packet_delivery_ratio:.6f}",
            "hops": f"{self.mean_hops:.6f}",
            "drops_nocand": self.drops["no_progress"],
            "drops_retry": self.drops["retry_limit"],
        }


def aggregate(metric_rows, confidence=0.95):
    """Per-metric mean and Student-t confidence interval across runs."""
    if len(metric_rows) < 2:
        raise ValueError("need at least two runs to aggregate")
    out = {}
    n = len(metric_rows)
    tcrit = float(_stats.t.ppf(0.5 + confidence / 2.0, n - 1))
    for name in ("throughput_pps", "mean_delay_s", "packet_delivery_ratio", "mean_hops"):
        vals = np.array([getattr(m, name) for m in metric_rows], dtype=float)
        mean = float(vals.mean())
        half = tcrit * float(vals.std(ddof=1)) / math.sqrt(n)
        out[name] = (mean, mean - half, mean + half)
    return out


# ---- packets and frames ----------------------------------------------------------


@dataclass
class Packet:
    pid: int
    flow: int
    src: int
    dst: int
    created_s: float
    hops: int = 0


@dataclass
class Transmission:
    tx_id: int
    sender: int
    kind: str  # HELLO | MRTS | CTS | DATA | ACK
    start_s: float
    end_s: float
    payload: object = None
    rx_power_cache: dict = field(default_factory=dict)
    interferers: tuple = ()  # transmissions overlapping the start instant
    busy_senders: frozenset = frozenset()


# ---- the engine -------------------------------------------------------------------


class Simulation:
    def __init__(self, cfg):
        self.cfg = cfg
        self.params = cfg.path_loss_params()
        self.now = 0.0
        self._heap = []
        self._seq = 0
        self.metrics = RunMetrics(
            measure_window_s=max(cfg.sim_end_s - cfg.warmup_start_s, 1e-9)
        )
        if cfg.log_events:
            self.metrics.events = []
        self.trajectory = [] if cfg.log_trajectory else None
        self.coeff_cache = predictor.coefficient_cache()
        self._fading_cache = {}
        self._pid = 0
        self._tx_id = 0
        self.active_tx = {}
        self.contenders = set()

        self.rng_traffic = np.random.default_rng(
            np.random.SeedSequence((cfg.seed, 3))
        )
        self.nodes = [Node(self, i) for i in range(cfg.node_count)]
        self._setup_flows()
        for node in self.nodes:
            node.start()

    # -- event plumbing --------------------------------------------------------

    def schedule(self, t, fn, *args):
        self._seq += 1
        heapq.heappush(self._heap, (t, self._seq, fn, args))

    def log(self, node, event, frame="", peer=-1, snr=float("nan")):
        if self.metrics.events is not None:
            self.metrics.events.append((self.now, node, event, frame, peer, snr))

    def run(self):
        end = self.cfg.sim_end_s
        while self._heap:
            t, _, fn, args = heapq.heappop(self._heap)
            if t > end:
                break
            if t < self.now - 1e-12:
                raise RuntimeError("event scheduled in the past")
            self.now = max(self.now, t)
            fn(*args)
        self._finalize()
        return self.metrics

    def _finalize(self):
        for node in self.nodes:
            pending = len(node.queue) + (1 if node.current_packet else 0)
            self.metrics.drops["in_flight_at_end"] += pending

    # -- scenario assembly -------------------------------------------------------

    def _setup_flows(self):
        cfg = self.cfg
        ids = self.rng_traffic.permutation(cfg.node_count)
        self.flows = []
        for f in range(cfg.flow_count):
            src, dst = int(ids[2 * f]), int(ids[2 * f + 1])
            start = self.rng_traffic.uniform(cfg.warmup_start_s, cfg.warmup_end_s)
            self.flows.append((src, dst))
            self.metrics.per_flow_sent[f] = 0
            self.metrics.per_flow_delivered[f] = 0
            self.schedule(start, self._generate_packet, f)

    def _generate_packet(self, flow):
        cfg = self.cfg
        src, dst = self.flows[flow]
        self._pid += 1
        pkt = Packet(self._pid, flow, src, dst, self.now)
        self.metrics.sent += 1
        self.metrics.per_flow_sent[flow] += 1
        self.nodes[src].enqueue(pkt)
        if cfg.packet_interval_s > 0:
            nxt = self.now + cfg.packet_interval_s
            if nxt <= cfg.sim_end_s:
                self.schedule(nxt, self._generate_packet, flow)
        # saturated flows (interval 0) re-arm on packet completion instead

    def saturate_refill(self, src):
        if self.cfg.packet_interval_s > 0:
            return
        # a full source queue would bounce the refill straight back into a
        # queue_full drop (and recurse); try again once some backlog drained
        if len(self.nodes[src].queue) >= self.cfg.queue_limit:
            self.schedule(self.now + 0.01, self.saturate_refill, src)
            return
        for f, (fsrc, _) in enumerate(self.flows):
            if fsrc == src:
                self._generate_packet(f)
                return

    # -- geometry / channel ---------------------------------------------------------

    def position(self, node_id, t):
        return self.nodes[node_id].position_at(t)

    def link_avg_snr(self, a, b, t):
        d = max(math.dist(self.position(a, t), self.position(b, t)), 0.1)
        return (
            self.params.tx_power_w
            * channel.path_gain(d, self.params)
            / self.params.noise_w
        )

    def link_doppler(self, a, b):
        if self.cfg.doppler_override_hz >= 0.0:
            return self.cfg.doppler_override_hz
        va = mobility.velocity_of(self.nodes[a].rwp)
        vb = mobility.velocity_of(self.nodes[b].rwp)
        rel = math.hypot(va[0] - vb[0], va[1] - vb[1])
        return channel.doppler_from_speed(rel, self.cfg.carrier_hz)

    def fading_process(self, a, b):
        """Reciprocal per-pair process, re-drawn whenever either endpoint's
        waypoint (hence the link Doppler) changes."""
        lo, hi = (a, b) if a < b else (b, a)
        epoch = (self.nodes[lo].waypoint_version, self.nodes[hi].waypoint_version)
        key = (lo, hi)
        cached = self._fading_cache.get(key)
        if cached is not None and cached[0] == epoch:
            return cached[1]
        fd = self.link_doppler(lo, hi)
        ss = np.random.SeedSequence((self.cfg.seed, 1, lo, hi, epoch[0], epoch[1]))
        proc = channel.FadingProcess.create(fd, ss)
        self._fading_cache[key] = (epoch, proc)
        return proc

    def gain2(self, a, b, t):
        """|h(t)|^2 of the (a, b) link; 1.0 when fading is disabled."""
        if not self.cfg.fading:
            return 1.0
        return abs(channel.sample_gain(self.fading_process(a, b), t)) ** 2

    # -- medium ---------------------------------------------------------------------

    def rx_power_w(self, tx, receiver):
        """Received power of a transmission at a node, frozen at tx start."""
        p = tx.rx_power_cache.get(receiver)
        if p is None:
            d = max(
                math.dist(
                    self.position(tx.sender, tx.start_s),
                    self.position(receiver, tx.start_s),
                ),
                0.1,
            )
            p = (
                self.params.tx_power_w
                * channel.path_gain(d, self.params)
                * self.gain2(tx.sender, receiver, tx.start_s)
            )
            tx.rx_power_cache[receiver] = p
        return p

    def interference_w(self, receiver, exclude_tx=None):
        """Aggregate received power of all other live transmissions, now."""
        total = 0.0
        for tx in self.active_tx.values():
            if tx is exclude_tx or tx.sender == receiver:
                continue
            total += self.rx_power_w(tx, receiver)
        return total

    def is_busy(self, node_id, t):
        node = self.nodes[node_id]
        if node.transmitting or t < node.nav_until:
            return True
        thr = self.cfg.cs_threshold_w
        return any(
            self.rx_power_w(tx, node_id) >= thr
            for tx in self.active_tx.values()
            if tx.sender != node_id
        )

    def transmit(self, sender, kind, air_s, payload=None, on_end=None):
        self._tx_id += 1
        tx = Transmission(self._tx_id, sender, kind, self.now, self.now + air_s, payload)
        self.active_tx[tx.tx_id] = tx
        self.nodes[sender].transmitting = True
        self.log(sender, "TX_START", kind)
        thr = self.cfg.cs_threshold_w
        for nid in sorted(self.contenders):
            if nid != sender and self.rx_power_w(tx, nid) >= thr:
                self.nodes[nid].on_medium_busy(self.now)
        # freeze the start context after every simultaneous start has begun
        self.schedule(self.now, self._freeze_context, tx)
        self.schedule(tx.end_s, self._end_transmission, tx, on_end)
        return tx

    def _freeze_context(self, tx):
        overlapping = tuple(
            other for other in self.active_tx.values() if other is not tx
        )
        tx.interferers = overlapping
        tx.busy_senders = frozenset(o.sender for o in overlapping)

    def _end_transmission(self, tx, on_end):
        del self.active_tx[tx.tx_id]
        self.nodes[tx.sender].transmitting = False
        self.log(tx.sender, "TX_END", tx.kind)
        if on_end is not None:
            on_end(tx)
        thr = self.cfg.cs_threshold_w
        for nid in sorted(self.contenders):
            if nid != tx.sender and tx.rx_power_cache.get(nid, 0.0) >= thr:
                if not self.is_busy(nid, self.now):
                    self.nodes[nid].on_medium_idle(self.now)

    def decode_ok(self, tx, receiver, nbits, rate=phy.CONTROL_RATE):
        """Frame-level reception decision at the frozen frame-start SINR."""
        if receiver in tx.busy_senders or self.nodes[receiver].transmitting:
            return False, 0.0
        signal = self.rx_power_w(tx, receiver)
        interf = sum(
            self.rx_power_w(other, receiver)
            for other in tx.interferers
            if other.sender != receiver
        )
        sinr = signal / (self.params.noise_w + interf)
        ps = phy.success_prob_scalar(rate, sinr, nbits)
        ok = bool(self.nodes[receiver].rng_rx.random() < ps)
        self.log(receiver, "RX_OK" if ok else "RX_FAIL", tx.kind, tx.sender, sinr)
        return ok, sinr

    def broadcast_receivers(self, sender, t):
        """Nodes close enough that a decode is physically possible."""
        out = []
        for nid in range(self.cfg.node_count):
            if nid != sender and self.link_avg_snr(sender, nid, t) >= RX_CONSIDER_MIN_AVG_SNR:
                out.append(nid)
        return out

    # -- packet bookkeeping -----------------------------------------------------------

    def packet_delivered(self, pkt):
        self.metrics.delivered += 1
        self.metrics.per_flow_delivered[pkt.flow] += 1
        self.metrics.delay_sum_s += self.now - pkt.created_s
        self.metrics.hop_sum += pkt.hops
        self.log(pkt.dst, "DELIVERED", "DATA", pkt.src)
        self.saturate_refill(pkt.src)

    def packet_dropped(self, pkt, cause):
        self.metrics.drops[cause] += 1
        self.log(pkt.src, "DROP_" + cause.upper(), "DATA", pkt.dst)
        self.saturate_refill(pkt.src)


class Node:
    """Per-node mobility, routing table, and MAC engine."""

    def __init__(self, sim, node_id):
        self.sim = sim
        self.id = node_id
        cfg = sim.cfg
        self.rng_mob = np.random.default_rng(np.random.SeedSequence((cfg.seed, 0, node_id)))
        self.rng_mac = np.random.default_rng(np.random.SeedSequence((cfg.seed, 2, node_id)))
        self.rng_rx = np.random.default_rng(np.random.SeedSequence((cfg.seed, 4, node_id)))
        self.rng_pilot = np.random.default_rng(np.random.SeedSequence((cfg.seed, 5, node_id)))

        if cfg.static_positions:
            pos = cfg.static_positions[node_id]
            self.rwp = mobility.RwpState(pos, pos, 0.0, mobility.PAUSED, 0.0, float("inf"))
            self.mobile = False
        else:
            self.rwp = mobility.initial_state(self.rng_mob, cfg.arena_m, cfg.pause_s)
            self.mobile = True
        self.waypoint_version = 0

        self.table = gpsr.NeighborTable(cfg.hello_interval_s)
        self.queue = []
        self.current_packet = None
        self.backoff = mac.BackoffState()
        self.slots_remaining = 0
        self.timer_token = 0
        self.state = "IDLE"  # IDLE | CONTEND | EXCHANGE
        self.waiting_idle = False
        self.anchor = 0.0
        self.nav_until = 0.0
        self.transmitting = False
        self.hello_due = False
        self.attempt_ready_t = 0.0
        self.exchange = None

    # -- lifecycle ---------------------------------------------------------------

    def start(self):
        cfg = self.sim.cfg
        self.sim.schedule(self.rng_mac.uniform(0.0, cfg.hello_interval_s), self._hello_due)
        if self.sim.trajectory is not None:
            self.sim.trajectory.append((0.0, self.id, *self.rwp.start))
        if self.mobile:
            self.sim.schedule(self.rwp.phase_end, self._waypoint)

    def position_at(self, t):
        return mobility.position_at(self.rwp, t)

    def _waypoint(self):
        cfg = self.sim.cfg
        self.rwp = mobility.advance(self.rwp, self.rng_mob, cfg.arena_m, cfg.v_max_mps, cfg.pause_s)
        self.waypoint_version += 1
        if self.sim.trajectory is not None:
            self.sim.trajectory.append((self.rwp.phase_start, self.id, *self.rwp.start))
        self.sim.schedule(self.rwp.phase_end, self._waypoint)

    def _hello_due(self):
        self.hello_due = True
        self.sim.schedule(self.sim.now + self.sim.cfg.hello_interval_s, self._hello_due)
        self.ensure_contending()

    # -- queue ---------------------------------------------------------------------

    def enqueue(self, pkt):
        if len(self.queue) >= self.sim.cfg.queue_limit:
            self.sim.packet_dropped(pkt, "queue_full")
            return
        self.queue.append(pkt)
        self.ensure_contending()

    # -- DCF contention ---------------------------------------------------------------

    def ensure_contending(self):
        if self.state != "IDLE":
            return
        if not self.queue and self.current_packet is None and not self.hello_due:
            return
        self.state = "CONTEND"
        self.attempt_ready_t = self.sim.now
        self.slots_remaining = self.backoff.draw_slots(self.rng_mac)
        self.sim.contenders.add(self.id)
        self._arm(self.sim.now)

    def _arm(self, now):
        self.timer_token += 1
        token = self.timer_token
        if now < self.nav_until:
            self.waiting_idle = False
            self.sim.schedule(self.nav_until, self._nav_expired, token)
            return
        if self.sim.is_busy(self.id, now):
            self.waiting_idle = True
            return
        self.waiting_idle = False
        self.anchor = now
        self.sim.schedule(now + phy.DIFS + self.slots_remaining * phy.SLOT, self._timer_fired, token)

    def _nav_expired(self, token):
        if token != self.timer_token or self.state != "CONTEND":
            return
        self._arm(self.sim.now)

    def on_medium_busy(self, t):
        if self.state != "CONTEND" or self.waiting_idle:
            return
        consumed = int(max(0.0, t - self.anchor - phy.DIFS) / phy.SLOT)
        self.slots_remaining = max(0, self.slots_remaining - consumed)
        self.timer_token += 1  # invalidate the armed timer
        self.waiting_idle = True

    def on_medium_idle(self, t):
        if self.state == "CONTEND" and self.waiting_idle:
            self._arm(t)

    def _timer_fired(self, token):
        if token != self.timer_token or self.state != "CONTEND":
            return
        now = self.sim.now
        if now < self.nav_until or self.sim.is_busy(self.id, now):
            self._arm(now)  # missed a transition; re-evaluate
            return
        self.sim.contenders.discard(self.id)
        if self.hello_due:
            self._send_hello()
        elif self.queue or self.current_packet is not None:
            self._begin_data_exchange()
        else:
            self.state = "IDLE"

    def _recontend(self):
        self.state = "IDLE"
        self.exchange = None
        self.sim.contenders.discard(self.id)
        self.ensure_contending()

    # -- HELLO -----------------------------------------------------------------------

    def _send_hello(self):
        sim = self.sim
        self.hello_due = False
        self.state = "EXCHANGE"
        pos = self.position_at(sim.now)
        sim.transmit(self.id, "HELLO", phy.airtime(phy.hello_frame()), payload=pos,
                     on_end=self._hello_ended)

    def _hello_ended(self, tx):
        sim = self.sim
        nbits = phy.hello_frame().mpdu_bits
        for nid in sim.broadcast_receivers(self.id, tx.start_s):
            ok, _ = sim.decode_ok(tx, nid, nbits)
            if ok:
                # averaged channel power is estimated perfectly on HELLOs
                avg = sim.link_avg_snr(self.id, nid, sim.now)
                sim.nodes[nid].table.process_hello(self.id, tx.payload, avg, sim.now)
        self._recontend()

    # -- data path ----------------------------------------------------------------------

    def _begin_data_exchange(self):
        sim = self.sim
        cfg = sim.cfg
        if self.current_packet is None:
            self.current_packet = self.queue.pop(0)
            self.backoff.reset()
        pkt = self.current_packet
        now = sim.now
        self.table.expire(now)
        cands = self.table.candidate_list(
            self.position_at(now), sim.position(pkt.dst, now), cfg.relay_count, now
        )
        if not cands:
            self.current_packet = None
            self.backoff.reset()
            sim.packet_dropped(pkt, "no_progress")
            self._recontend()
            return
        self.state = "EXCHANGE"
        if cfg.csi_scheme == "IDEAL":
            self._ideal_data(pkt, cands)
        else:
            self._send_mrts(pkt, cands)

    def _ideal_data(self, pkt, cands):
        """Genie CSI: true per-candidate SINR at the data-transmit instant."""
        sim = self.sim
        now = sim.now
        d_self = math.dist(self.position_at(now), sim.position(pkt.dst, now))
        rcs = []
        for entry, _ in cands:
            cand_pos = sim.position(entry.node_id, now)
            z = d_self - math.dist(cand_pos, sim.position(pkt.dst, now))
            if z <= 0:
                continue
            snr = (
                sim.link_avg_snr(self.id, entry.node_id, now)
                * sim.gain2(self.id, entry.node_id, now)
                * sim.params.noise_w
                / (sim.params.noise_w + sim.interference_w(entry.node_id))
            )
            rcs.append(mac.RelayCandidate(entry.node_id, cand_pos, z, snr, 0.0))
        if not rcs:
            self._data_attempt_failed(pkt)
            return
        winner, rate, _ = mac.select_rate_relay(rcs)
        self._transmit_data(pkt, winner.node_id, rate)

    def _send_mrts(self, pkt, cands):
        sim = self.sim
        listed = tuple(entry.node_id for entry, _ in cands)
        sched = mac.exchange_schedule(sim.now, len(listed))
        self.exchange = {"pkt": pkt, "listed": listed, "sched": sched, "responses": {}}
        sim.transmit(
            self.id,
            "MRTS",
            mac.DEFAULT_TIMING.mrts_airtime(len(listed)),
            payload=listed,
            on_end=self._mrts_ended,
        )
        sim.schedule(sched.data_start, self._exchange_data_start)

    def _mrts_ended(self, tx):
        sim = self.sim
        ex = self.exchange
        if ex is None:
            return
        sched, listed = ex["sched"], ex["listed"]
        nav_end = sched.data_start + NAV_GUARD_DURATION
        nbits = phy.mrts_frame(len(listed)).mpdu_bits
        for nid in sim.broadcast_receivers(self.id, tx.start_s):
            ok, _ = sim.decode_ok(tx, nid, nbits)
            if not ok:
                continue
            other = sim.nodes[nid]
            other.nav_until = max(other.nav_until, nav_end)
            if nid in listed and other.state != "EXCHANGE" and not other.transmitting:
                slot = listed.index(nid)
                if sim.cfg.csi_scheme == "RTS_CSI":
                    # receiver-side true SINR, sampled at request reception
                    measured = (
                        sim.link_avg_snr(self.id, nid, sim.now)
                        * sim.gain2(self.id, nid, sim.now)
                        * sim.params.noise_w
                        / (sim.params.noise_w + sim.interference_w(nid))
                    )
                else:
                    measured = None
                sim.schedule(sched.cts_starts[slot], other._send_cts, self.id, slot, sched, measured)

    def _send_cts(self, sender_id, slot, sched, measured):
        """Respond in the assigned slot unless engaged elsewhere."""
        sim = self.sim
        if self.transmitting or self.state == "EXCHANGE":
            return
        payload = (self.id, self.position_at(sim.now), measured)
        sim.transmit(
            self.id,
            "CTS",
            mac.DEFAULT_TIMING.cts_airtime,
            payload=payload,
            on_end=sim.nodes[sender_id]._cts_ended,
        )

    def _cts_ended(self, tx):
        sim = self.sim
        ex = self.exchange
        if ex is None:
            return
        cand_id, cand_pos, measured = tx.payload
        if cand_id not in ex["listed"]:
            return
        ok, _ = sim.decode_ok(tx, self.id, phy.cts_frame().mpdu_bits)
        if not ok:
            return
        if sim.cfg.csi_scheme == "RTS_CSI":
            snr_est = measured
        else:
            snr_est = self._predict_from_pilots(tx, cand_id, ex["sched"])
        ex["responses"][cand_id] = (cand_pos, snr_est)

    def _predict_from_pilots(self, tx, cand_id, sched):
        """Sender-side channel prediction from response-frame pilots."""
        sim = self.sim
        cfg = sim.cfg
        n_p = predictor.PILOTS_PER_CTS
        times = tx.start_s + 3e-6 + np.arange(n_p) * 1e-5
        if cfg.fading:
            h = channel.sample_gains(sim.fading_process(self.id, cand_id), times)
        else:
            h = np.ones(n_p, dtype=np.complex128)
        noise_sd = math.sqrt(10.0 ** (-cfg.pilot_snr_db / 10.0) / 2.0)
        y = h + noise_sd * (
            self.rng_pilot.standard_normal(n_p) + 1j * self.rng_pilot.standard_normal(n_p)
        )
        fd = sim.link_doppler(self.id, cand_id) if cfg.fading else 0.0
        pcfg = predictor.PredictorConfig(
            pilot_snr_db=cfg.pilot_snr_db,
            order=n_p,
            horizon_s=sched.data_start - times[-1],
        )
        w = sim.coeff_cache.get(fd, pcfg)
        avg = sim.link_avg_snr(self.id, cand_id, sched.data_start)
        _, snr_hat = predictor.predict_gain(predictor.PilotBlock(y, times), w, avg)
        return snr_hat

    def _exchange_data_start(self):
        sim = self.sim
        ex = self.exchange
        if ex is None:
            return
        pkt, responses = ex["pkt"], ex["responses"]
        self.exchange = None
        if not responses:
            self._data_attempt_failed(pkt)
            return
        now = sim.now
        d_self = math.dist(self.position_at(now), sim.position(pkt.dst, now))
        rcs = []
        for cand_id in sorted(responses):
            cand_pos, snr_est = responses[cand_id]
            z = d_self - math.dist(cand_pos, sim.position(pkt.dst, now))
            if z > 0:
                rcs.append(mac.RelayCandidate(cand_id, cand_pos, z, snr_est))
        if not rcs:
            self._data_attempt_failed(pkt)
            return
        winner, rate, _ = mac.select_rate_relay(rcs)
        self._transmit_data(pkt, winner.node_id, rate)

    def _transmit_data(self, pkt, winner_id, rate):
        sim = self.sim
        sim.metrics.contention_overhead_s += max(0.0, sim.now - self.attempt_ready_t)
        air = phy.airtime(phy.data_frame(sim.cfg.packet_bytes), rate)
        sim.transmit(
            self.id, "DATA", air, payload=(pkt, winner_id, rate), on_end=self._data_ended
        )

    def _data_ended(self, tx):
        sim = self.sim
        pkt, winner_id, rate = tx.payload
        nbits = 8 * (sim.cfg.packet_bytes + phy.MAC_OVERHEAD_BYTES) + phy.ACK_BITS
        ok, _ = sim.decode_ok(tx, winner_id, nbits, rate)
        sim.metrics.attempt_count += 1
        sim.metrics.attempt_metric_sum += (1.0 if ok else 0.0) / phy.frame_duration(rate)
        if ok:
            sim.schedule(sim.now + phy.SIFS, self._send_ack, winner_id, pkt)
        else:
            sim.schedule(
                sim.now + phy.SIFS + ACK_AIRTIME, self._attempt_resolved, pkt, False, winner_id
            )

    def _send_ack(self, winner_id, pkt):
        self.sim.transmit(
            winner_id,
            "ACK",
            ACK_AIRTIME,
            on_end=lambda tx: self._attempt_resolved(pkt, True, winner_id),
        )

    def _attempt_resolved(self, pkt, success, winner_id):
        sim = self.sim
        if success:
            self.current_packet = None
            self.backoff.reset()
            self._recontend()
            sim.nodes[winner_id].receive_packet(pkt)
        else:
            self._data_attempt_failed(pkt)

    def _data_attempt_failed(self, pkt):
        sim = self.sim
        self.backoff.on_failure()
        if self.backoff.retries > sim.cfg.retry_limit:
            self.current_packet = None
            self.backoff.reset()
            sim.packet_dropped(pkt, "retry_limit")
        self.attempt_ready_t = sim.now
        self.state = "IDLE"
        self.exchange = None
        if self.current_packet is not None:
            self.state = "CONTEND"
            self.slots_remaining = self.backoff.draw_slots(self.rng_mac)
            sim.contenders.add(self.id)
            self._arm(sim.now)
        else:
            self.ensure_contending()

    def receive_packet(self, pkt):
        sim = self.sim
        pkt.hops += 1
        if pkt.dst == self.id:
            sim.packet_delivered(pkt)
            return
        if pkt.hops >= sim.cfg.hop_limit:
            sim.packet_dropped(pkt, "ttl")
            return
        self.enqueue(pkt)


def run(cfg):
    """Execute one scenario; deterministic for a fixed config (incl. seed)."""
    sim = Simulation(cfg)
    metrics = sim.run()
    if sim.trajectory is not None:
        metrics.trajectory = sim.trajectory
    return metrics
