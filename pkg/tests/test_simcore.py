"""Event engine: scenario config, reception, conservation, determinism."""

from dataclasses import replace

import numpy as np
import pytest

from adhocsim import phy80211b as phy, simcore


# ---- configuration -------------------------------------------------------------


def test_config_text_round_trip():
    cfg = simcore.config_from_text(
        """
        node_count = 6
        arena_m = 250
        csi_scheme = RTS_CSI   # trailing comment
        fading = off
        flow_count = 2
        static_positions = 0,0; 10,5; 20,0; 30,0; 40,0; 50,0
        """
    )
    assert cfg.node_count == 6
    assert cfg.csi_scheme == "RTS_CSI"
    assert cfg.fading is False
    assert cfg.static_positions[1] == (10.0, 5.0)


def test_config_rejects_unknown_key():
    with pytest.raises(ValueError, match="unknown config key"):
        simcore.config_from_text("node_count = 5\nbogus_key = 1\n")


def test_config_rejects_bad_values():
    with pytest.raises(ValueError):
        simcore.config_from_text("fading = maybe")
    with pytest.raises(ValueError):
        simcore.config_from_text("csi_scheme = MAGIC")
    with pytest.raises(ValueError):
        simcore.ScenarioConfig(node_count=4, flow_count=3)
    with pytest.raises(ValueError):
        simcore.ScenarioConfig(warmup_start_s=50.0, warmup_end_s=20.0)


def test_full_scale_preset():
    cfg = simcore.full_scale_config(seed=7)
    assert (cfg.node_count, cfg.arena_m, cfg.flow_count, cfg.sim_end_s) == (50, 500.0, 10, 1000.0)
    assert cfg.seed == 7


# ---- small closed-loop scenarios ----------------------------------------------------


def _two_node_cfg(**kw):
    base = dict(
        node_count=2,
        flow_count=1,
        csi_scheme="IDEAL",
        fading=False,
        static_positions=((0.0, 0.0), (150.0, 0.0)),
        sim_end_s=60.0,
        warmup_start_s=4.0,
        warmup_end_s=4.0,
        relay_count=1,
        seed=3,
    )
    base.update(kw)
    return simcore.ScenarioConfig(**base)


def test_clean_link_delivers_offered_load():
    m = simcore.run(_two_node_cfg())
    assert m.packet_delivery_ratio > 0.99
    assert m.throughput_pps == pytest.approx(4.0, rel=0.02)
    assert m.mean_hops == pytest.approx(1.0)
    assert m.mean_delay_s < 3e-3


def test_zero_flows_reports_unit_pdr():
    m = simcore.run(_two_node_cfg(flow_count=0))
    assert m.sent == 0 and m.delivered == 0
    assert m.packet_delivery_ratio == 1.0
    assert m.throughput_pps == 0.0


def test_same_seed_bit_identical():
    cfg = simcore.ScenarioConfig(sim_end_s=60.0, warmup_end_s=30.0, seed=11, v_max_mps=15.0)
    a, b = simcore.run(cfg), simcore.run(cfg)
    assert a.csv_row(cfg) == b.csv_row(cfg)
    assert (a.sent, a.delivered, a.delay_sum_s, a.hop_sum, a.drops) == (
        b.sent,
        b.delivered,
        b.delay_sum_s,
        b.hop_sum,
        b.drops,
    )


def test_different_seed_differs():
    cfg1 = simcore.ScenarioConfig(sim_end_s=60.0, warmup_end_s=30.0, seed=11, v_max_mps=15.0)
    cfg2 = replace(cfg1, seed=12)
    a, b = simcore.run(cfg1), simcore.run(cfg2)
    assert a.csv_row(cfg1) != b.csv_row(cfg2)


def test_packet_conservation():
    cfg = simcore.ScenarioConfig(
        sim_end_s=90.0, warmup_end_s=45.0, seed=5, v_max_mps=20.0, packet_interval_s=0.05
    )
    m = simcore.run(cfg)
    assert m.sent > 0
    assert m.sent == m.delivered + sum(m.drops.values())
    assert 0.0 <= m.packet_delivery_ratio <= 1.0


def test_measurement_window_semantics():
    cfg = simcore.ScenarioConfig(sim_end_s=80.0, warmup_start_s=20.0, warmup_end_s=40.0)
    sim = simcore.Simulation(cfg)
    assert sim.metrics.measure_window_s == pytest.approx(60.0)


# ---- interference and reception --------------------------------------------------------


def test_interference_sums_received_powers():
    cfg = _two_node_cfg(node_count=5, flow_count=1,
                        static_positions=((0, 0), (100, 0), (200, 0), (0, 150), (300, 300)))
    sim = simcore.Simulation(cfg)
    # hand-planted concurrent transmissions with known received powers
    powers = {1: 2e-13, 2: 5e-13, 3: 1e-12}
    for sender, p in powers.items():
        tx = simcore.Transmission(100 + sender, sender, "DATA", 0.0, 1.0)
        tx.rx_power_cache[0] = p
        sim.active_tx[tx.tx_id] = tx
    assert sim.interference_w(0) == pytest.approx(sum(powers.values()), rel=1e-12)
    # excluding the wanted transmission leaves the other two
    keep = sim.active_tx[101]
    assert sim.interference_w(0, exclude_tx=keep) == pytest.approx(1.5e-12, rel=1e-12)


def test_interference_zero_without_transmitters():
    sim = simcore.Simulation(_two_node_cfg())
    assert sim.interference_w(0) == 0.0


def test_reception_matches_packet_success_probability():
    """Frame decision over many trials follows the analytic success curve."""
    cfg = _two_node_cfg(fading=False)
    sim = simcore.Simulation(cfg)
    tx = simcore.Transmission(999, 0, "DATA", 0.0, 1e-3)
    tx.interferers = ()
    tx.busy_senders = frozenset()
    tx.rx_power_cache[1] = 26.0 * sim.params.noise_w  # plant SINR = 26
    expect = phy.packet_success_prob(phy.R5_5, 26.0, 2384)
    assert 0.05 < expect < 0.95  # informative operating point
    trials = 100_000
    wins = sum(sim.decode_ok(tx, 1, 2384, phy.R5_5)[0] for _ in range(trials))
    emp = wins / trials
    assert abs(emp - expect) < 0.01


def test_half_duplex_blocks_reception():
    sim = simcore.Simulation(_two_node_cfg())
    tx = simcore.Transmission(1, 0, "DATA", 0.0, 1e-3)
    tx.busy_senders = frozenset({1})
    ok, snr = sim.decode_ok(tx, 1, 2384, phy.R11)
    assert not ok and snr == 0.0


# ---- event-log audits ---------------------------------------------------------------------


def _line_topology_run(**kw):
    base = dict(
        node_count=4,
        flow_count=1,
        csi_scheme="CTS_CSI",
        fading=True,
        doppler_override_hz=30.0,
        static_positions=((0.0, 0.0), (120.0, 0.0), (240.0, 0.0), (360.0, 0.0)),
        sim_end_s=40.0,
        warmup_start_s=2.0,
        warmup_end_s=2.0,
        relay_count=2,
        seed=21,
        log_events=True,
    )
    base.update(kw)
    return simcore.run(simcore.ScenarioConfig(**base))


def test_event_times_monotone():
    m = _line_topology_run()
    times = [e[0] for e in m.events]
    assert all(a <= b + 1e-12 for a, b in zip(times, times[1:]))


def test_no_contention_grant_while_medium_busy():
    """All nodes sit within carrier-sense range of each other here, so no
    contention-granted frame (HELLO/MRTS or a genie DATA) may start while
    any other transmission is on the air."""
    m = _line_topology_run()
    active = {}
    granted_kinds = {"HELLO", "MRTS"}
    for t, node, event, frame, peer, snr in m.events:
        if event == "TX_START":
            if frame in granted_kinds:
                others = [k for k in active.values() if k[0] != node]
                assert not others, f"{frame} from {node} at {t} during {others}"
            active[node] = (node, frame, t)
        elif event == "TX_END":
            active.pop(node, None)


def test_responders_defer_inside_exchange_windows():
    """Nodes that decoded the request stay quiet through the response phase
    (virtual carrier sense): no HELLO/MRTS start in another sender's
    exchange window."""
    m = _line_topology_run(sim_end_s=60.0)
    windows = []  # (start, data_start, sender)
    open_mrts = {}
    for t, node, event, frame, peer, snr in m.events:
        if event == "TX_START" and frame == "MRTS":
            open_mrts[node] = t
        elif event == "TX_START" and frame == "DATA" and node in open_mrts:
            windows.append((open_mrts.pop(node), t, node))
    assert windows, "expected at least one full exchange"
    for t, node, event, frame, peer, snr in m.events:
        if event == "TX_START" and frame in ("HELLO", "MRTS"):
            for lo, hi, sender in windows:
                if sender != node:
                    assert not (lo < t < hi), (
                        f"{frame} from {node} at {t} inside exchange ({lo}, {hi})"
                    )


def test_exchange_timeline_matches_slot_arithmetic():
    """MRTS end -> CTS slots -> DATA start spacing reproduces the nominal
    schedule for a fully-received exchange."""
    m = _line_topology_run(sim_end_s=80.0)
    from adhocsim import mac

    by_sender = {}
    for t, node, event, frame, peer, snr in m.events:
        if event == "TX_START" and frame == "MRTS":
            by_sender[node] = {"mrts_start": t, "cts": []}
        elif event == "TX_START" and frame == "CTS":
            for rec in by_sender.values():
                rec["cts"].append(t)
        elif event == "TX_START" and frame == "DATA" and node in by_sender:
            rec = by_sender.pop(node)
            n_cts = len(rec["cts"])
            if n_cts == 0:
                continue
            sched = mac.exchange_schedule(rec["mrts_start"], 2)
            assert t == pytest.approx(sched.data_start, abs=1e-9)
            for got in rec["cts"]:
                assert any(abs(got - s) < 1e-9 for s in sched.cts_starts)
            return
    pytest.skip("no complete exchange with responses in the window")


def test_ideal_scheme_skips_the_handshake():
    """Genie CSI needs no polling: the transcript carries no request or
    response frames, only HELLO/DATA/ACK."""
    m = _line_topology_run(csi_scheme="IDEAL")
    kinds = {e[3] for e in m.events if e[2] == "TX_START"}
    assert "MRTS" not in kinds and "CTS" not in kinds
    assert "DATA" in kinds


def test_trajectory_dump():
    cfg = simcore.ScenarioConfig(
        node_count=3, flow_count=1, sim_end_s=30.0, warmup_start_s=2.0,
        warmup_end_s=10.0, v_max_mps=15.0, seed=2, log_trajectory=True,
    )
    m = simcore.run(cfg)
    assert m.trajectory[0][0] == 0.0
    assert len({row[1] for row in m.trajectory}) == 3
    # initial positions plus at least the first pause-end transition each
    assert len(m.trajectory) >= 6
    assert any(row[0] > 0.0 for row in m.trajectory)


def test_dense_topology_rarely_hits_local_maxima():
    """In the dense full-scale 50-node topology greedy forwarding almost never
    strands a packet: no-progress drops stay under 2% of forwarding
    decisions."""
    cfg = simcore.full_scale_config(seed=3, sim_end_s=150.0, warmup_end_s=60.0, v_max_mps=10.0)
    m = simcore.run(cfg)
    decisions = m.delivered * max(m.mean_hops, 1.0) + sum(m.drops.values())
    assert m.sent > 1000
    assert m.drops["no_progress"] / decisions < 0.02


# ---- aggregation ----------------------------------------------------------------------------


def test_aggregate_identical_runs_zero_width():
    m = simcore.RunMetrics(sent=10, delivered=8, measure_window_s=10.0)
    agg = simcore.aggregate([m, m, m])
    mean, lo, hi = agg["throughput_pps"]
    assert mean == pytest.approx(0.8)
    assert lo == pytest.approx(mean) and hi == pytest.approx(mean)


def test_aggregate_two_run_mean():
    a = simcore.RunMetrics(sent=10, delivered=4, measure_window_s=1.0)
    b = simcore.RunMetrics(sent=10, delivered=8, measure_window_s=1.0)
    agg = simcore.aggregate([a, b])
    assert agg["throughput_pps"][0] == pytest.approx(6.0)


def test_aggregate_requires_two_runs():
    with pytest.raises(ValueError):
        simcore.aggregate([simcore.RunMetrics()])


def test_aggregate_interval_coverage():
    """95% Student-t intervals cover the true mean ~95% of the time."""
    rng = np.random.default_rng(17)
    n_runs, n_rep, covered = 8, 400, 0
    for _ in range(n_rep):
        ms = []
        for _ in range(n_runs):
            m = simcore.RunMetrics(measure_window_s=1.0)
            m.delivered = 0
            m.sent = 1
            m.delay_sum_s = 0.0
            # plant a Gaussian metric through the throughput channel
            m.delivered = 1
            m.measure_window_s = 1.0 / max(rng.normal(10.0, 2.0), 0.1)
            ms.append(m)
        mean, lo, hi = simcore.aggregate(ms)["throughput_pps"]
        if lo <= 10.0 <= hi:
            covered += 1
    assert 0.91 <= covered / n_rep <= 0.985
