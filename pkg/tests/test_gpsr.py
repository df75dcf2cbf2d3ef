"""Neighbor table maintenance and greedy candidate ranking."""

import math

import pytest

from adhocsim import gpsr, phy80211b as phy


def test_first_hello_seeds_average():
    t = gpsr.NeighborTable()
    t.process_hello(3, (10.0, 0.0), 42.0, now=0.0)
    assert t.entries[3].avg_sinr == pytest.approx(42.0)


def test_constant_measurements_converge():
    t = gpsr.NeighborTable()
    for k in range(200):
        t.process_hello(1, (0.0, 0.0), 17.0, now=1.5 * k)
    assert t.entries[1].avg_sinr == pytest.approx(17.0, rel=1e-9)


def test_alternating_measurements_two_cycle():
    # EMA driven by a,b,a,b,... converges to a two-cycle with closed form
    a, b, alpha = 30.0, 10.0, gpsr.EMA_ALPHA
    t = gpsr.NeighborTable()
    val_after_a = None
    val_after_b = None
    for k in range(500):
        t.process_hello(1, (0.0, 0.0), a if k % 2 == 0 else b, now=0.1 * k)
        if k % 2 == 0:
            val_after_a = t.entries[1].avg_sinr
        else:
            val_after_b = t.entries[1].avg_sinr
    beta = 1.0 - alpha
    xa = (alpha * a + beta * alpha * b) / (1.0 - beta * beta)
    xb = (alpha * b + beta * alpha * a) / (1.0 - beta * beta)
    assert val_after_a == pytest.approx(xa, rel=1e-9)
    assert val_after_b == pytest.approx(xb, rel=1e-9)


def test_entries_expire_after_three_intervals():
    t = gpsr.NeighborTable(hello_interval_s=1.5)
    t.process_hello(1, (5.0, 5.0), 10.0, now=0.0)
    assert t.candidate_list((0.0, 0.0), (100.0, 0.0), 2, now=4.4)
    assert not t.candidate_list((0.0, 0.0), (100.0, 0.0), 2, now=4.6)
    t.expire(now=4.6)
    assert 1 not in t.entries


def test_candidate_destination_ranks_with_full_progress():
    t = gpsr.NeighborTable()
    t.process_hello(9, (100.0, 0.0), 20.0, now=0.0)  # the destination itself
    cands = t.candidate_list((0.0, 0.0), (100.0, 0.0), 3, now=0.1)
    assert len(cands) == 1
    entry, progress = cands[0]
    assert entry.node_id == 9
    assert progress == pytest.approx(100.0)


def test_local_maximum_returns_empty():
    t = gpsr.NeighborTable()
    t.process_hello(1, (-50.0, 0.0), 50.0, now=0.0)  # behind us
    t.process_hello(2, (0.0, -40.0), 50.0, now=0.0)  # sideways-backward
    assert t.candidate_list((0.0, 0.0), (100.0, 0.0), 4, now=0.1) == []


def test_candidate_ranking_brute_force():
    t = gpsr.NeighborTable()
    self_pos, dest = (0.0, 0.0), (200.0, 0.0)
    neighbors = {
        1: ((60.0, 10.0), 30.0),
        2: ((90.0, -20.0), 8.0),
        3: ((30.0, 0.0), 200.0),
        4: ((120.0, 40.0), 2.0),
        5: ((-20.0, 0.0), 500.0),  # negative progress, excluded
    }
    for nid, (pos, snr) in neighbors.items():
        t.process_hello(nid, pos, snr, now=0.0)

    expected = []
    d_self = math.dist(self_pos, dest)
    for nid, (pos, snr) in neighbors.items():
        z = d_self - math.dist(pos, dest)
        if z <= 0:
            continue
        lam = max(
            phy.packet_success_prob(r, snr, phy.DATA_EXCHANGE_BITS) / d
            for r, d in zip(phy.RATES, phy.DURATIONS)
        )
        expected.append((-z * lam, nid))
    expected.sort()
    want = [nid for _, nid in expected[:3]]

    got = [e.node_id for e, _ in t.candidate_list(self_pos, dest, 3, now=0.1)]
    assert got == want


def test_candidate_list_bounded_and_positive_progress():
    t = gpsr.NeighborTable()
    for nid in range(10):
        t.process_hello(nid, (10.0 * nid + 5.0, 0.0), 25.0, now=0.0)
    cands = t.candidate_list((0.0, 0.0), (500.0, 0.0), 4, now=0.1)
    assert len(cands) == 4
    for entry, progress in cands:
        assert progress > 0.0  # loop freedom of greedy forwarding


def test_candidate_list_rejects_bad_limit():
    with pytest.raises(ValueError):
        gpsr.NeighborTable().candidate_list((0, 0), (1, 1), 0, now=0.0)
