"""Random waypoint kinematics and long-run behavior."""

import math

import numpy as np
import pytest

from adhocsim import mobility


def _walk(seed, arena=500.0, vmax=10.0, pause=2.0, until=2000.0):
    rng = np.random.default_rng(seed)
    state = mobility.initial_state(rng, arena, pause)
    states = [state]
    while state.phase_end < until:
        state = mobility.advance(state, rng, arena, vmax, pause)
        states.append(state)
    return states


def test_phase_start_position():
    states = _walk(1)
    for s in states[1:]:
        assert mobility.position_at(s, s.phase_start) == pytest.approx(s.start)


def test_segment_midpoint():
    s = next(s for s in _walk(2) if s.phase == mobility.MOVING)
    mid_t = 0.5 * (s.phase_start + s.phase_end)
    x, y = mobility.position_at(s, mid_t)
    assert x == pytest.approx(0.5 * (s.start[0] + s.end[0]))
    assert y == pytest.approx(0.5 * (s.start[1] + s.end[1]))


def test_position_matches_stepwise_replay():
    # integrate velocity in small steps and compare against interpolation
    for s in _walk(3)[:40]:
        if s.phase != mobility.MOVING or not math.isfinite(s.phase_end):
            continue
        vx, vy = mobility.velocity_of(s)
        steps = 1000
        dt = (s.phase_end - s.phase_start) / steps
        x, y = s.start
        for k in range(steps):
            x += vx * dt
            y += vy * dt
        t = s.phase_end
        assert mobility.position_at(s, t) == pytest.approx((x, y), abs=1e-6)


def test_positions_stay_in_arena():
    for seed in range(5):
        for s in _walk(seed, arena=400.0):
            for t in np.linspace(s.phase_start, min(s.phase_end, 1e5), 7):
                x, y = mobility.position_at(s, t)
                assert -1e-9 <= x <= 400.0 + 1e-9
                assert -1e-9 <= y <= 400.0 + 1e-9


def test_speeds_strictly_positive_and_bounded():
    for s in _walk(4, vmax=7.5):
        if s.phase == mobility.MOVING:
            assert mobility.MIN_SPEED <= s.speed <= 7.5


def test_deterministic_waypoints():
    a = [(s.end, s.speed) for s in _walk(9)[:30]]
    b = [(s.end, s.speed) for s in _walk(9)[:30]]
    assert a == b


def test_pause_alternation():
    states = _walk(5)
    for prev, cur in zip(states, states[1:]):
        assert prev.phase != cur.phase  # strict MOVING/PAUSED alternation
        if cur.phase == mobility.PAUSED:
            assert cur.phase_end - cur.phase_start == pytest.approx(2.0)


def test_long_run_density_concentrates_toward_center():
    # known waypoint-model property: position density peaks mid-arena
    arena = 500.0
    center = np.array([arena / 2, arena / 2])
    rng = np.random.default_rng(123)
    samples = []
    for seed in range(30):
        states = _walk(seed + 100, arena=arena, until=3000.0)
        for s in states:
            if s.phase == mobility.MOVING:
                t = rng.uniform(s.phase_start, s.phase_end)
                samples.append(mobility.position_at(s, t))
    d_rwp = np.linalg.norm(np.array(samples) - center, axis=1).mean()
    uniform = rng.uniform(0, arena, size=(len(samples), 2))
    d_uni = np.linalg.norm(uniform - center, axis=1).mean()
    assert d_rwp < 0.97 * d_uni
