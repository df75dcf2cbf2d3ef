"""Random waypoint mobility: move to a uniform waypoint at a uniform speed,
pause, repeat. Positions interpolate linearly inside a phase, so the engine
can query them at any event time."""

import math
from dataclasses import dataclass

MOVING = "MOVING"
PAUSED = "PAUSED"

# open-interval guard: (0, v_max] read literally stalls at v ~ 0
MIN_SPEED = 0.01


@dataclass(frozen=True)
class RwpState:
    start: tuple  # (x, y) at phase_start
    end: tuple  # waypoint being approached (== start while paused)
    speed: float
    phase: str
    phase_start: float
    phase_end: float


def initial_state(rng, arena_m, pause_s, now=0.0):
    """Start paused at a uniform random position."""
    pos = (rng.uniform(0.0, arena_m), rng.uniform(0.0, arena_m))
    return RwpState(pos, pos, 0.0, PAUSED, now, now + pause_s)


def position_at(state, t):
    if state.phase == PAUSED or state.phase_end <= state.phase_start:
        return state.start
    f = (t - state.phase_start) / (state.phase_end - state.phase_start)
    f = min(max(f, 0.0), 1.0)
    return (
        state.start[0] + f * (state.end[0] - state.start[0]),
        state.start[1] + f * (state.end[1] - state.start[1]),
    )


def velocity_of(state):
    if state.phase == PAUSED:
        return (0.0, 0.0)
    dx = state.end[0] - state.start[0]
    dy = state.end[1] - state.start[1]
    d = math.hypot(dx, dy)
    if d == 0.0:
        return (0.0, 0.0)
    return (state.speed * dx / d, state.speed * dy / d)


def advance(state, rng, arena_m, v_max, pause_s):
    """Transition at phase end: PAUSED -> MOVING to a new waypoint, or
    MOVING -> PAUSED at the reached waypoint."""
    now = state.phase_end
    if state.phase == MOVING:
        return RwpState(state.end, state.end, 0.0, PAUSED, now, now + pause_s)
    target = (rng.uniform(0.0, arena_m), rng.uniform(0.0, arena_m))
    speed = rng.uniform(MIN_SPEED, v_max) if v_max > MIN_SPEED else MIN_SPEED
    d = math.hypot(target[0] - state.end[0], target[1] - state.end[1])
    travel = d / speed if speed > 0 else float("inf")
    return RwpState(state.end, target, speed, MOVING, now, now + travel)
