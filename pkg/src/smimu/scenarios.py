"""
Named motion scenarios.

Every scenario is a plain profile spec (see
:func:`smimu.simulation.profile_from_spec`), so it can be written to YAML,
passed to ``RunConfig.simulate`` by name, or edited by hand.

All scenarios start from rest. A rate that is already nonzero at the first
epoch has an unobservable sign for the symmetric solver (the pair differences
are even in the rate), so motion always ramps up from zero.
"""

from __future__ import annotations

import copy

import numpy as np

from .exceptions import InvalidProfile


def piecewise_yaw(
    rate: float = 0.5, segment: float = 5.0, cycles: int = 6, ramp: float = 0.5
) -> dict:
    """Alternating still / constant-yaw-rate segments, half of the time
    rotating. The turn direction alternates between cycles."""
    segs = []
    for k in range(cycles):
        sign = 1.0 if k % 2 == 0 else -1.0
        segs.append({"duration": segment, "omega": [0.0, 0.0, 0.0], "ramp": ramp})
        segs.append({"duration": segment, "omega": [0.0, 0.0, sign * rate], "ramp": ramp})
    return {"type": "piecewise", "segments": segs}


def _car_turns(speed: float = 8.0) -> dict:
    # accelerate, cruise, turn with lateral acceleration v * omega, brake
    segs = []
    for k in range(10):
        sign = 1.0 if k % 2 == 0 else -1.0
        turn = 0.3 * sign
        segs += [
            {"duration": 5.0, "omega": [0, 0, 0], "accel": [1.6, 0, 0], "ramp": 1.0},
            {"duration": 8.0, "omega": [0, 0, 0], "ramp": 1.0},
            {"duration": 6.0, "omega": [0, 0, turn], "accel": [0, speed * turn, 0], "ramp": 1.5},
            {"duration": 5.0, "omega": [0, 0, 0], "accel": [-1.6, 0, 0], "ramp": 1.0},
            {"duration": 6.0, "omega": [0, 0, 0], "ramp": 1.0},
        ]
    return {"type": "piecewise", "segments": segs}


def _quad_square() -> dict:
    # fly a square: pitch into each leg, cruise, pitch back, hover and turn 90 deg
    segs = []
    for k in range(12):
        segs += [
            {"duration": 1.0, "omega": [0, 0.35, 0], "accel": [1.5, 0, 0], "ramp": 0.5},
            {"duration": 1.0, "omega": [0, -0.35, 0], "accel": [1.5, 0, 0], "ramp": 0.5},
            {"duration": 8.0, "omega": [0, 0, 0], "ramp": 0.5},
            {"duration": 1.0, "omega": [0, -0.35, 0], "accel": [-1.5, 0, 0], "ramp": 0.5},
            {"duration": 1.0, "omega": [0, 0.35, 0], "accel": [-1.5, 0, 0], "ramp": 0.5},
            {"duration": 4.0, "omega": [0, 0, 0], "ramp": 0.5},
            {"duration": 2.5, "omega": [0, 0, 0.8], "ramp": 0.5},
            {"duration": 6.5, "omega": [0, 0, 0], "ramp": 0.5},
        ]
    return {"type": "piecewise", "segments": segs}


def _pedestrian() -> dict:
    # gait-band sway and bounce on top of slow heading changes
    return {
        "type": "sum",
        "components": [
            {"type": "sinusoid", "axis": "roll", "amp": 0.15, "freq": 0.9},
            {"type": "sinusoid", "axis": "pitch", "amp": 0.2, "freq": 1.8},
            {"type": "sinusoid", "axis": "yaw", "amp": 0.3, "freq": 0.05},
            {"type": "accel_sinusoid", "axis": "z", "amp": 1.5, "freq": 1.8, "phase": 0.3},
            {"type": "accel_sinusoid", "axis": "x", "amp": 0.4, "freq": 0.9},
        ],
    }


def _sea_state() -> dict:
    # slow roll and pitch swell
    return {
        "type": "sum",
        "components": [
            {"type": "sinusoid", "axis": "roll", "amp": 0.08, "freq": 0.12},
            {"type": "sinusoid", "axis": "pitch", "amp": 0.05, "freq": 0.17, "phase": np.pi},
            {"type": "accel_sinusoid", "axis": "z", "amp": 0.3, "freq": 0.12},
        ],
    }


def _tumble() -> dict:
    return {
        "type": "sum",
        "components": [
            {"type": "sinusoid", "axis": "x", "amp": 0.8, "freq": 0.13},
            {"type": "sinusoid", "axis": "y", "amp": 0.7, "freq": 0.07},
            {"type": "sinusoid", "axis": "z", "amp": 1.0, "freq": 0.05},
        ],
    }


SCENARIOS = {
    "static": lambda: {"type": "static"},
    "piecewise_yaw": piecewise_yaw,
    "car_turns": _car_turns,
    "quad_square": _quad_square,
    "pedestrian": _pedestrian,
    "sea_state": _sea_state,
    "tumble": _tumble,
}

# the comparison suite: six trajectories of mixed dynamics
MIXED_SUITE = ("static", "piecewise_yaw", "car_turns", "quad_square", "pedestrian", "tumble")


def scenario(name: str) -> dict:
    """Profile spec of a named scenario (a fresh copy)."""
    if name not in SCENARIOS:
        raise InvalidProfile(f"unknown scenario {name!r}; known: {', '.join(SCENARIOS)}")
    return copy.deepcopy(SCENARIOS[name]())


def random_motion(rng: np.random.Generator, max_rate: float = 2.0, n_terms: int = 3) -> dict:
    """
    Random smooth rotation: a sum of per-axis sinusoids whose phases make the
    rate zero at ``t = 0``.

    Each axis gets ``n_terms`` components, with amplitudes scaled so that the
    rate norm can never exceed ``max_rate``.
    """
    comps = []
    budget = max_rate / np.sqrt(3.0) / n_terms
    for axis in range(3):
        for _ in range(n_terms):
            amp = float(rng.uniform(0.2, 1.0) * budget)
            freq = float(rng.uniform(0.05, 1.5))
            # sin(2*pi*f*t + phi) with phi = 0 or pi starts at zero
            phase = float(np.pi * rng.integers(0, 2))
            comps.append({"type": "sinusoid", "axis": axis, "amp": amp, "freq": freq, "phase": phase})
    return {"type": "sum", "components": comps}
