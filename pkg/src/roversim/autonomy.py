"""Wall-following controller.

A four-phase state machine that acquires a wall and then holds a fixed
lateral distance at constant nominal speed:

    FIND_WALL   drive straight until a wall shows up ahead or beside
    FOLLOW      P-control on (distance error, wall angle) from the two
                side sonars; constant forward speed
    TURN_INNER  rotate in place away from the wall when blocked ahead
    TURN_OUTER  arc back toward the wall side when the wall falls away
                (outer corner)

Transitions are evaluated first, then the command of the resulting
phase is emitted, so the tick that detects a corner already carries the
turn command.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .simcore import SonarScan
from .world import RobotGeometry, SonarConfig, Twist

# Beams steering the follower: the side pair estimates the wall line,
# the front set detects blockage ahead.
SIDE_BEAM_DEG = 90.0
SIDE_PAIR_DEG = 50.0
FRONT_SET_DEG = (-30.0, -10.0, 10.0, 30.0)

# Extra front clearance required to leave TURN_INNER; prevents corner chatter.
TURN_EXIT_HYSTERESIS = 0.1

_GAMMA = math.radians(SIDE_BEAM_DEG - SIDE_PAIR_DEG)


class Phase(enum.Enum):
    FIND_WALL = "find_wall"
    FOLLOW = "follow"
    TURN_INNER = "turn_inner"
    TURN_OUTER = "turn_outer"


@dataclass(frozen=True)
class FollowerParams:
    """Gains and thresholds; defaults tuned for the bundled rooms."""

    side: str = "right"
    d_des: float = 0.5
    k_d: float = 1.2
    k_theta: float = 2.0
    v_nom: float = 0.4
    front_thresh: float = 0.6
    lost_thresh: float = 2.0
    w_turn: float = 0.8
    arc_v: float = 0.25
    arc_w: float = 0.5

    def __post_init__(self) -> None:
        if self.side not in ("left", "right"):
            raise ValueError(f"side must be 'left' or 'right', got {self.side!r}")
        for name in ("d_des", "k_d", "k_theta", "v_nom", "front_thresh",
                     "lost_thresh", "w_turn", "arc_v", "arc_w"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.d_des < self.lost_thresh:
            raise ValueError("require d_des < lost_thresh")


@dataclass(frozen=True)
class FollowerState:
    phase: Phase = Phase.FIND_WALL


def estimate_wall(d1: float, d2: float, gamma: float = _GAMMA) -> tuple[float, float]:
    """Wall angle and perpendicular distance from two side-sonar ranges.

    d1 is the range on the 90-degree side beam, d2 the range on the
    50-degree beam, gamma the angle between them. Returns (alpha,
    d_perp): alpha is the robot heading relative to the wall (positive
    when veering away from a right-side wall) and d_perp the
    perpendicular wall distance.
    """
    alpha = math.atan2(d2 * math.cos(gamma) - d1, d2 * math.sin(gamma))
    return alpha, d1 * math.cos(alpha)


def follower_step(
    state: FollowerState,
    scan: SonarScan,
    params: FollowerParams,
    cfg: SonarConfig = SonarConfig(),
    geom: RobotGeometry = RobotGeometry(),
) -> tuple[FollowerState, Twist]:
    """One control tick: advance the phase machine, emit a velocity command."""
    # Right-side following reads the negative-angle beams; left mirrors.
    mirror = -1.0 if params.side == "right" else 1.0
    side90 = scan.ranges[cfg.beam_index(mirror * SIDE_BEAM_DEG)]
    side50 = scan.ranges[cfg.beam_index(mirror * SIDE_PAIR_DEG)]
    front = min(scan.ranges[cfg.beam_index(a)] for a in FRONT_SET_DEG)

    phase = state.phase
    if phase is Phase.FIND_WALL:
        if front < params.front_thresh:
            phase = Phase.TURN_INNER
        elif side90 < params.lost_thresh:
            phase = Phase.FOLLOW
    elif phase is Phase.FOLLOW:
        if front < params.front_thresh:
            phase = Phase.TURN_INNER
        elif side90 > params.lost_thresh:
            phase = Phase.TURN_OUTER
    elif phase is Phase.TURN_INNER:
        if front > params.front_thresh + TURN_EXIT_HYSTERESIS:
            phase = Phase.FOLLOW
    elif phase is Phase.TURN_OUTER:
        if side90 < params.lost_thresh:
            phase = Phase.FOLLOW

    if phase is Phase.FIND_WALL:
        cmd = Twist(params.v_nom, 0.0)
    elif phase is Phase.FOLLOW:
        if side50 > params.lost_thresh:
            # The forward side beam has run past a corner; the two-beam
            # estimate is invalid, so hold course until the 90-degree
            # beam confirms the wall is lost (TURN_OUTER) or reacquires.
            cmd = Twist(params.v_nom, 0.0)
        else:
            alpha, d_perp = estimate_wall(side90, side50)
            w = mirror * (params.k_d * (d_perp - params.d_des) + params.k_theta * alpha)
            w = min(geom.w_max, max(-geom.w_max, w))
            cmd = Twist(params.v_nom, w)
    elif phase is Phase.TURN_INNER:
        # Rotate away from the followed wall: CCW off a right wall.
        cmd = Twist(0.0, -mirror * params.w_turn)
    else:
        cmd = Twist(params.arc_v, mirror * params.arc_w)
    return FollowerState(phase), cmd
