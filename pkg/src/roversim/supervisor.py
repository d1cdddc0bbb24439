"""Command arbitration, the safety clamp, and sonar proximity levels.

The actuation pipeline is fixed: arbitrate between teleoperation and
autonomy, clamp the winner against the sonar scan, publish cmd_vel.
Proximity levels feed the operator's safety display.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

from .simcore import SonarScan
from .world import SonarConfig, Twist, ZERO_TWIST

# Beams consulted by the hard stop: forward motion checks the front
# fan, reverse motion the rear ring. The +/-90 beams are purely lateral
# and belong to neither.
CLAMP_FRONT_DEG = (-50.0, -30.0, -10.0, 10.0, 30.0, 50.0)


class ProximityLevel(enum.Enum):
    SAFE = "safe"
    WARN = "warn"
    DANGER = "danger"

    @property
    def severity(self) -> int:
        return _SEVERITY[self]


_SEVERITY = {ProximityLevel.SAFE: 0, ProximityLevel.WARN: 1, ProximityLevel.DANGER: 2}


@dataclass(frozen=True)
class SupervisorParams:
    """Display thresholds, hard-stop distance, and teleop freshness window."""

    danger_dist: float = 0.5
    warn_dist: float = 1.0
    stop_dist: float = 0.35
    teleop_timeout: float = 0.5

    def __post_init__(self) -> None:
        if not 0 < self.danger_dist < self.warn_dist:
            raise ValueError("require 0 < danger_dist < warn_dist")
        if self.stop_dist <= 0 or self.teleop_timeout <= 0:
            raise ValueError("stop_dist and teleop_timeout must be positive")


@dataclass(frozen=True)
class ControlDecision:
    """Outcome of arbitration: the command, who produced it, estop state."""

    cmd: Twist
    source: str  # "teleop" | "auto" | "none"
    estop: bool


def classify_proximity(
    range_m: float, danger_dist: float = 0.5, warn_dist: float = 1.0
) -> ProximityLevel:
    """DANGER below danger_dist, WARN below warn_dist, SAFE otherwise."""
    if range_m < danger_dist:
        return ProximityLevel.DANGER
    if range_m < warn_dist:
        return ProximityLevel.WARN
    return ProximityLevel.SAFE


def classify_scan(
    scan: SonarScan, params: SupervisorParams = SupervisorParams()
) -> tuple[ProximityLevel, ...]:
    return tuple(
        classify_proximity(r, params.danger_dist, params.warn_dist) for r in scan.ranges
    )


def clamp_for_safety(
    cmd: Twist,
    scan: SonarScan,
    cfg: SonarConfig = SonarConfig(),
    stop_dist: float = 0.35,
) -> Twist:
    """Zero the linear velocity when motion heads into a too-close wall.

    Forward commands stop on the front fan, reverse commands on the
    rear ring; angular velocity always passes through, and reversing
    away from a frontal obstacle stays allowed.
    """
    if cmd.v > 0:
        front = min(scan.ranges[cfg.beam_index(a)] for a in CLAMP_FRONT_DEG)
        if front < stop_dist:
            return Twist(0.0, cmd.w)
    elif cmd.v < 0:
        rear = min(
            r for r, a in zip(scan.ranges, cfg.angles) if abs(a) > 90.0
        )
        if rear < stop_dist:
            return Twist(0.0, cmd.w)
    return cmd


def arbitrate(
    mode: str,
    teleop_cmd: Twist | None,
    teleop_age: float,
    auto_cmd: Twist | None,
    estop: bool,
    timeout: float = 0.5,
) -> ControlDecision:
    """Pick the command source for this tick.

    Estop dominates everything. In teleop mode a stale command is a
    failsafe stop, not a fallback to autonomy; hybrid mode falls back
    to the autonomous command once the teleop stream goes stale.
    """
    if estop:
        return ControlDecision(ZERO_TWIST, "none", True)
    teleop_fresh = teleop_cmd is not None and teleop_age <= timeout
    if mode == "teleop":
        if teleop_fresh:
            return ControlDecision(teleop_cmd, "teleop", False)
        return ControlDecision(ZERO_TWIST, "none", False)
    if mode == "auto":
        if auto_cmd is not None:
            return ControlDecision(auto_cmd, "auto", False)
        return ControlDecision(ZERO_TWIST, "none", False)
    if mode == "hybrid":
        if teleop_fresh:
            return ControlDecision(teleop_cmd, "teleop", False)
        if auto_cmd is not None:
            return ControlDecision(auto_cmd, "auto", False)
        return ControlDecision(ZERO_TWIST, "none", False)
    raise ValueError(f"unknown mode {mode!r}")
