"""Deterministic fixed-timestep robot simulation.

Unicycle kinematics with an exact-arc update, sonar ray casting against
the segment map, disc collision checks, and noiseless odometry. All
state is immutable; `step` maps one SimState to the next.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .world import NUM_SONARS, Pose, RobotGeometry, SonarConfig, Twist, WorldMap

# Below this |w| the arc update degenerates; use the straight-line form.
_W_STRAIGHT = 1e-9


@dataclass(frozen=True)
class SonarScan:
    """One ring of 16 range readings, meters, taken at sim time t_sim."""

    ranges: tuple[float, ...]
    t_sim: float = 0.0

    def __post_init__(self) -> None:
        ranges = tuple(float(r) for r in self.ranges)
        if len(ranges) != NUM_SONARS:
            raise ValueError(f"expected {NUM_SONARS} ranges, got {len(ranges)}")
        object.__setattr__(self, "ranges", ranges)


@dataclass(frozen=True)
class SimState:
    """Snapshot of the simulation at one tick.

    pose is ground truth; odom integrates the commanded motion and is
    identical to pose until a collision freezes the body. collided
    latches once set.
    """

    pose: Pose
    odom: Pose
    scan: SonarScan
    t_sim: float
    tick: int
    collided: bool


def integrate_unicycle(pose: Pose, cmd: Twist, dt: float) -> Pose:
    """Advance a pose by (v, w) for dt seconds using the exact arc.

    theta' = theta + w*dt; for |w| ~ 0 the straight-line limit applies,
    otherwise x' = x + (v/w)(sin theta' - sin theta) and
    y' = y - (v/w)(cos theta' - cos theta).
    """
    if not (dt > 0.0) or not math.isfinite(dt):
        raise ValueError(f"dt must be positive and finite, got {dt!r}")
    if abs(cmd.w) < _W_STRAIGHT:
        return Pose(
            pose.x + cmd.v * dt * math.cos(pose.theta),
            pose.y + cmd.v * dt * math.sin(pose.theta),
            pose.theta,
        )
    theta1 = pose.theta + cmd.w * dt
    radius = cmd.v / cmd.w
    return Pose(
        pose.x + radius * (math.sin(theta1) - math.sin(pose.theta)),
        pose.y - radius * (math.cos(theta1) - math.cos(pose.theta)),
        theta1,
    )


def raycast(
    origin: tuple[float, float],
    direction: float,
    world: WorldMap,
    max_range: float,
) -> float | None:
    """Distance along the ray from origin to the nearest wall, or None.

    Returns the smallest t in [0, max_range] with origin + t*(cos d, sin d)
    on some segment. Rays exactly parallel to a segment never hit it.
    """
    ox, oy = origin
    dx = math.cos(direction)
    dy = math.sin(direction)
    best: float | None = None
    limit = max_range
    for seg in world.segments:
        ex = seg.bx - seg.ax
        ey = seg.by - seg.ay
        denom = dx * ey - dy * ex
        if denom == 0.0:
            continue
        rx = seg.ax - ox
        ry = seg.ay - oy
        t = (rx * ey - ry * ex) / denom
        if not 0.0 <= t <= limit:
            continue
        s = (rx * dy - ry * dx) / denom
        if 0.0 <= s <= 1.0:
            best = t
            limit = t
    return best


def scan_sonars(pose: Pose, cfg: SonarConfig, world: WorldMap, t_sim: float = 0.0) -> SonarScan:
    """Cast all 16 beams from the pose; misses and clamps hit max/min range."""
    ranges = []
    for angle_deg in cfg.angles:
        beam = pose.theta + math.radians(angle_deg)
        origin = (
            pose.x + cfg.mount_radius * math.cos(beam),
            pose.y + cfg.mount_radius * math.sin(beam),
        )
        hit = raycast(origin, beam, world, cfg.max_range)
        if hit is None:
            ranges.append(cfg.max_range)
        else:
            ranges.append(min(cfg.max_range, max(cfg.min_range, hit)))
    return SonarScan(tuple(ranges), t_sim)


def check_collision(pose: Pose, geom: RobotGeometry, world: WorldMap) -> bool:
    """True iff the body disc overlaps any wall (strict inequality)."""
    return world.clearance(pose.x, pose.y) < geom.body_radius


def init_state(world: WorldMap, cfg: SonarConfig) -> SimState:
    """SimState at tick 0: robot at the map start pose, odometry aligned."""
    scan = scan_sonars(world.start, cfg, world, 0.0)
    return SimState(world.start, world.start, scan, 0.0, 0, False)


def step(
    state: SimState,
    cmd: Twist,
    geom: RobotGeometry,
    cfg: SonarConfig,
    world: WorldMap,
    dt: float,
) -> SimState:
    """Advance the simulation one fixed timestep.

    The command is clamped to the geometry limits. If the candidate pose
    would collide, the body freezes in place and the collided flag
    latches; odometry integrates the clamped command regardless.
    """
    if not (dt > 0.0) or not math.isfinite(dt):
        raise ValueError(f"dt must be positive and finite, got {dt!r}")
    clamped = Twist(
        min(geom.v_max, max(-geom.v_max, cmd.v)),
        min(geom.w_max, max(-geom.w_max, cmd.w)),
    )
    candidate = integrate_unicycle(state.pose, clamped, dt)
    collided = state.collided
    if check_collision(candidate, geom, world):
        pose = state.pose
        collided = True
    else:
        pose = candidate
    odom = integrate_unicycle(state.odom, clamped, dt)
    tick = state.tick + 1
    t_sim = tick * dt
    scan = scan_sonars(pose, cfg, world, t_sim)
    return SimState(pose, odom, scan, t_sim, tick, collided)
