"""Domain types, angle arithmetic, and map-file handling.

Everything here is an immutable value type; the simulator, controllers,
and network layer all build on these. Map files are a line-oriented text
format: `#` comments, one `START x y theta_deg` line, and one or more
`LINE ax ay bx by` lines, all coordinates in meters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

TAU = 2.0 * math.pi

NUM_SONARS = 16

# P3-DX-style ring: 8 front transducers, 8 rear, angles body-relative in
# degrees, counterclockwise positive. Order here fixes the index order of
# SonarScan.ranges.
DEFAULT_SONAR_ANGLES_DEG = (
    -90.0, -50.0, -30.0, -10.0, 10.0, 30.0, 50.0, 90.0,
    100.0, 130.0, 150.0, 170.0, -170.0, -150.0, -130.0, -100.0,
)


class MapError(ValueError):
    """Base class for map-file problems."""


class MapParseError(MapError):
    """Malformed map syntax; message includes the offending line number."""


class MapValidationError(MapError):
    """Syntactically valid map that violates a world invariant."""


def normalize_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]. Idempotent on already-wrapped values."""
    if not math.isfinite(theta):
        raise ValueError(f"angle must be finite, got {theta!r}")
    if -math.pi < theta <= math.pi:
        return theta
    r = math.fmod(theta, TAU)
    if r > math.pi:
        r -= TAU
    elif r <= -math.pi:
        r += TAU
    return r


def _require_finite(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")
    return value


@dataclass(frozen=True)
class Pose:
    """Robot configuration (x, y, heading). Heading is wrapped to (-pi, pi]."""

    x: float
    y: float
    theta: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", _require_finite("x", self.x))
        object.__setattr__(self, "y", _require_finite("y", self.y))
        object.__setattr__(self, "theta", normalize_angle(float(self.theta)))


@dataclass(frozen=True)
class Twist:
    """Velocity command: v forward m/s, w counterclockwise rad/s."""

    v: float
    w: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "v", _require_finite("v", self.v))
        object.__setattr__(self, "w", _require_finite("w", self.w))


ZERO_TWIST = Twist(0.0, 0.0)

_MIN_SEGMENT_LENGTH = 1e-9


@dataclass(frozen=True)
class LineSegment:
    """A wall: the segment from (ax, ay) to (bx, by), meters."""

    ax: float
    ay: float
    bx: float
    by: float

    def __post_init__(self) -> None:
        for name in ("ax", "ay", "bx", "by"):
            object.__setattr__(self, name, _require_finite(name, getattr(self, name)))
        if self.length() <= _MIN_SEGMENT_LENGTH:
            raise ValueError(f"segment {self} is degenerate (length <= {_MIN_SEGMENT_LENGTH})")

    def length(self) -> float:
        return math.hypot(self.bx - self.ax, self.by - self.ay)

    def distance_to(self, px: float, py: float) -> float:
        """Euclidean distance from point (px, py) to this segment."""
        ex = self.bx - self.ax
        ey = self.by - self.ay
        t = ((px - self.ax) * ex + (py - self.ay) * ey) / (ex * ex + ey * ey)
        t = min(1.0, max(0.0, t))
        return math.hypot(px - (self.ax + t * ex), py - (self.ay + t * ey))


@dataclass(frozen=True)
class RobotGeometry:
    """Body disc radius and velocity limits; defaults match a P3-DX-class base."""

    body_radius: float = 0.22
    v_max: float = 0.75
    w_max: float = 1.5

    def __post_init__(self) -> None:
        for name in ("body_radius", "v_max", "w_max"):
            value = _require_finite(name, getattr(self, name))
            if value <= 0:
                raise ValueError(f"{name} must be positive, got {value}")
            object.__setattr__(self, name, value)


@dataclass(frozen=True)
class SonarConfig:
    """Ring of 16 sonar beams; angles in degrees, body-relative."""

    angles: tuple[float, ...] = DEFAULT_SONAR_ANGLES_DEG
    mount_radius: float = 0.0
    min_range: float = 0.1
    max_range: float = 5.0

    def __post_init__(self) -> None:
        angles = tuple(float(a) for a in self.angles)
        if len(angles) != NUM_SONARS:
            raise ValueError(f"expected {NUM_SONARS} sonar angles, got {len(angles)}")
        if len(set(angles)) != len(angles):
            raise ValueError("sonar angles must be distinct")
        object.__setattr__(self, "angles", angles)
        object.__setattr__(self, "mount_radius", _require_finite("mount_radius", self.mount_radius))
        object.__setattr__(self, "min_range", _require_finite("min_range", self.min_range))
        object.__setattr__(self, "max_range", _require_finite("max_range", self.max_range))
        if self.mount_radius < 0:
            raise ValueError("mount_radius must be >= 0")
        if not 0 < self.min_range < self.max_range:
            raise ValueError("require 0 < min_range < max_range")

    def beam_index(self, angle_deg: float) -> int:
        """Index into SonarScan.ranges of the beam at the given angle."""
        try:
            return self.angles.index(float(angle_deg))
        except ValueError:
            raise ValueError(f"no sonar beam at {angle_deg} deg") from None


@dataclass(frozen=True)
class WorldMap:
    """Named set of wall segments plus the robot start pose."""

    name: str
    segments: tuple[LineSegment, ...]
    start: Pose

    def __post_init__(self) -> None:
        object.__setattr__(self, "segments", tuple(self.segments))
        if not self.segments:
            raise MapValidationError("map must contain at least one segment")

    def clearance(self, px: float, py: float) -> float:
        """Distance from a point to the nearest wall segment."""
        return min(seg.distance_to(px, py) for seg in self.segments)


def load_map(text: str, name: str = "map", geometry: RobotGeometry | None = None) -> WorldMap:
    """Parse map-file text into a WorldMap.

    Raises MapParseError (with line number) on bad syntax and
    MapValidationError when the parsed map violates an invariant
    (no segments, degenerate segment, start pose inside a wall).
    """
    geom = geometry if geometry is not None else RobotGeometry()
    start: Pose | None = None
    segments: list[LineSegment] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        keyword = parts[0]
        if keyword == "START":
            if start is not None:
                raise MapParseError(f"line {lineno}: duplicate START")
            if len(parts) != 4:
                raise MapParseError(f"line {lineno}: START expects 'START x y theta_deg'")
            x, y, theta_deg = _parse_floats(parts[1:], lineno)
            start = Pose(x, y, math.radians(theta_deg))
        elif keyword == "LINE":
            if len(parts) != 5:
                raise MapParseError(f"line {lineno}: LINE expects 'LINE ax ay bx by'")
            ax, ay, bx, by = _parse_floats(parts[1:], lineno)
            try:
                segments.append(LineSegment(ax, ay, bx, by))
            except ValueError as exc:
                raise MapValidationError(f"line {lineno}: {exc}") from None
        else:
            raise MapParseError(f"line {lineno}: unknown keyword {keyword!r}")
    if start is None:
        raise MapParseError("missing START line")
    if not segments:
        raise MapValidationError("map defines no LINE segments")
    world = WorldMap(name, tuple(segments), start)
    clearance = world.clearance(start.x, start.y)
    if clearance < geom.body_radius:
        raise MapValidationError(
            f"start pose is {clearance:.3f} m from a wall, closer than the "
            f"{geom.body_radius:.3f} m body radius"
        )
    return world


def serialize_map(world: WorldMap) -> str:
    """Render a WorldMap back to map-file text (round-trips exactly)."""
    lines = [f"# map: {world.name}"]
    lines.append(f"START {world.start.x!r} {world.start.y!r} {math.degrees(world.start.theta)!r}")
    for seg in world.segments:
        lines.append(f"LINE {seg.ax!r} {seg.ay!r} {seg.bx!r} {seg.by!r}")
    return "\n".join(lines) + "\n"


def _parse_floats(tokens: list[str], lineno: int) -> list[float]:
    values = []
    for tok in tokens:
        try:
            values.append(float(tok))
        except ValueError:
            raise MapParseError(f"line {lineno}: {tok!r} is not a number") from None
        if not math.isfinite(values[-1]):
            raise MapParseError(f"line {lineno}: {tok!r} is not finite")
    return values
