"""Deterministic 2D differential-drive robot simulator with wall-following
autonomy, a sonar safety supervisor, and WebSocket teleoperation."""

from .autonomy import FollowerParams, FollowerState, Phase, estimate_wall, follower_step
from .bus import Envelope, EstopChange, ModeChange, TopicBus, default_bus
from .simcore import (
    SimState,
    SonarScan,
    check_collision,
    init_state,
    integrate_unicycle,
    raycast,
    scan_sonars,
    step,
)
from .supervisor import (
    ControlDecision,
    ProximityLevel,
    SupervisorParams,
    arbitrate,
    classify_proximity,
    clamp_for_safety,
)
from .teleop import (
    OrientationSample,
    ProtocolError,
    SessionHub,
    TeleopParams,
    encode_telemetry,
    orientation_to_twist,
    parse_message,
)
from .world import (
    LineSegment,
    Pose,
    RobotGeometry,
    SonarConfig,
    Twist,
    WorldMap,
    load_map,
    normalize_angle,
    serialize_map,
)

__version__ = "0.1.0"
