"""Teleoperation wire protocol and session ownership.

One JSON object per WebSocket text frame. Client to server:

    {"type":"orientation","roll_deg":F,"pitch_deg":F,"yaw_deg":F,"ts_ms":I}
    {"type":"twist","v":F,"w":F}
    {"type":"mode","value":"auto"|"teleop"|"hybrid"}
    {"type":"estop","engaged":B}

Server to client: telemetry frames (see encode_telemetry) and error
frames {"type":"error","code":...,"detail":...}. Codes: bad_json,
unknown_type, bad_field, not_controller. A malformed inbound frame
yields exactly one error frame; the connection stays open.

Device orientation maps to velocity with a deadzone that rescales
rather than truncates, so the command is continuous at the deadzone
boundary: tilting forward (negative pitch) drives forward, tilting
right (positive roll) turns clockwise. Yaw is ignored.
"""
from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass
from typing import Callable, Union

from .bus import MODES, EstopChange, ModeChange, TopicBus
from .simcore import SimState
from .supervisor import ControlDecision, ProximityLevel
from .world import RobotGeometry, Twist, ZERO_TWIST


class ProtocolError(ValueError):
    """Invalid inbound frame; `code` is one of the wire error codes."""

    def __init__(self, code: str, detail: str):
        super().__init__(f"{code}: {detail}")
        self.code = code
        self.detail = detail


@dataclass(frozen=True)
class OrientationSample:
    roll_deg: float
    pitch_deg: float
    yaw_deg: float
    ts_ms: int


@dataclass(frozen=True)
class TeleopParams:
    """Orientation-to-velocity mapping constants, angles in degrees."""

    pitch_max: float = 30.0
    roll_max: float = 30.0
    deadzone: float = 5.0
    invert_pitch: bool = False
    invert_roll: bool = False

    def __post_init__(self) -> None:
        if not 0 <= self.deadzone < min(self.pitch_max, self.roll_max):
            raise ValueError("require 0 <= deadzone < pitch_max, roll_max")


@dataclass(frozen=True)
class Orientation:
    sample: OrientationSample


@dataclass(frozen=True)
class DirectTwist:
    v: float
    w: float


@dataclass(frozen=True)
class ModeRequest:
    value: str


@dataclass(frozen=True)
class EstopRequest:
    engaged: bool


ClientMessage = Union[Orientation, DirectTwist, ModeRequest, EstopRequest]


def _deadzone_scale(x: float, limit: float, deadzone: float) -> float:
    if abs(x) <= deadzone:
        return 0.0
    scaled = math.copysign((abs(x) - deadzone) / (limit - deadzone), x)
    return min(1.0, max(-1.0, scaled))


def orientation_to_twist(
    sample: OrientationSample, params: TeleopParams, geom: RobotGeometry
) -> Twist:
    """Map a device orientation sample to a velocity command."""
    pitch = min(90.0, max(-90.0, sample.pitch_deg))
    roll = min(90.0, max(-90.0, sample.roll_deg))
    v = geom.v_max * _deadzone_scale(-pitch, params.pitch_max, params.deadzone)
    w = geom.w_max * _deadzone_scale(-roll, params.roll_max, params.deadzone)
    if params.invert_pitch:
        v = -v
    if params.invert_roll:
        w = -w
    return Twist(v, w)


def _require(obj: dict, name: str) -> object:
    if name not in obj:
        raise ProtocolError("bad_field", f"missing field {name!r}")
    return obj[name]


def _number(obj: dict, name: str) -> float:
    value = _require(obj, name)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ProtocolError("bad_field", f"field {name!r} must be a number")
    if not math.isfinite(value):
        raise ProtocolError("bad_field", f"field {name!r} must be finite")
    return float(value)


def _integer(obj: dict, name: str) -> int:
    value = _require(obj, name)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ProtocolError("bad_field", f"field {name!r} must be an integer")
    return value


def _boolean(obj: dict, name: str) -> bool:
    value = _require(obj, name)
    if not isinstance(value, bool):
        raise ProtocolError("bad_field", f"field {name!r} must be a boolean")
    return value


def parse_message(text: str | bytes) -> ClientMessage:
    """Validate one wire frame into a ClientMessage, or raise ProtocolError."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ProtocolError("bad_json", f"frame is not valid UTF-8: {exc}") from None
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProtocolError("bad_json", str(exc)) from None
    if not isinstance(obj, dict):
        raise ProtocolError("bad_json", "frame must be a JSON object")
    mtype = _require(obj, "type")
    if mtype == "orientation":
        return Orientation(
            OrientationSample(
                roll_deg=_number(obj, "roll_deg"),
                pitch_deg=_number(obj, "pitch_deg"),
                yaw_deg=_number(obj, "yaw_deg"),
                ts_ms=_integer(obj, "ts_ms"),
            )
        )
    if mtype == "twist":
        return DirectTwist(v=_number(obj, "v"), w=_number(obj, "w"))
    if mtype == "mode":
        value = _require(obj, "value")
        if value not in MODES:
            raise ProtocolError(
                "bad_field", f"field 'value' must be one of {sorted(MODES)}"
            )
        return ModeRequest(value)
    if mtype == "estop":
        return EstopRequest(engaged=_boolean(obj, "engaged"))
    raise ProtocolError("unknown_type", f"unknown message type {mtype!r}")


def encode_telemetry(
    state: SimState,
    decision: ControlDecision,
    levels: tuple[ProximityLevel, ...],
    mode: str,
) -> str:
    """One telemetry frame; float fields keep full round-trip precision."""
    frame = {
        "type": "telemetry",
        "tick": state.tick,
        "t_sim": state.t_sim,
        "pose": [state.pose.x, state.pose.y, state.pose.theta],
        "odom": [state.odom.x, state.odom.y, state.odom.theta],
        "sonar": list(state.scan.ranges),
        "proximity": [level.value for level in levels],
        "mode": mode,
        "cmd": [decision.cmd.v, decision.cmd.w],
        "source": decision.source,
        "estop": decision.estop,
        "collided": state.collided,
    }
    return json.dumps(frame, separators=(",", ":"))


def encode_error(code: str, detail: str) -> str:
    return json.dumps(
        {"type": "error", "code": code, "detail": detail}, separators=(",", ":")
    )


def decode_frame(text: str | bytes) -> dict:
    """Decode any server frame back to a dict (tests and clients)."""
    obj = json.loads(text)
    if not isinstance(obj, dict):
        raise ValueError("frame must be a JSON object")
    return obj


class SessionHub:
    """Controller ownership and inbound-frame routing.

    The first client to send any control-bearing message becomes the
    controller; control frames from anyone else are answered with a
    not_controller error. When the controller disconnects, ownership is
    released and the teleop command is zeroed. Thread-safe.
    """

    def __init__(
        self,
        bus: TopicBus,
        params: TeleopParams = TeleopParams(),
        geom: RobotGeometry = RobotGeometry(),
    ):
        self._bus = bus
        self._params = params
        self._geom = geom
        self._lock = threading.Lock()
        self._controller: object | None = None
        self._clients: set[object] = set()

    def on_connect(self, client: object) -> None:
        with self._lock:
            self._clients.add(client)

    def on_disconnect(self, client: object) -> None:
        release = False
        with self._lock:
            self._clients.discard(client)
            if self._controller == client:
                self._controller = None
                release = True
        if release:
            self._bus.publish("cmd_teleop", ZERO_TWIST)

    def controller(self) -> object | None:
        with self._lock:
            return self._controller

    def handle(self, client: object, text: str | bytes) -> str | None:
        """Process one inbound frame; returns an error frame to send, if any."""
        try:
            msg = parse_message(text)
        except ProtocolError as exc:
            return encode_error(exc.code, exc.detail)
        with self._lock:
            if self._controller is None:
                self._controller = client
            elif self._controller != client:
                return encode_error(
                    "not_controller", "another client currently holds control"
                )
        self._apply(msg)
        return None

    def _apply(self, msg: ClientMessage) -> None:
        if isinstance(msg, Orientation):
            self._bus.publish(
                "cmd_teleop", orientation_to_twist(msg.sample, self._params, self._geom)
            )
        elif isinstance(msg, DirectTwist):
            # Direct commands obey the same physical limits as mapped ones.
            v = min(self._geom.v_max, max(-self._geom.v_max, msg.v))
            w = min(self._geom.w_max, max(-self._geom.w_max, msg.w))
            self._bus.publish("cmd_teleop", Twist(v, w))
        elif isinstance(msg, ModeRequest):
            self._bus.publish("mode", ModeChange(msg.value))
        elif isinstance(msg, EstopRequest):
            self._bus.publish("estop", EstopChange(msg.engaged))
