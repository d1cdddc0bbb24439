"""Fixed-rate control loop wiring the whole system together.

Each tick: deliver due scripted teleop frames, run the wall follower,
arbitrate teleop vs autonomy, apply the safety clamp, step the
simulation, publish to the bus, and emit telemetry at the configured
rate. Scripted frames are timed on sim time, so headless runs are
bit-for-bit reproducible regardless of machine speed.
"""
from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, replace
from typing import Callable, IO, Sequence

from .autonomy import FollowerParams, FollowerState, follower_step
from .bus import EstopChange, ModeChange, TopicBus, default_bus
from .simcore import SimState, init_state, step
from .supervisor import (
    ControlDecision,
    SupervisorParams,
    arbitrate,
    classify_scan,
    clamp_for_safety,
)
from .teleop import SessionHub, TeleopParams, encode_telemetry, parse_message
from .world import RobotGeometry, SonarConfig, WorldMap

# Slack when comparing sim time against script timestamps; absorbs
# floating-point rounding in tick * dt without ever spanning a tick.
_TIME_EPS = 1e-9


class ScriptError(ValueError):
    """Invalid teleop script; raised before the run starts."""


@dataclass(frozen=True)
class ScriptEvent:
    """One scheduled wire frame: delivered once t_sim reaches at_ms/1000."""

    at_ms: int
    frame: str


def load_script(text: str) -> tuple[ScriptEvent, ...]:
    """Parse a script: one JSON object {"at_ms": I, "frame": S} per line.

    Events must be sorted by at_ms (non-decreasing) and every frame must
    be a valid client message; anything else fails here, not mid-run.
    """
    events: list[ScriptEvent] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ScriptError(f"line {lineno}: not valid JSON: {exc}") from None
        if not isinstance(obj, dict) or "at_ms" not in obj or "frame" not in obj:
            raise ScriptError(f"line {lineno}: expected object with at_ms and frame")
        at_ms = obj["at_ms"]
        frame = obj["frame"]
        if isinstance(at_ms, bool) or not isinstance(at_ms, int) or at_ms < 0:
            raise ScriptError(f"line {lineno}: at_ms must be a non-negative integer")
        if not isinstance(frame, str):
            raise ScriptError(f"line {lineno}: frame must be a string")
        try:
            parse_message(frame)
        except Exception as exc:
            raise ScriptError(f"line {lineno}: bad frame: {exc}") from None
        if events and at_ms < events[-1].at_ms:
            raise ScriptError(f"line {lineno}: events not sorted by at_ms")
        events.append(ScriptEvent(at_ms, frame))
    return tuple(events)


def dump_script(events: Sequence[ScriptEvent]) -> str:
    return "".join(
        json.dumps({"at_ms": e.at_ms, "frame": e.frame}, separators=(",", ":")) + "\n"
        for e in events
    )


class Runtime:
    """Owns the tick loop and all controller state for one run."""

    def __init__(
        self,
        world: WorldMap,
        *,
        mode: str = "hybrid",
        tick_hz: int = 50,
        telemetry_hz: int = 10,
        geom: RobotGeometry | None = None,
        sonar: SonarConfig | None = None,
        follower: FollowerParams | None = None,
        teleop_params: TeleopParams | None = None,
        supervisor: SupervisorParams | None = None,
        script: Sequence[ScriptEvent] = (),
        log: IO[str] | None = None,
        broadcast: Callable[[str], None] | None = None,
        on_tick: Callable[[SimState, ControlDecision], None] | None = None,
        realtime: bool = False,
    ):
        if tick_hz < telemetry_hz or telemetry_hz < 1:
            raise ValueError("require tick_hz >= telemetry_hz >= 1")
        self.world = world
        self.geom = geom or RobotGeometry()
        self.sonar = sonar or SonarConfig()
        self.follower_params = follower or FollowerParams()
        self.supervisor_params = supervisor or SupervisorParams()
        self.tick_hz = tick_hz
        self.telemetry_hz = telemetry_hz
        self.dt = 1.0 / tick_hz
        self.mode0 = mode
        self.script = tuple(script)
        self.log = log
        self.broadcast = broadcast
        self.on_tick = on_tick
        self.realtime = realtime
        self._t_sim = 0.0
        self.bus: TopicBus = default_bus(clock=lambda: self._t_sim)
        self.hub = SessionHub(self.bus, teleop_params or TeleopParams(), self.geom)
        self.state: SimState = init_state(world, self.sonar)
        self.fstate = FollowerState()

    def run(self, duration_s: float | None = None, stop: Callable[[], bool] | None = None) -> SimState:
        """Run for duration_s sim seconds (or until stop() goes true)."""
        if duration_s is None and stop is None:
            raise ValueError("need a duration or a stop predicate")
        n_ticks = None if duration_s is None else round(duration_s * self.tick_hz)
        self.bus.publish("mode", ModeChange(self.mode0))
        script_pos = 0
        script_cid = object()
        wall_start = time.perf_counter()
        k = 0
        while n_ticks is None or k < n_ticks:
            if stop is not None and stop():
                break
            state = self.state
            self._t_sim = state.t_sim

            while (
                script_pos < len(self.script)
                and self.script[script_pos].at_ms / 1000.0 <= state.t_sim + _TIME_EPS
            ):
                self.hub.handle(script_cid, self.script[script_pos].frame)
                script_pos += 1

            mode_env = self.bus.latest("mode")
            mode = mode_env.payload.mode if mode_env else self.mode0
            estop_env = self.bus.latest("estop")
            estop = estop_env.payload.engaged if estop_env else False

            self.fstate, auto_cmd = follower_step(
                self.fstate, state.scan, self.follower_params, self.sonar, self.geom
            )
            self.bus.publish("cmd_auto", auto_cmd)

            teleop_env = self.bus.latest("cmd_teleop")
            if teleop_env is None:
                teleop_cmd, teleop_age = None, math.inf
            else:
                teleop_cmd = teleop_env.payload
                teleop_age = max(0.0, state.t_sim - teleop_env.t_sim)

            decision = arbitrate(
                mode,
                teleop_cmd,
                teleop_age,
                auto_cmd,
                estop,
                timeout=self.supervisor_params.teleop_timeout,
            )
            safe_cmd = clamp_for_safety(
                decision.cmd, state.scan, self.sonar, self.supervisor_params.stop_dist
            )
            actuated = replace(decision, cmd=safe_cmd)
            self.bus.publish("cmd_vel", safe_cmd)

            self.state = step(state, safe_cmd, self.geom, self.sonar, self.world, self.dt)
            self._t_sim = self.state.t_sim
            self.bus.publish("pose", self.state.pose)
            self.bus.publish("sonar", self.state.scan)

            if self.on_tick is not None:
                self.on_tick(self.state, actuated)
            if ((k + 1) * self.telemetry_hz) // self.tick_hz > (k * self.telemetry_hz) // self.tick_hz:
                self._emit_telemetry(actuated, mode)

            k += 1
            if self.realtime:
                deadline = wall_start + k * self.dt
                delay = deadline - time.perf_counter()
                if delay > 0:
                    time.sleep(delay)
        return self.state

    def _emit_telemetry(self, decision: ControlDecision, mode: str) -> None:
        levels = classify_scan(self.state.scan, self.supervisor_params)
        frame = encode_telemetry(self.state, decision, levels, mode)
        if self.log is not None:
            self.log.write(frame + "\n")
        if self.broadcast is not None:
            self.broadcast(frame)
