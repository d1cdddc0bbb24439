"""Command-line entry point.

Loads map and configuration, wires the bus, simulator, wall follower,
supervisor, and teleop server, and runs the fixed-rate loop. Headless
runs replay a script as fast as possible and are deterministic;
interactive runs pace to wall clock and serve WebSocket clients.

Configuration may come from a JSON file (--config) using the same keys
as the flags, with flags taking precedence. Exit codes: 0 success,
2 configuration error, 3 map error.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .autonomy import FollowerParams
from .bus import MODES
from .runtime import Runtime, ScriptError, load_script
from .server import TeleopServer
from .supervisor import SupervisorParams
from .teleop import TeleopParams
from .world import MapError, load_map

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MAP = 3


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    map_path: str | None = None
    mode: str = "hybrid"
    listen: str = "127.0.0.1:9090"
    tick_hz: int = 50
    telemetry_hz: int = 10
    duration_s: float | None = None
    headless: bool = False
    log_path: str | None = None
    script_path: str | None = None
    params: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.map_path is None:
            raise ConfigError("a map is required (--map or config file)")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {sorted(MODES)}, got {self.mode!r}")
        if not (isinstance(self.tick_hz, int) and isinstance(self.telemetry_hz, int)):
            raise ConfigError("tick_hz and telemetry_hz must be integers")
        if not self.tick_hz >= self.telemetry_hz >= 1:
            raise ConfigError("require tick_hz >= telemetry_hz >= 1")
        if self.duration_s is not None and not self.duration_s > 0:
            raise ConfigError("duration_s must be positive")
        if self.headless and self.duration_s is None:
            raise ConfigError("headless runs require --duration-s")
        host, _, port = self.listen.rpartition(":")
        if not host or not port.isdigit() or not 0 <= int(port) <= 65535:
            raise ConfigError(f"listen must be HOST:PORT, got {self.listen!r}")

    @property
    def listen_host(self) -> str:
        return self.listen.rpartition(":")[0]

    @property
    def listen_port(self) -> int:
        return int(self.listen.rpartition(":")[2])


_CONFIG_KEYS = {
    "map_path", "mode", "listen", "tick_hz", "telemetry_hz",
    "duration_s", "headless", "log_path", "script_path", "params",
}


def build_config(args: argparse.Namespace) -> RunConfig:
    """Merge defaults, config file, and flags (in increasing precedence)."""
    config = RunConfig()
    if args.config is not None:
        try:
            raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(raw) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key, value in raw.items():
            setattr(config, key, value)
    overrides = {
        "map_path": args.map,
        "mode": args.mode,
        "listen": args.listen,
        "tick_hz": args.tick_hz,
        "telemetry_hz": args.telemetry_hz,
        "duration_s": args.duration_s,
        "log_path": args.log,
        "script_path": args.script,
    }
    for key, value in overrides.items():
        if value is not None:
            setattr(config, key, value)
    if args.headless:
        config.headless = True
    config.validate()
    return config


def _build_params(config: RunConfig):
    sections = dict(config.params or {})
    unknown = set(sections) - {"follower", "teleop", "supervisor"}
    if unknown:
        raise ConfigError(f"unknown params sections: {sorted(unknown)}")
    try:
        follower = FollowerParams(**sections.get("follower", {}))
        teleop = TeleopParams(**sections.get("teleop", {}))
        supervisor = SupervisorParams(**sections.get("supervisor", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad parameter override: {exc}") from None
    return follower, teleop, supervisor


def resolve_map_text(map_path: str) -> str:
    """Read a map file; bare names fall back to the bundled map set."""
    path = Path(map_path)
    if path.exists():
        return path.read_text(encoding="utf-8")
    if "/" not in map_path:
        bundled = resources.files("roversim.maps").joinpath(
            map_path if map_path.endswith(".map") else map_path + ".map"
        )
        if bundled.is_file():
            return bundled.read_text(encoding="utf-8")
    raise FileNotFoundError(f"map file not found: {map_path}")


def run(config: RunConfig) -> int:
    """Execute one configured run; returns the process exit code."""
    try:
        follower, teleop_params, supervisor = _build_params(config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        text = resolve_map_text(config.map_path)
        world = load_map(text, name=Path(config.map_path).stem)
    except (OSError, MapError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MAP

    script = ()
    if config.script_path is not None:
        try:
            script = load_script(Path(config.script_path).read_text(encoding="utf-8"))
        except (OSError, ScriptError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG

    log_file = None
    server = None
    try:
        if config.log_path is not None:
            try:
                log_file = open(config.log_path, "w", encoding="utf-8")
            except OSError as exc:
                print(f"error: cannot open log: {exc}", file=sys.stderr)
                return EXIT_CONFIG
        runtime = Runtime(
            world,
            mode=config.mode,
            tick_hz=config.tick_hz,
            telemetry_hz=config.telemetry_hz,
            follower=follower,
            teleop_params=teleop_params,
            supervisor=supervisor,
            script=script,
            log=log_file,
            realtime=not config.headless,
        )
        if not config.headless:
            server = TeleopServer(runtime.hub, config.listen_host, config.listen_port)
            try:
                server.start()
            except (OSError, RuntimeError) as exc:
                print(f"error: cannot listen on {config.listen}: {exc}", file=sys.stderr)
                return EXIT_CONFIG
            runtime.broadcast = server.broadcast
            print(f"listening on ws://{server.host}:{server.port}", file=sys.stderr)
        try:
            runtime.run(config.duration_s)
        except KeyboardInterrupt:
            pass
        return EXIT_OK
    finally:
        if server is not None:
            server.stop()
        if log_file is not None:
            log_file.close()


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="roversim",
        description="2D differential-drive robot simulator with wall following "
        "and WebSocket teleoperation.",
    )
    parser.add_argument("--map", help="map file path, or a bundled map name "
                        "(rect_room, l_corridor, maze)")
    parser.add_argument("--mode", choices=sorted(MODES), help="initial control mode")
    parser.add_argument("--listen", metavar="HOST:PORT", help="teleop server address")
    parser.add_argument("--tick-hz", type=int, dest="tick_hz", help="simulation rate")
    parser.add_argument("--telemetry-hz", type=int, dest="telemetry_hz",
                        help="telemetry emit rate")
    parser.add_argument("--duration-s", type=float, dest="duration_s",
                        help="stop after this many simulated seconds")
    parser.add_argument("--headless", action="store_true", default=False,
                        help="run as fast as possible with no network server")
    parser.add_argument("--log", help="telemetry log path (one JSON frame per line)")
    parser.add_argument("--script", help="scripted teleop input (JSON lines)")
    parser.add_argument("--config", help="JSON config file; flags override it")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        config = build_config(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
