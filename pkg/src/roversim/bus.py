"""In-process pub/sub topic bus with last-value caching.

Topics are declared up front with a payload type; publishing to an
undeclared topic or with the wrong payload type fails immediately.
Subscriber callbacks run synchronously on the publisher's thread and
must return quickly; for cross-thread consumers use a bounded queue
subscription (drop-oldest, like a sensor-topic QoS).
"""
from __future__ import annotations

import threading
from collections import deque
from dataclasses import dataclass
from typing import Any, Callable, Mapping

from .simcore import SonarScan
from .world import Pose, Twist


@dataclass(frozen=True)
class ModeChange:
    """Requested control mode: auto, teleop, or hybrid."""

    mode: str

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {sorted(MODES)}, got {self.mode!r}")


MODES = frozenset({"auto", "teleop", "hybrid"})


@dataclass(frozen=True)
class EstopChange:
    """Emergency-stop latch state."""

    engaged: bool


@dataclass(frozen=True)
class Envelope:
    topic: str
    seq: int
    t_sim: float
    payload: Any


class UnknownTopicError(KeyError):
    pass


# The system's topic vocabulary, mirroring cmd_vel/pose/sonar naming.
DEFAULT_TOPICS: Mapping[str, type] = {
    "cmd_vel": Twist,
    "cmd_auto": Twist,
    "cmd_teleop": Twist,
    "pose": Pose,
    "sonar": SonarScan,
    "mode": ModeChange,
    "estop": EstopChange,
}

QUEUE_DEPTH = 16


class SubscriberQueue:
    """Bounded per-subscriber envelope queue; oldest entries drop on overflow."""

    def __init__(self, depth: int = QUEUE_DEPTH):
        self._items: deque[Envelope] = deque(maxlen=depth)
        self._lock = threading.Lock()

    def _offer(self, env: Envelope) -> None:
        with self._lock:
            self._items.append(env)

    def pop(self) -> Envelope | None:
        with self._lock:
            return self._items.popleft() if self._items else None

    def drain(self) -> list[Envelope]:
        with self._lock:
            items = list(self._items)
            self._items.clear()
        return items


class TopicBus:
    """Thread-safe topic bus: publish, latest-value lookup, subscriptions.

    `clock` supplies the sim-time stamp for new envelopes; the runtime
    points it at the tick loop's current time.
    """

    def __init__(
        self,
        topics: Mapping[str, type] = DEFAULT_TOPICS,
        clock: Callable[[], float] | None = None,
    ):
        self._types = dict(topics)
        self._lock = threading.Lock()
        self._seq = {name: 0 for name in self._types}
        self._latest: dict[str, Envelope | None] = {name: None for name in self._types}
        self._callbacks: dict[str, list[Callable[[Envelope], None]]] = {
            name: [] for name in self._types
        }
        self._queues: dict[str, list[SubscriberQueue]] = {name: [] for name in self._types}
        self.clock: Callable[[], float] = clock if clock is not None else (lambda: 0.0)

    def _check_topic(self, topic: str) -> type:
        try:
            return self._types[topic]
        except KeyError:
            raise UnknownTopicError(f"topic {topic!r} is not declared") from None

    def publish(self, topic: str, payload: Any) -> int:
        expected = self._check_topic(topic)
        if not isinstance(payload, expected):
            raise TypeError(
                f"topic {topic!r} carries {expected.__name__}, got {type(payload).__name__}"
            )
        with self._lock:
            seq = self._seq[topic] + 1
            self._seq[topic] = seq
            env = Envelope(topic, seq, self.clock(), payload)
            self._latest[topic] = env
            callbacks = list(self._callbacks[topic])
            queues = list(self._queues[topic])
        for queue in queues:
            queue._offer(env)
        for callback in callbacks:
            callback(env)
        return seq

    def latest(self, topic: str) -> Envelope | None:
        self._check_topic(topic)
        with self._lock:
            return self._latest[topic]

    def subscribe(self, topic: str, callback: Callable[[Envelope], None]) -> None:
        self._check_topic(topic)
        with self._lock:
            self._callbacks[topic].append(callback)

    def subscribe_queue(self, topic: str, depth: int = QUEUE_DEPTH) -> SubscriberQueue:
        self._check_topic(topic)
        queue = SubscriberQueue(depth)
        with self._lock:
            self._queues[topic].append(queue)
        return queue

    def topics(self) -> tuple[str, ...]:
        return tuple(self._types)


def default_bus(clock: Callable[[], float] | None = None) -> TopicBus:
    """A bus declaring the standard topic set."""
    return TopicBus(DEFAULT_TOPICS, clock)
