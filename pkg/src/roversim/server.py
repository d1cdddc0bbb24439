"""WebSocket front door for teleoperation.

Runs a websockets server on its own thread with a private asyncio
loop. Inbound frames go through the SessionHub on that thread (the hub
publishes to the bus, which is thread-safe); telemetry produced on the
tick thread is handed over with `broadcast` and fanned out through
bounded per-client queues, dropping the oldest frame on overflow so a
slow client can never stall the simulation.
"""
from __future__ import annotations

import asyncio
import itertools
import threading
from collections import deque

from websockets.asyncio.server import serve
from websockets.exceptions import ConnectionClosed

from .teleop import SessionHub

CLIENT_QUEUE_DEPTH = 16


class _ClientSlot:
    """Outbound frame buffer for one connection."""

    def __init__(self, depth: int = CLIENT_QUEUE_DEPTH):
        self.frames: deque[str] = deque(maxlen=depth)
        self.wakeup = asyncio.Event()

    def offer(self, frame: str) -> None:
        self.frames.append(frame)
        self.wakeup.set()


class TeleopServer:
    """Serves the teleop protocol; one controller, any number of observers."""

    def __init__(self, hub: SessionHub, host: str = "127.0.0.1", port: int = 9090):
        self._hub = hub
        self.host = host
        self.port = port
        self._loop: asyncio.AbstractEventLoop | None = None
        self._thread: threading.Thread | None = None
        self._stop: asyncio.Future | None = None
        self._ready = threading.Event()
        self._startup_error: BaseException | None = None
        self._slots: dict[int, _ClientSlot] = {}
        self._ids = itertools.count(1)

    def start(self, timeout: float = 5.0) -> None:
        """Start serving; returns once the listening socket is bound."""
        self._thread = threading.Thread(target=self._run, name="teleop-server", daemon=True)
        self._thread.start()
        if not self._ready.wait(timeout):
            raise RuntimeError("teleop server did not start in time")
        if self._startup_error is not None:
            raise RuntimeError("teleop server failed to start") from self._startup_error

    def stop(self) -> None:
        if self._loop is not None and self._stop is not None:
            self._loop.call_soon_threadsafe(
                lambda: self._stop.set_result(None) if not self._stop.done() else None
            )
        if self._thread is not None:
            self._thread.join(timeout=5.0)

    def broadcast(self, frame: str) -> None:
        """Queue a telemetry frame to every connected client (any thread)."""
        loop = self._loop
        if loop is not None and not loop.is_closed():
            try:
                loop.call_soon_threadsafe(self._fanout, frame)
            except RuntimeError:
                pass  # loop shut down between the check and the call

    def _fanout(self, frame: str) -> None:
        for slot in self._slots.values():
            slot.offer(frame)

    def _run(self) -> None:
        self._loop = asyncio.new_event_loop()
        asyncio.set_event_loop(self._loop)
        try:
            self._loop.run_until_complete(self._serve())
        except BaseException as exc:
            self._startup_error = exc
            self._ready.set()
        finally:
            self._loop.close()

    async def _serve(self) -> None:
        self._stop = asyncio.get_running_loop().create_future()
        async with serve(self._handler, self.host, self.port) as server:
            self.port = server.sockets[0].getsockname()[1]
            self._ready.set()
            await self._stop

    async def _handler(self, websocket) -> None:
        cid = next(self._ids)
        slot = _ClientSlot()
        self._slots[cid] = slot
        self._hub.on_connect(cid)
        sender = asyncio.create_task(self._send_loop(websocket, slot))
        try:
            async for message in websocket:
                reply = self._hub.handle(cid, message)
                if reply is not None:
                    await websocket.send(reply)
        except ConnectionClosed:
            pass
        finally:
            sender.cancel()
            del self._slots[cid]
            self._hub.on_disconnect(cid)

    async def _send_loop(self, websocket, slot: _ClientSlot) -> None:
        try:
            while True:
                await slot.wakeup.wait()
                slot.wakeup.clear()
                while slot.frames:
                    await websocket.send(slot.frames.popleft())
        except (ConnectionClosed, asyncio.CancelledError):
            pass
