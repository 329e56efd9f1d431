"""Wire interface between the control loop and operator clients.

Telemetry frames stream out over a WebSocket at a bounded rate (the loop
hands over a downsampled subsequence of the full-rate frames, latest
wins); operator commands come back as JSON envelopes with per-client
sequence numbers. The network side runs on its own thread; the only
shared state is the outbound queue and the inbound command deque, so a
client connecting, spamming or vanishing can never perturb the loop.

Message schema (see docs/protocol.md):
  client -> server: {"type": "command", "client_id": str, "seq": int,
                     "data": {"kind": "operator"|"device_jog"|"param_update", ...}}
  server -> client: {"type": "hello"|"telemetry"|"event"|"trajectory",
                     "data": {...}}
"""

import asyncio
import json
import threading
from collections import deque
from dataclasses import dataclass
from math import ceil

from boltsim.errors import MalformedMessage, StaleSequence
from boltsim.supervisor import OperatorEvent

_OPERATOR_EVENTS = {e.value: e for e in OperatorEvent}

CONTROL_RATE_HZ = 500.0
DEFAULT_RATE_LIMIT_HZ = 30.0
DEFAULT_PORT = 8930


def publish_stride(rate_limit_hz=DEFAULT_RATE_LIMIT_HZ,
                   control_rate_hz=CONTROL_RATE_HZ) -> int:
    """Every Nth full-rate frame goes on the wire; gap <= ceil(500/limit)."""
    return max(1, ceil(control_rate_hz / float(rate_limit_hz)))


@dataclass(frozen=True)
class CommandEnvelope:
    kind: str          # "operator" | "device_jog" | "param_update"
    client_id: str
    seq: int
    data: dict


def encode_message(msg_type: str, data: dict) -> str:
    return json.dumps({"type": msg_type, "data": data}, separators=(",", ":"))


def encode_frame(frame: dict) -> str:
    return encode_message("telemetry", frame)


def encode_trajectory(trajectory) -> str:
    samples = [[t] + pose.to_flat() for t, pose in trajectory.samples]
    return encode_message("trajectory", {"samples": samples})


def encode_event(record) -> str:
    return encode_message("event", {
        "time": record.time, "event": record.event,
        "accepted": record.accepted, "step": record.step,
        "phase": record.phase, "mode": record.mode, "detail": record.detail,
    })


def decode_frame(text: str) -> dict:
    msg = json.loads(text)
    if msg.get("type") != "telemetry":
        raise MalformedMessage(f"not a telemetry message: {msg.get('type')!r}")
    return msg["data"]


class SequenceTracker:
    """Per-client strictly increasing sequence enforcement."""

    def __init__(self):
        self._last = {}

    def admit(self, client_id: str, seq: int):
        last = self._last.get(client_id)
        if last is not None and seq <= last:
            raise StaleSequence(f"client {client_id}: seq {seq} <= {last}")
        self._last[client_id] = seq


def ingest(raw, tracker: SequenceTracker) -> CommandEnvelope:
    """Parse and validate one inbound message into a command envelope.

    Raises MalformedMessage for anything unparseable or schema-violating,
    StaleSequence for duplicate/out-of-order sequence numbers.
    """
    try:
        text = raw.decode("utf-8") if isinstance(raw, (bytes, bytearray)) else raw
        msg = json.loads(text)
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedMessage(f"unparseable message: {exc}") from exc
    if not isinstance(msg, dict) or msg.get("type") != "command":
        raise MalformedMessage(f"unexpected message type {msg!r}")
    data = msg.get("data")
    client = msg.get("client_id")
    seq = msg.get("seq")
    if not isinstance(data, dict) or not isinstance(client, str) \
            or not isinstance(seq, int):
        raise MalformedMessage("command needs client_id, integer seq and data")
    kind = data.get("kind")
    if kind == "operator":
        if data.get("event") not in _OPERATOR_EVENTS:
            raise MalformedMessage(f"unknown operator event {data.get('event')!r}")
    elif kind == "device_jog":
        delta = data.get("delta")
        if (not isinstance(delta, list) or len(delta) != 6
                or not all(isinstance(v, (int, float)) for v in delta)):
            raise MalformedMessage("device_jog needs a 6-element numeric delta")
    elif kind == "param_update":
        if not isinstance(data.get("path"), str):
            raise MalformedMessage("param_update needs a path")
    else:
        raise MalformedMessage(f"unknown command kind {kind!r}")
    tracker.admit(client, seq)
    return CommandEnvelope(kind=kind, client_id=client, seq=seq, data=data)


def envelope_to_runner_event(env: CommandEnvelope):
    """Translate a validated envelope into the runner's event tuples."""
    if env.kind == "operator":
        return ("operator", _OPERATOR_EVENTS[env.data["event"]])
    if env.kind == "device_jog":
        return ("jog", tuple(float(v) for v in env.data["delta"]),
                bool(env.data.get("clutch", True)))
    return ("param_update", env.data["path"], env.data.get("value"))


class TelemetryGateway:
    """WebSocket server bridging the loop and any number of consoles.

    The loop thread calls offer_frame/offer_events/broadcast_trajectory and
    drain_commands; everything network-facing happens on the gateway's own
    asyncio thread.
    """

    def __init__(self, host="127.0.0.1", port=DEFAULT_PORT,
                 rate_limit_hz=DEFAULT_RATE_LIMIT_HZ, hello=None):
        self.host = host
        self.port = port
        self.rate_limit_hz = rate_limit_hz
        self.hello = hello or {}
        self.stride = publish_stride(rate_limit_hz)
        self._tracker = SequenceTracker()
        self._commands = deque()
        self._outbox = None
        self._loop = None
        self._thread = None
        self._server = None
        self._clients = set()
        self._started = threading.Event()
        self._event_cursor = 0

    # -- lifecycle ----------------------------------------------------------

    def start(self):
        self._thread = threading.Thread(target=self._run, daemon=True,
                                        name="boltsim-gateway")
        self._thread.start()
        if not self._started.wait(timeout=10.0):
            raise RuntimeError("gateway failed to start")
        return self

    def stop(self):
        if self._loop is None:
            return
        # a None marker travels the outbox FIFO, so everything queued
        # before the stop is broadcast first
        self._post(None)
        self._thread.join(timeout=10.0)

    def _run(self):
        asyncio.run(self._main())

    async def _main(self):
        from websockets.asyncio.server import serve

        self._loop = asyncio.get_running_loop()
        self._outbox = asyncio.Queue(maxsize=256)
        self._shutdown = asyncio.Event()
        async with serve(self._handler, self.host, self.port) as server:
            self._server = server
            if self.port == 0:
                self.port = next(iter(server.sockets)).getsockname()[1]
            self._started.set()
            sender = asyncio.create_task(self._sender())
            await self._shutdown.wait()
            sender.cancel()

    async def _handler(self, connection):
        self._clients.add(connection)
        try:
            await connection.send(encode_message("hello", self.hello))
            async for raw in connection:
                try:
                    env = ingest(raw, self._tracker)
                except MalformedMessage as exc:
                    await connection.send(encode_message(
                        "error", {"reason": str(exc)}))
                except StaleSequence as exc:
                    await connection.send(encode_message(
                        "stale", {"reason": str(exc)}))
                else:
                    self._commands.append(envelope_to_runner_event(env))
        except Exception:
            pass  # client gone; the loop never sees it
        finally:
            self._clients.discard(connection)

    async def _sender(self):
        from websockets.asyncio.server import broadcast

        while True:
            text = await self._outbox.get()
            if text is None:
                self._shutdown.set()
                return
            if self._clients:
                broadcast(self._clients, text)

    def _post(self, text: str):
        if self._loop is None:
            return
        def _put():
            # latest-wins: drop the oldest when the consumer lags
            if self._outbox.full():
                try:
                    self._outbox.get_nowait()
                except asyncio.QueueEmpty:
                    pass
            self._outbox.put_nowait(text)
        self._loop.call_soon_threadsafe(_put)

    # -- loop-facing API ----------------------------------------------------

    def offer_frame(self, frame: dict):
        self._post(encode_frame(frame))

    def offer_events(self, event_log, seq):
        while self._event_cursor < len(event_log):
            self._post(encode_event(event_log[self._event_cursor]))
            self._event_cursor += 1

    def broadcast_trajectory(self, trajectory):
        self._post(encode_trajectory(trajectory))

    def drain_commands(self):
        out = []
        while True:
            try:
                out.append(self._commands.popleft())
            except IndexError:
                return out
