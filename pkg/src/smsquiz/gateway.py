"""Simulated GSM gateway: a local wire API accepts inbound SMS, and the
outbound message buffer is drained to per-phone mailboxes at a configurable
modem rate. Virtual handsets poll for their messages by sequence number.

Wire API (JSON bodies, exact field names `from`, `to`, `text`, `ts`, `seq`):
    POST /sms                      submit inbound, returns 202
    GET  /sms?to=<phone>&after=<seq>   poll outbound
    GET  /health
"""

from __future__ import annotations

import json
import math
import threading
import time
from collections import deque
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlparse

from .session import Engine, InboundSms
from .tables import Store


class Rejected(Exception):
    """Inbound submission failed validation."""


@dataclass(frozen=True)
class WireInbound:
    from_phone: str
    text: str
    ts: int  # epoch milliseconds


@dataclass(frozen=True)
class WireOutbound:
    to: str
    text: str
    seq: int
    ts: int

    def as_wire(self) -> dict:
        return {"to": self.to, "text": self.text, "seq": self.seq, "ts": self.ts}


class SimClock:
    """Hand-advanced clock for deterministic tests and replays."""

    def __init__(self, start: float = 0.0):
        self.now = start

    def __call__(self) -> float:
        return self.now

    def advance(self, seconds: float) -> float:
        self.now += seconds
        return self.now


class Gateway:
    """Store-and-forward core. Inbound submissions are serialized into one
    arrival-ordered queue; outbound messages leave the buffer one at a time,
    no faster than drain_rate allows."""

    def __init__(self, store: Store, drain_rate: float = 1.0, clock=time.time):
        if drain_rate <= 0:
            raise ValueError("drain_rate must be positive")
        self.store = store
        self.drain_rate = drain_rate
        self.clock = clock
        self.inbound: deque[WireInbound] = deque()
        self.delivered: dict[str, list[WireOutbound]] = {}
        self._lock = threading.Lock()
        self._credit = 0.0
        self._last_drain = clock()

    # - inbound -

    def submit_inbound(self, payload: dict) -> WireInbound:
        """Validate a wire submission and append it to the inbound queue."""
        if not isinstance(payload, dict):
            raise Rejected("body must be a JSON object")
        sender = payload.get("from")
        text = payload.get("text")
        if not isinstance(sender, str) or not sender:
            raise Rejected("missing or empty 'from'")
        if not isinstance(text, str):
            raise Rejected("missing 'text'")
        ts = payload.get("ts")
        with self._lock:
            if ts is None:
                ts = int(self.clock() * 1000)
            elif not isinstance(ts, int):
                raise Rejected("'ts' must be integer epoch milliseconds")
            msg = WireInbound(sender, text, ts)
            self.inbound.append(msg)
        return msg

    def take_inbound(self) -> WireInbound | None:
        with self._lock:
            return self.inbound.popleft() if self.inbound else None

    # - outbound -

    def drain(self, now: float | None = None) -> list[WireOutbound]:
        """Move at most floor(elapsed * drain_rate) buffered messages to the
        per-phone mailboxes, oldest first. Idle time does not bank more than
        one message of credit."""
        if now is None:
            now = self.clock()
        with self._lock:
            elapsed = max(0.0, now - self._last_drain)
            self._last_drain = now
            if not self.store.outbox:
                self._credit = min(self._credit + elapsed * self.drain_rate, 1.0)
                return []
            self._credit += elapsed * self.drain_rate
            budget = math.floor(self._credit)
            moved = []
            while budget > 0 and self.store.outbox:
                buffered = self.store.pop_message()
                assert buffered is not None
                box = self.delivered.setdefault(buffered.phone_no, [])
                out = WireOutbound(
                    to=buffered.phone_no,
                    text=buffered.text,
                    seq=len(box) + 1,
                    ts=int(now * 1000),
                )
                box.append(out)
                moved.append(out)
                self._credit -= 1.0
                budget -= 1
            if not self.store.outbox:
                self._credit = min(self._credit, 1.0)
            return moved

    def drain_all(self) -> list[WireOutbound]:
        """Deliver everything immediately (test and replay fast path)."""
        with self._lock:
            moved = []
            now = self.clock()
            while self.store.outbox:
                buffered = self.store.pop_message()
                assert buffered is not None
                box = self.delivered.setdefault(buffered.phone_no, [])
                out = WireOutbound(
                    buffered.phone_no, buffered.text, len(box) + 1, int(now * 1000)
                )
                box.append(out)
                moved.append(out)
            self._credit = min(self._credit, 1.0)
            return moved

    def poll_outbound(self, to: str, after_seq: int = 0) -> list[WireOutbound]:
        """All delivered messages for a phone with seq > after_seq, ascending."""
        with self._lock:
            box = self.delivered.get(to, [])
            # seq is dense and 1-based, so after_seq is also a list index
            return list(box[max(0, after_seq):])


class ServiceRunner:
    """Single serial loop: inbound messages, timeout sweeps, and buffer
    drains all run on one thread in arrival order."""

    def __init__(self, store: Store, engine: Engine, gateway: Gateway, tick: float = 0.05):
        self.store = store
        self.engine = engine
        self.gateway = gateway
        self.tick = tick
        self._wake = threading.Event()
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None
        self._last_sweep = gateway.clock()

    def submit(self, payload: dict) -> WireInbound:
        msg = self.gateway.submit_inbound(payload)
        self._wake.set()
        return msg

    def run_once(self) -> None:
        while (msg := self.gateway.take_inbound()) is not None:
            self.engine.handle_message(
                InboundSms(msg.from_phone, msg.text, msg.ts / 1000.0)
            )
        now = self.gateway.clock()
        if now - self._last_sweep >= self.engine.config.sweep_interval_seconds:
            self.engine.timeout_sweep(now)
            self._last_sweep = now
        self.gateway.drain(now)

    def _loop(self) -> None:
        while not self._stop.is_set():
            self._wake.wait(timeout=self.tick)
            self._wake.clear()
            self.run_once()
        self.run_once()  # final flush of queued inbound

    def start(self) -> None:
        self._thread = threading.Thread(target=self._loop, name="smsquiz-loop", daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._stop.set()
        self._wake.set()
        if self._thread is not None:
            self._thread.join(timeout=5)


class _Handler(BaseHTTPRequestHandler):
    runner: ServiceRunner  # set on the server class

    def _send(self, code: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def do_OPTIONS(self):  # noqa: N802 (stdlib naming)
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()

    def do_POST(self):  # noqa: N802
        if urlparse(self.path).path != "/sms":
            self._send(404, {"error": "not found"})
            return
        length = int(self.headers.get("Content-Length") or 0)
        try:
            payload = json.loads(self.rfile.read(length) or b"{}")
        except json.JSONDecodeError:
            self._send(400, {"error": "invalid JSON"})
            return
        try:
            msg = self.server.runner.submit(payload)  # type: ignore[attr-defined]
        except Rejected as exc:
            self._send(400, {"error": str(exc)})
            return
        self._send(202, {"status": "accepted", "ts": msg.ts})

    def do_GET(self):  # noqa: N802
        url = urlparse(self.path)
        if url.path == "/health":
            self._send(200, {"status": "ok"})
            return
        if url.path != "/sms":
            self._send(404, {"error": "not found"})
            return
        query = parse_qs(url.query)
        to = (query.get("to") or [""])[0]
        if not to:
            self._send(400, {"error": "missing 'to'"})
            return
        try:
            after = int((query.get("after") or ["0"])[0])
        except ValueError:
            self._send(400, {"error": "'after' must be an integer"})
            return
        gateway = self.server.runner.gateway  # type: ignore[attr-defined]
        messages = [m.as_wire() for m in gateway.poll_outbound(to, after)]
        self._send(200, {"messages": messages})

    def log_message(self, *args):  # quiet by default
        pass


def make_http_server(runner: ServiceRunner, host: str, port: int) -> ThreadingHTTPServer:
    server = ThreadingHTTPServer((host, port), _Handler)
    server.runner = runner  # type: ignore[attr-defined]
    return server
