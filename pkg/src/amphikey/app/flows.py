"""Handshake flows written once as generators.

A flow yields :data:`RECV` whenever it needs the next message and is resumed
with ``(msg_type, body)`` or has ``TimeoutError`` thrown into it. The
blocking driver feeds it from a real transport; the scenario simulator
interleaves two flows on one thread with a simulated clock.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Generator

from ..entropy import Entropy
from ..errors import AbortReason, HandshakeAbort
from ..handshake import (
    Established,
    HandshakeConfig,
    abort_body,
    client_finish,
    client_respond,
    parse_abort,
    server_finish,
    server_hello,
)
from ..wire import MSG_ABORT, MSG_CLIENT_KEYS, MSG_CONFIRM, MSG_NAMES, MSG_SERVER_HELLO

RECV = "recv"

Send = Callable[[int, bytes], None]
Flow = Generator[str, tuple[int, bytes], "Outcome"]


@dataclass
class Outcome:
    role: str
    mode: int
    suite_id: int
    established: Established | None = None
    reason: AbortReason | None = None
    origin: str | None = None  # "local" or "peer" for aborts
    detail: str = ""
    phases: dict = field(default_factory=dict)
    total_ns: int = 0

    @property
    def ok(self) -> bool:
        return self.established is not None

    @property
    def label(self) -> str:
        return "Established" if self.ok else f"Abort({self.reason.name})"

    def log_record(self) -> dict:
        return {
            "event": "handshake",
            "role": self.role,
            "mode": "deniable" if self.mode == 1 else "authenticated",
            "suite_id": self.suite_id,
            "outcome": "Established" if self.ok else "Abort",
            "reason": None if self.ok else self.reason.name,
            "origin": self.origin,
            "detail": self.detail,
            "peer": self.established.peer if self.ok else None,
            "phases_ns": dict(self.phases),
            "total_ns": self.total_ns,
        }


def _expect(msg: tuple[int, bytes], want: int) -> bytes:
    msg_type, body = msg
    if msg_type == MSG_ABORT:
        raise _PeerAbort(parse_abort(body))
    if msg_type != want:
        raise HandshakeAbort(AbortReason.MALFORMED,
                             f"expected {MSG_NAMES[want]}, got {MSG_NAMES.get(msg_type, hex(msg_type))}")
    return body


class _PeerAbort(Exception):
    def __init__(self, reason: AbortReason):
        self.reason = reason


def _recv(timeout_reason: AbortReason = AbortReason.TIMEOUT):
    try:
        msg = yield RECV
    except TimeoutError:
        raise HandshakeAbort(timeout_reason, "peer silent past the deadline") from None
    return msg


def _run(role: str, config: HandshakeConfig, send: Send, body) -> Flow:
    suite = config.suite
    out = Outcome(role, int(config.mode), suite.suite_id)
    t0 = time.perf_counter_ns()
    try:
        out.established = yield from body(out)
    except _PeerAbort as exc:
        out.reason, out.origin = exc.reason, "peer"
    except HandshakeAbort as exc:
        out.reason, out.origin, out.detail = exc.reason, "local", exc.detail
        try:
            send(MSG_ABORT, abort_body(exc.reason))
        except OSError:
            pass
    out.total_ns = time.perf_counter_ns() - t0
    return out


def server_flow(config: HandshakeConfig, rng: Entropy, send: Send) -> Flow:
    def body(out: Outcome):
        hello, session = server_hello(config, rng)
        send(MSG_SERVER_HELLO, hello)
        try:
            ck = _expect((yield from _recv()), MSG_CLIENT_KEYS)
            confirm, est = server_finish(config, session, ck)
        except HandshakeAbort:
            session.ephemeral.wipe()
            raise
        finally:
            out.phases = session.phases
        send(MSG_CONFIRM, confirm)
        return est

    return _run("server", config, send, body)


def client_flow(config: HandshakeConfig, rng: Entropy, send: Send) -> Flow:
    def body(out: Outcome):
        hello = _expect((yield from _recv()), MSG_SERVER_HELLO)
        ck, session = client_respond(config, hello, rng)
        out.phases = session.phases
        send(MSG_CLIENT_KEYS, ck)
        msg = yield from _recv()
        try:
            confirm = _expect(msg, MSG_CONFIRM)
        except _PeerAbort:
            session.abort(AbortReason.CONFIRM_FAILURE)
            raise
        return client_finish(session, confirm)

    return _run("client", config, send, body)


def drive_blocking(flow: Flow, transport, timeout_s: float) -> Outcome:
    """Run one flow against a blocking transport."""
    try:
        next(flow)
        while True:
            try:
                msg = transport.recv_message(timeout_s)
            except TimeoutError as exc:
                flow.throw(exc)
                continue
            flow.send(msg)
    except StopIteration as stop:
        return stop.value
