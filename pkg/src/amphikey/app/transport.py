"""Message transports: framed TCP sockets, in-memory pairs, and a fault-injecting wrapper."""

from __future__ import annotations

import queue
import random
import socket
import threading
import time
from dataclasses import dataclass, field
from typing import Callable

from ..wire import DEFAULT_MAX_CHUNK, FrameDecoder, encode_frame


class TransportClosed(ConnectionError):
    pass


class SocketTransport:
    """Frames messages onto a connected stream socket."""

    def __init__(self, sock: socket.socket, max_chunk: int = DEFAULT_MAX_CHUNK):
        self.sock = sock
        self.max_chunk = max_chunk
        self._decoder = FrameDecoder()
        self._inbox: list[tuple[int, bytes]] = []
        self._send_lock = threading.Lock()
        self.bytes_sent = 0

    def send_frames(self, frames: list[bytes]) -> None:
        with self._send_lock:
            for f in frames:
                self.sock.sendall(f)
                self.bytes_sent += len(f)

    def send_message(self, msg_type: int, payload: bytes) -> None:
        self.send_frames(encode_frame(msg_type, payload, self.max_chunk))

    def recv_message(self, timeout: float | None = None) -> tuple[int, bytes]:
        deadline = None if timeout is None else time.monotonic() + timeout
        while not self._inbox:
            if deadline is not None:
                left = deadline - time.monotonic()
                if left <= 0:
                    raise TimeoutError("no message before deadline")
                self.sock.settimeout(left)
            else:
                self.sock.settimeout(None)
            try:
                data = self.sock.recv(65536)
            except socket.timeout:
                raise TimeoutError("no message before deadline") from None
            if not data:
                raise TransportClosed("peer closed the connection")
            self._inbox.extend(self._decoder.feed(data))
        return self._inbox.pop(0)

    def close(self) -> None:
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()


class MemoryTransport:
    """One end of an in-process pipe. Bytes still go through the frame codec."""

    def __init__(self, outbox: queue.Queue, inbox: queue.Queue, max_chunk: int = DEFAULT_MAX_CHUNK):
        self._out = outbox
        self._in = inbox
        self.max_chunk = max_chunk
        self._decoder = FrameDecoder()
        self._ready: list[tuple[int, bytes]] = []
        self.bytes_sent = 0

    @classmethod
    def pair(cls, max_chunk: int = DEFAULT_MAX_CHUNK) -> tuple["MemoryTransport", "MemoryTransport"]:
        a, b = queue.Queue(), queue.Queue()
        return cls(a, b, max_chunk), cls(b, a, max_chunk)

    def send_frames(self, frames: list[bytes]) -> None:
        for f in frames:
            self._out.put(f)
            self.bytes_sent += len(f)

    def send_message(self, msg_type: int, payload: bytes) -> None:
        self.send_frames(encode_frame(msg_type, payload, self.max_chunk))

    def recv_message(self, timeout: float | None = None) -> tuple[int, bytes]:
        """``timeout=0`` polls: raises TimeoutError at once if nothing complete is queued."""
        while not self._ready:
            try:
                if timeout == 0:
                    data = self._in.get_nowait()
                else:
                    data = self._in.get(timeout=timeout)
            except queue.Empty:
                raise TimeoutError("no message before deadline") from None
            self._ready.extend(self._decoder.feed(data))
        return self._ready.pop(0)

    def close(self) -> None:
        pass


class SimClock:
    """Millisecond clock that only moves when told to."""

    def __init__(self, start_ms: float = 0.0):
        self.t = float(start_ms)

    def __call__(self) -> float:
        return self.t

    def advance(self, ms: float) -> None:
        self.t += ms


@dataclass
class FaultPlan:
    delay_ms: float = 0.0
    loss_pct: float = 0.0  # probability in [0, 1] that a frame is dropped
    tamper: dict[int, tuple[int, int]] = field(default_factory=dict)  # msg_type -> (offset, xor mask)
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.loss_pct <= 1.0:
            raise ValueError("loss_pct must lie in [0, 1]")
        if self.delay_ms < 0:
            raise ValueError("delay_ms must be non-negative")


class FaultyTransport:
    """Wraps a transport and injects delay, frame loss and byte flips on send.

    A dropped frame is retransmitted once; if the retransmission is dropped as
    well the whole message is lost and the peer eventually times out. Delay
    either sleeps or advances a :class:`SimClock`.
    """

    def __init__(self, inner, plan: FaultPlan, sleep: Callable[[float], None] | None = None,
                 clock: SimClock | None = None):
        self.inner = inner
        self.plan = plan
        self._rng = random.Random(plan.seed)
        self._sleep = sleep or time.sleep
        self._clock = clock
        self.events: list[dict] = []

    def _drop(self) -> bool:
        return self.plan.loss_pct > 0 and self._rng.random() < self.plan.loss_pct

    def send_message(self, msg_type: int, payload: bytes) -> None:
        if msg_type in self.plan.tamper:
            offset, mask = self.plan.tamper[msg_type]
            if offset < len(payload):
                buf = bytearray(payload)
                buf[offset] ^= mask
                payload = bytes(buf)
                self.events.append({"fault": "tamper", "msg_type": msg_type, "offset": offset})
        if self.plan.delay_ms:
            if self._clock is not None:
                self._clock.advance(self.plan.delay_ms)
            else:
                self._sleep(self.plan.delay_ms / 1000.0)
            self.events.append({"fault": "delay", "msg_type": msg_type, "ms": self.plan.delay_ms})
        delivered = []
        for i, frame in enumerate(encode_frame(msg_type, payload, self.inner.max_chunk)):
            if self._drop():
                self.events.append({"fault": "drop", "msg_type": msg_type, "chunk": i})
                if self._drop():
                    self.events.append({"fault": "lost", "msg_type": msg_type, "chunk": i})
                    return  # message never completes at the peer
                self.events.append({"fault": "retransmit", "msg_type": msg_type, "chunk": i})
            delivered.append(frame)
        self.inner.send_frames(delivered)

    def recv_message(self, timeout: float | None = None) -> tuple[int, bytes]:
        return self.inner.recv_message(timeout)

    @property
    def max_chunk(self) -> int:
        return self.inner.max_chunk

    def send_frames(self, frames: list[bytes]) -> None:
        self.inner.send_frames(frames)

    def close(self) -> None:
        self.inner.close()
