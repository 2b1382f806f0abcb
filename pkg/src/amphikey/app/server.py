"""Threaded TCP server: handshake per connection, then table transfers until close."""

from __future__ import annotations

import hashlib
import socket
import socketserver
import threading
from dataclasses import dataclass

from ..channel import SecureChannel, receive_table
from ..entropy import Entropy, SystemEntropy
from ..errors import AmphikeyError, ConfigInvalid, KeystoreError
from ..handshake import DEFAULT_TIMEOUT_MS, HandshakeConfig
from ..pki import Keystore
from ..suite import Mode, default_suite, get_suite
from ..wire import DEFAULT_MAX_CHUNK
from .flows import drive_blocking, server_flow
from .logs import EventLog
from .transport import FaultPlan, FaultyTransport, SocketTransport, TransportClosed


@dataclass
class ServerConfig:
    mode: Mode
    host: str = "127.0.0.1"
    port: int = 0
    keys_dir: str | None = None
    suite_id: int | None = None
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    idle_timeout_s: float = 30.0
    max_chunk: int = DEFAULT_MAX_CHUNK
    log_path: str | None = None
    ca_scheme: str | None = None
    # load every <name>.cert in keys_dir so clients may send only their subject
    preprovisioned: bool = False

    def handshake_config(self) -> HandshakeConfig:
        mode = Mode(self.mode)
        suite = get_suite(self.suite_id) if self.suite_id is not None else default_suite(mode)
        kw = {}
        if mode == Mode.AUTHENTICATED:
            if not self.keys_dir:
                raise ConfigInvalid("authenticated server needs a keys directory holding ca.pk")
            store = Keystore(self.keys_dir)
            try:
                kw["ca_pk"] = store.load_ca_public(self.ca_scheme or suite.sig_name)
            except KeystoreError as exc:
                raise ConfigInvalid(str(exc)) from None
            if self.preprovisioned:
                known = {}
                for p in sorted(store.root.glob("*.cert")):
                    cert = store.load_cert(p.stem)
                    known[cert.subject] = cert
                kw["known_clients"] = known
        cfg = HandshakeConfig(mode, suite.suite_id, timeout_ms=self.timeout_ms, ca_scheme=self.ca_scheme, **kw)
        cfg.validate("server")
        return cfg


class AmphikeyServer:
    """Serve handshakes on a background thread; ``start()`` returns the bound address."""

    def __init__(self, config: ServerConfig, rng: Entropy | None = None, log: EventLog | None = None,
                 fault: FaultPlan | None = None):
        self.config = config
        self.handshake = config.handshake_config()  # fails fast on bad config
        self.rng = rng or SystemEntropy()
        self._rng_lock = threading.Lock()
        self.log = log or EventLog(config.log_path)
        self.fault = fault
        self.tables: list[tuple[str | None, int, int]] = []
        self.key_fingerprints: list[str] = []
        self._lock = threading.Lock()
        self._server: socketserver.ThreadingTCPServer | None = None
        self._thread: threading.Thread | None = None

    def random_bytes(self, n: int) -> bytes:
        with self._rng_lock:
            return self.rng.random_bytes(n)

    def handle(self, sock: socket.socket, addr) -> None:
        transport = SocketTransport(sock, self.config.max_chunk)
        wire = FaultyTransport(transport, self.fault) if self.fault else transport
        out = drive_blocking(server_flow(self.handshake, self, wire.send_message), transport,
                             self.config.timeout_ms / 1000.0)
        self.log.emit(dict(out.log_record(), remote=f"{addr[0]}:{addr[1]}"))
        if not out.ok:
            return
        est = out.established
        with self._lock:
            self.key_fingerprints.append(hashlib.sha256(est.keys.to_bytes()).hexdigest())
        channel = SecureChannel(wire, est.keys, "server")

        def store(table_id: int, data: bytes) -> None:
            with self._lock:
                self.tables.append((est.peer, table_id, len(data)))
            self.log.emit({"event": "table", "peer": est.peer, "table_id": table_id, "bytes": len(data)})

        try:
            while receive_table(channel, self.config.idle_timeout_s, store) is not None:
                pass
        except (AmphikeyError, TimeoutError, TransportClosed, OSError) as exc:
            self.log.emit({"event": "channel_error", "peer": est.peer, "error": str(exc)})

    def start(self) -> tuple[str, int]:
        outer = self

        class Handler(socketserver.BaseRequestHandler):
            def handle(self):
                try:
                    outer.handle(self.request, self.client_address)
                except (TransportClosed, OSError) as exc:
                    outer.log.emit({"event": "connection_error", "error": str(exc)})

        class Server(socketserver.ThreadingTCPServer):
            allow_reuse_address = True
            daemon_threads = True
            request_queue_size = 128

        self._server = Server((self.config.host, self.config.port), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, name="amphikey-server", daemon=True)
        self._thread.start()
        return self.address

    @property
    def address(self) -> tuple[str, int]:
        return self._server.server_address[:2]

    def stop(self) -> None:
        if self._server is not None:
            self._server.shutdown()
            self._server.server_close()
            self._thread.join()
            self._server = None
        self.log.close()

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, *exc):
        self.stop()


def run_server(config: ServerConfig, stop: threading.Event | None = None,
               ready: threading.Event | None = None) -> None:
    """Blocking serve loop. Returns once ``stop`` is set (or on KeyboardInterrupt)."""
    server = AmphikeyServer(config)
    host, port = server.start()
    server.log.emit({"event": "listening", "host": host, "port": port, "mode": Mode(config.mode).name.lower()})
    if ready is not None:
        ready.set()
    try:
        stop = stop or threading.Event()
        while not stop.wait(0.5):
            pass
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
