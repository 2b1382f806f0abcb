"""Client entry point: connect, handshake, send a table, check the ack."""

from __future__ import annotations

import socket
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import IO

from ..channel import SecureChannel, transfer_table
from ..entropy import Entropy, SystemEntropy
from ..errors import AmphikeyError, ConfigInvalid, KeystoreError
from ..handshake import DEFAULT_TIMEOUT_MS, HandshakeConfig
from ..pki import Keystore
from ..suite import Mode, default_suite, get_suite
from ..wire import DEFAULT_MAX_CHUNK
from .flows import Outcome, client_flow, drive_blocking
from .transport import FaultPlan, FaultyTransport, SocketTransport, TransportClosed

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_ABORT = 2
EXIT_CHANNEL = 3


@dataclass
class ClientConfig:
    mode: Mode
    keys_dir: str | None = None
    name: str = "client"  # keystore entry holding <name>.sigsk / <name>.cert
    suite_id: int | None = None
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    max_chunk: int = DEFAULT_MAX_CHUNK
    send_certificate: bool = True
    table_id: int = 1
    delay_ms: float = 0.0

    def handshake_config(self) -> HandshakeConfig:
        mode = Mode(self.mode)
        suite = get_suite(self.suite_id) if self.suite_id is not None else default_suite(mode)
        kw = {}
        if mode == Mode.AUTHENTICATED:
            if not self.keys_dir:
                raise ConfigInvalid("authenticated client needs a keys directory")
            store = Keystore(self.keys_dir)
            try:
                kw["local_cert"] = store.load_cert(self.name)
                # keep the pair alive while copying; its finalizer wipes the buffer
                with store.load_signing_key(self.name, suite.sig_name) as pair:
                    kw["local_sig_sk"] = bytes(pair.secret)
            except KeystoreError as exc:
                raise ConfigInvalid(str(exc)) from None
        cfg = HandshakeConfig(mode, suite.suite_id, timeout_ms=self.timeout_ms,
                              send_certificate=self.send_certificate, **kw)
        cfg.validate("client")
        return cfg


def connect(config: ClientConfig, server_addr: tuple[str, int], rng: Entropy | None = None,
            hs: HandshakeConfig | None = None) -> tuple[Outcome, SocketTransport, object]:
    """Open a connection and run the handshake. Caller owns the returned transport."""
    hs = hs or config.handshake_config()
    sock = socket.create_connection(server_addr, timeout=config.timeout_ms / 1000.0)
    transport = SocketTransport(sock, config.max_chunk)
    wire = transport
    if config.delay_ms:
        wire = FaultyTransport(transport, FaultPlan(delay_ms=config.delay_ms))
    out = drive_blocking(client_flow(hs, rng or SystemEntropy(), wire.send_message), transport,
                         config.timeout_ms / 1000.0)
    return out, transport, wire


def run_client(config: ClientConfig, server_addr: tuple[str, int], table: str | Path | bytes,
               rng: Entropy | None = None, out: IO[str] | None = None) -> int:
    """Returns a process exit status: 0 on an acknowledged transfer, nonzero otherwise."""
    out = out or sys.stdout
    data = table if isinstance(table, (bytes, bytearray)) else Path(table).read_bytes()
    try:
        hs = config.handshake_config()
    except ConfigInvalid as exc:
        print(f"config error: {exc}", file=out)
        return EXIT_ERROR
    try:
        outcome, transport, wire = connect(config, server_addr, rng, hs)
    except OSError as exc:
        print(f"connection failed: {exc}", file=out)
        return EXIT_ERROR
    try:
        if not outcome.ok:
            who = "server" if outcome.origin == "peer" else "client"
            print(f"handshake aborted by {who}: {outcome.reason.name}"
                  + (f" ({outcome.detail})" if outcome.detail else ""), file=out)
            return EXIT_ABORT
        channel = SecureChannel(wire, outcome.established.keys, "client")
        try:
            ack = transfer_table(channel, config.table_id, data, timeout=config.timeout_ms / 1000.0)
            channel.close()
        except (AmphikeyError, TimeoutError, TransportClosed) as exc:
            print(f"channel error: {exc}", file=out)
            return EXIT_CHANNEL
        print(f"established ({Mode(config.mode).name.lower()}); table {ack.table_id} acknowledged, "
              f"{ack.count} bytes", file=out)
        return EXIT_OK
    finally:
        transport.close()
