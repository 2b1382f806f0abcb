"""Scenario specs and the deterministic in-process runner.

A spec describes one situation (mode, faults, credential quality) and the
outcome it must produce. The runner plays server and client on one thread
over in-memory transports, with a simulated clock, so a given seed always
yields the same bytes and the same verdict.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ..channel import SecureChannel, await_ack, receive_table, send_table
from ..entropy import PinnedEntropy
from ..errors import AbortReason, ChannelError, HarnessError, WireError
from ..handshake import DEFAULT_TIMEOUT_MS, HandshakeConfig
from ..pki import Certificate, issue_cert
from ..suite import Mode, SigKeyPair, SuiteDescriptor, default_suite, get_suite, sig_keygen
from ..wire import MSG_CLIENT_KEYS, MSG_CONFIRM, MSG_SERVER_HELLO
from .flows import RECV, Outcome, client_flow, server_flow
from .transport import FaultPlan, FaultyTransport, MemoryTransport, SimClock

# fixed wall-clock for certificate checks inside scenarios
SCENARIO_NOW = 1_760_000_000

FLIGHTS = {
    "hello": ("server", MSG_SERVER_HELLO),
    "client_keys": ("client", MSG_CLIENT_KEYS),
    "confirm": ("server", MSG_CONFIRM),
}
CREDENTIALS = ("valid", "rogue-ca", "expired", "not-yet-valid", "preprovisioned", "unknown-subject")
_EXPECT = re.compile(r"^(Established|Abort\((\w+)\))$")


def _mode(name: str | int) -> Mode:
    if isinstance(name, int):
        return Mode(name)
    try:
        return {"deniable": Mode.DENIABLE, "authenticated": Mode.AUTHENTICATED, "auth": Mode.AUTHENTICATED}[name.lower()]
    except KeyError:
        raise HarnessError(f"unknown mode {name!r}") from None


@dataclass(frozen=True)
class Tamper:
    flight: str
    byte_offset: int
    xor: int = 0x01


@dataclass(frozen=True)
class ScenarioSpec:
    name: str
    mode: str
    expected: str = "Established"
    client_count: int = 1
    delay_ms: float = 0.0
    loss_pct: float = 0.0
    tamper: Tamper | None = None
    seed: int = 0
    credential: str = "valid"
    server_mode: str | None = None
    suite: str | None = None
    subject: str = "meter-001"
    table_bytes: int = 1500
    timeout_ms: int = DEFAULT_TIMEOUT_MS
    description: str = ""

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioSpec":
        d = dict(d)
        t = d.pop("tamper", None)
        known = set(cls.__dataclass_fields__)
        extra = set(d) - known
        if extra:
            raise HarnessError(f"unknown scenario fields: {sorted(extra)}")
        if "name" not in d or "mode" not in d:
            raise HarnessError("scenario needs at least 'name' and 'mode'")
        spec = cls(tamper=Tamper(**t) if t else None, **d)
        spec.validate()
        return spec

    @classmethod
    def load(cls, path: str | Path) -> "ScenarioSpec":
        try:
            return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError, TypeError) as exc:
            raise HarnessError(f"{path}: {exc}") from None

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.tamper is None:
            d.pop("tamper")
        return d

    @property
    def client_mode(self) -> Mode:
        return _mode(self.mode)

    @property
    def server_mode_(self) -> Mode:
        return _mode(self.server_mode or self.mode)

    def suite_for(self, mode: Mode) -> SuiteDescriptor:
        if self.suite and get_suite(self.suite).mode == mode:
            return get_suite(self.suite)
        return default_suite(mode)

    def flight_length(self, flight: str) -> int:
        suite = self.suite_for(self.client_mode)
        sz = suite.sizes
        if flight == "hello":
            return 2 + sz.kem1_pk + sz.kem2_pk
        if flight == "confirm":
            return 32
        if self.client_mode == Mode.DENIABLE:
            return sz.payload
        subj = len(self.subject.encode())
        if self.credential == "preprovisioned":
            return sz.payload + 3 + subj
        cert_len = 9 + 1 + subj + 3 + sz.sig_pk + 16 + 2 + sz.sig_max
        return sz.payload + 3 + cert_len

    def validate(self) -> None:
        _mode(self.mode)
        if self.server_mode is not None:
            _mode(self.server_mode)
        if not 0.0 <= self.loss_pct <= 1.0:
            raise HarnessError("loss_pct must lie in [0, 1]")
        if self.delay_ms < 0 or self.client_count < 1 or self.table_bytes < 0:
            raise HarnessError("delay_ms, client_count and table_bytes must be non-negative (client_count >= 1)")
        if self.credential not in CREDENTIALS:
            raise HarnessError(f"credential must be one of {CREDENTIALS}")
        m = _EXPECT.match(self.expected)
        if not m:
            raise HarnessError(f"expected must be 'Established' or 'Abort(REASON)', got {self.expected!r}")
        if m.group(2) and m.group(2) not in AbortReason.__members__:
            raise HarnessError(f"unknown abort reason {m.group(2)}")
        if self.tamper is not None:
            if self.tamper.flight not in FLIGHTS:
                raise HarnessError(f"tamper flight must be one of {sorted(FLIGHTS)}")
            n = self.flight_length(self.tamper.flight)
            if not 0 <= self.tamper.byte_offset < n:
                raise HarnessError(f"tamper offset {self.tamper.byte_offset} outside {self.tamper.flight} ({n} bytes)")
            if not 1 <= self.tamper.xor <= 0xFF:
                raise HarnessError("tamper xor mask must be 1..255")


@dataclass
class ClientResult:
    index: int
    observed: str
    server: dict
    client: dict
    transcript: str | None = None
    table_ok: bool | None = None
    faults: list = field(default_factory=list)


@dataclass
class ScenarioReport:
    name: str
    expected: str
    results: list[ClientResult]

    @property
    def observed(self) -> list[str]:
        return [r.observed for r in self.results]

    @property
    def passed(self) -> bool:
        return all(o == self.expected for o in self.observed)

    def fingerprint(self) -> str:
        """Hash over the deterministic parts of the run (no timings)."""
        h = hashlib.sha256()
        for r in self.results:
            h.update(json.dumps([r.observed, r.transcript, r.table_ok, r.faults], sort_keys=True).encode())
        return h.hexdigest()

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "expected": self.expected,
            "observed": self.observed,
            "passed": self.passed,
            "fingerprint": self.fingerprint(),
            "results": [asdict(r) for r in self.results],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


# -- simulated PKI --

@dataclass
class _Pki:
    ca: SigKeyPair
    client: SigKeyPair
    cert: Certificate


def _make_pki(spec: ScenarioSpec, rng: PinnedEntropy, suite: SuiteDescriptor) -> _Pki:
    ca = sig_keygen(suite.sig_name, rng)
    client = sig_keygen(suite.sig_name, rng)
    issuer = ca
    window = (SCENARIO_NOW - 86_400, SCENARIO_NOW + 86_400)
    if spec.credential == "rogue-ca":
        issuer = sig_keygen(suite.sig_name, rng)
    elif spec.credential == "expired":
        window = (SCENARIO_NOW - 2 * 86_400, SCENARIO_NOW - 1)
    elif spec.credential == "not-yet-valid":
        window = (SCENARIO_NOW + 60, SCENARIO_NOW + 86_400)
    cert = issue_cert(issuer.secret, spec.subject, client.public, window, suite)
    return _Pki(ca, client, cert)


def _configs(spec: ScenarioSpec, pki: _Pki | None, clock: SimClock):
    cmode, smode = spec.client_mode, spec.server_mode_
    csuite, ssuite = spec.suite_for(cmode), spec.suite_for(smode)
    now = lambda: SCENARIO_NOW  # noqa: E731
    s_kw = dict(timeout_ms=spec.timeout_ms, now=now, clock_ms=clock)
    c_kw = dict(s_kw)
    if smode == Mode.AUTHENTICATED:
        s_kw["ca_pk"] = pki.ca.public
        if spec.credential == "preprovisioned":
            s_kw["known_clients"] = {spec.subject: pki.cert}
    if cmode == Mode.AUTHENTICATED:
        c_kw["local_cert"] = pki.cert
        c_kw["local_sig_sk"] = bytes(pki.client.secret)
        c_kw["send_certificate"] = spec.credential not in ("preprovisioned", "unknown-subject")
    server = HandshakeConfig(smode, ssuite.suite_id, **s_kw)
    client = HandshakeConfig(cmode, csuite.suite_id, **c_kw)
    return server, client


def simulate(server_gen, client_gen, transports: dict, clock: SimClock, timeout_ms: float) -> list[Outcome]:
    """Interleave two flows until both finish. Returns outcomes in completion order."""
    live = {"server": server_gen, "client": client_gen}
    done: list[Outcome] = []
    waiting: list[str] = []  # oldest first
    for name, gen in live.items():
        try:
            assert next(gen) == RECV
            waiting.append(name)
        except StopIteration as stop:
            done.append(stop.value)
    live = {n: g for n, g in live.items() if n in waiting}

    def step(name, fn):
        try:
            fn()
            return True
        except StopIteration as stop:
            done.append(stop.value)
            del live[name]
            waiting.remove(name)
            return False

    while live:
        progressed = False
        for name in list(waiting):
            if name not in live:
                continue
            try:
                msg = transports[name].recv_message(timeout=0)
            except TimeoutError:
                continue
            except WireError as exc:
                raise HarnessError(f"{name} received undecodable bytes: {exc}") from exc
            progressed = True
            waiting.remove(name)
            waiting.append(name)
            step(name, lambda g=live[name], m=msg: g.send(m))
        if not progressed:
            # all remaining flows are blocked: let the oldest waiter time out
            name = waiting[0]
            clock.advance(timeout_ms)
            waiting.remove(name)
            waiting.append(name)
            step(name, lambda g=live[name]: g.throw(TimeoutError("simulated")))
    return done


def _observed(done: list[Outcome]) -> str:
    for out in done:
        if not out.ok and out.origin == "local":
            return out.label
    for out in done:
        if not out.ok:
            return out.label
    return "Established"


def _run_one(spec: ScenarioSpec, index: int, rng: PinnedEntropy, pki: _Pki | None) -> ClientResult:
    clock = SimClock()
    s_cfg, c_cfg = _configs(spec, pki, clock)
    s_raw, c_raw = MemoryTransport.pair()
    plans = {"server": FaultPlan(spec.delay_ms, spec.loss_pct, {}, spec.seed * 1000 + 2 * index),
             "client": FaultPlan(spec.delay_ms, spec.loss_pct, {}, spec.seed * 1000 + 2 * index + 1)}
    if spec.tamper is not None:
        side, msg_type = FLIGHTS[spec.tamper.flight]
        plans[side].tamper[msg_type] = (spec.tamper.byte_offset, spec.tamper.xor)
    s_tr = FaultyTransport(s_raw, plans["server"], clock=clock)
    c_tr = FaultyTransport(c_raw, plans["client"], clock=clock)

    s_gen = server_flow(s_cfg, rng.fork(f"server-{index}"), s_tr.send_message)
    c_gen = client_flow(c_cfg, rng.fork(f"client-{index}"), c_tr.send_message)
    done = simulate(s_gen, c_gen, {"server": s_tr, "client": c_tr}, clock, spec.timeout_ms)
    by_role = {o.role: o for o in done}
    s_out, c_out = by_role["server"], by_role["client"]
    observed = _observed(done)
    transcript = None
    table_ok = None
    if s_out.ok and c_out.ok:
        if s_out.established.transcript_digest != c_out.established.transcript_digest:
            raise HarnessError("both sides established on different transcripts")
        transcript = c_out.established.transcript_digest.hex()
        table_ok, err = _transfer(spec, rng.fork(f"table-{index}"), s_tr, c_tr, s_out, c_out)
        if err or not table_ok:
            observed = err or "TransferFailed(mismatch)"
    faults = [dict(e, side="server") for e in s_tr.events] + [dict(e, side="client") for e in c_tr.events]
    return ClientResult(index, observed, s_out.log_record(), c_out.log_record(), transcript, table_ok, faults)


def _transfer(spec, rng, s_tr, c_tr, s_out, c_out) -> tuple[bool, str | None]:
    table = rng.random_bytes(spec.table_bytes) if spec.table_bytes else b""
    client = SecureChannel(c_tr, c_out.established.keys, "client")
    server = SecureChannel(s_tr, s_out.established.keys, "server")
    try:
        send_table(client, 1, table)
        got = receive_table(server, timeout=0)
        await_ack(client, 1, len(table), timeout=0)
        client.close()
        if receive_table(server, timeout=0) is not None:
            return False, "TransferFailed(no close)"
    except ChannelError as exc:
        return False, f"ChannelError({exc.kind.value})"
    except TimeoutError:
        return False, "TransferFailed(lost record)"
    return got == (1, table), None


def run_scenario(spec: ScenarioSpec) -> ScenarioReport:
    spec.validate()
    root = PinnedEntropy(spec.seed).fork(spec.name)
    pki = None
    if Mode.AUTHENTICATED in (spec.client_mode, spec.server_mode_):
        pki = _make_pki(spec, root.fork("pki"), spec.suite_for(Mode.AUTHENTICATED))
    results = [_run_one(spec, i, root, pki) for i in range(spec.client_count)]
    return ScenarioReport(spec.name, spec.expected, results)


def load_suite(directory: str | Path) -> list[ScenarioSpec]:
    return [ScenarioSpec.load(p) for p in sorted(Path(directory).glob("*.json"))]
