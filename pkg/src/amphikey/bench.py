"""Latency benchmarks and the throughput calculator.

Numbers are wall-clock medians from ``perf_counter_ns``. Reference values
ride along in ``reference_ns`` for context; they come from different hardware
and are not targets.
"""

from __future__ import annotations

import csv
import io
import statistics
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable

from .app.flows import client_flow, server_flow
from .app.scenario import simulate
from .app.transport import MemoryTransport, SimClock
from .channel import open_record, seal_record
from .entropy import Entropy, PinnedEntropy
from .errors import DomainError
from .handshake import HandshakeConfig
from .pki import issue_cert
from .suite import (
    AUTH_1,
    Mode,
    SuiteDescriptor,
    aead_open,
    aead_seal,
    default_suite,
    get_suite,
    kdf_extract_expand,
    kem_decaps,
    kem_encaps,
    kem_keygen,
    mac,
    sig_keygen,
    sig_sign,
    sig_verify,
)
from .suite import x25519

MTU_PAYLOAD = 1500
NOT_BUILT = "not built"

# (operation, participant, reference ns) for every keygen / sender / receiver row
REFERENCE_ROWS: list[tuple[str, str, float | None]] = [
    ("X25519 Key Generation", "server", 15767),
    ("ML-KEM-768 Key Generation", "server", 42293),
    ("Raccoon Key Generation", "server", 737109),
    ("ML-DSA-65 Key Generation", "server", 124145),
    ("ML-KEM-768 Encapsulation", "sender", 56196),
    ("X25519 Shared Secret", "sender", 39041),
    ("ML-DSA-65 Signing", "sender", 489609),
    ("Raccoon Signing", "sender", 1225127),
    ("Raccoon Verification", "sender", 408700),
    ("Ascon-128a AEAD Encryption", "sender", 2686),
    ("Raccoon Sign", "client", 1225100),
    ("Raccoon Signature Verification", "client", 408700),
    ("ML-DSA-65 Signature Verification", "client", 121700),
    ("ML-KEM-768 Decapsulation", "client", 59100),
    ("X25519 Shared Secret", "client", 33300),
    ("Ascon-128a AEAD Decryption", "client", 6000),
]


@dataclass
class BenchRow:
    operation: str
    participant: str
    median_ns: float | None
    mean_ns: float | None
    iterations: int
    reference_ns: float | None = None
    est_cycles: float | None = None
    note: str = ""


@dataclass
class BenchReport:
    title: str
    rows: list[BenchRow] = field(default_factory=list)
    derived: dict = field(default_factory=dict)

    def row(self, operation: str, participant: str | None = None) -> BenchRow:
        for r in self.rows:
            if r.operation == operation and (participant is None or r.participant == participant):
                return r
        raise KeyError(operation)

    def to_text(self) -> str:
        head = ("operation", "participant", "median_ns", "mean_ns", "iters", "reference_ns", "est_cycles", "note")
        body = [(r.operation, r.participant, _fmt(r.median_ns), _fmt(r.mean_ns), str(r.iterations),
                 _fmt(r.reference_ns), _fmt(r.est_cycles), r.note) for r in self.rows]
        widths = [max(len(x[i]) for x in [head, *body]) for i in range(len(head))]
        lines = [self.title, "  ".join(h.ljust(w) for h, w in zip(head, widths)),
                 "  ".join("-" * w for w in widths)]
        lines += ["  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in body]
        for k, v in self.derived.items():
            lines.append(f"{k}: {v:.1f}" if isinstance(v, float) else f"{k}: {v}")
        return "\n".join(lines)

    def to_csv(self, fh=None) -> str:
        buf = fh or io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(BenchRow.__dataclass_fields__))
        w.writeheader()
        for r in self.rows:
            w.writerow(asdict(r))
        return buf.getvalue() if fh is None else ""


def _fmt(v) -> str:
    if v is None:
        return "-"
    return f"{v:.0f}"


def throughput_from_latency(handshake_ns: float, payload_bytes: int = MTU_PAYLOAD) -> float:
    """Mbps if every handshake carried ``payload_bytes``: bits per ns times 1000."""
    if handshake_ns <= 0 or payload_bytes < 0:
        raise DomainError("handshake_ns must be positive and payload_bytes non-negative")
    return payload_bytes * 8 / handshake_ns * 1000


def cpu_mhz() -> float | None:
    """Nominal clock from /proc/cpuinfo, for labelled cycle estimates only."""
    try:
        with open("/proc/cpuinfo", encoding="ascii", errors="ignore") as fh:
            for line in fh:
                if line.lower().startswith("cpu mhz"):
                    return float(line.split(":")[1])
    except (OSError, ValueError):
        pass
    return None


def time_op(fn: Callable[[], object], iterations: int, warmup: int = 3) -> tuple[float, float]:
    """(median, mean) in ns of ``fn`` over ``iterations`` timed calls."""
    if iterations < 1:
        raise DomainError("iterations must be at least 1")
    for _ in range(warmup):
        fn()
    samples = []
    clock = time.perf_counter_ns
    for _ in range(iterations):
        t0 = clock()
        fn()
        samples.append(clock() - t0)
    return float(statistics.median(samples)), float(statistics.fmean(samples))


def _reference(op: str, participant: str) -> float | None:
    for name, who, ns in REFERENCE_ROWS:
        if name == op and who == participant:
            return float(ns)
    return None


def bench_primitives(suite: SuiteDescriptor | int | str = AUTH_1, iterations: int = 1000,
                     rng: Entropy | None = None) -> BenchReport:
    """Every primitive the handshake uses, one row per reference operation name."""
    if iterations < 1:
        raise DomainError("iterations must be at least 1")
    suite = get_suite(suite)
    rng = rng or PinnedEntropy(b"bench")
    mhz = cpu_mhz()
    sig = suite.sig_name or AUTH_1.sig_name
    report = BenchReport(f"primitives: {suite.name}, {iterations} iterations")

    def add(op, who, fn, note=""):
        med, mean = time_op(fn, iterations)
        report.rows.append(BenchRow(op, who, med, mean, iterations, _reference(op, who),
                                    med * mhz / 1000 if mhz else None, note))

    def skip(op, who):
        report.rows.append(BenchRow(op, who, None, None, 0, _reference(op, who), None, NOT_BUILT))

    k1 = kem_keygen(suite.kem1_name, rng)
    k2 = kem_keygen(suite.kem2_name, rng)
    s = sig_keygen(sig, rng)
    c1, _ = kem_encaps(suite.kem1_name, k1.public, rng)
    c2, _ = kem_encaps(suite.kem2_name, k2.public, rng)
    msg = c1 + c2
    signature = sig_sign(sig, s.secret, msg, rng)
    key, nonce = rng.random_bytes(16), rng.random_bytes(16)
    pt = rng.random_bytes(MTU_PAYLOAD)
    sealed = aead_seal(key, nonce, b"", pt)
    eph_sk = rng.random_bytes(32)
    sig_note = "" if sig == "ML-DSA-65" else f"measured with {sig}"
    if suite.sig_name is None:
        sig_note = f"measured with {sig}; {suite.name} has no signature"

    add("X25519 Key Generation", "server", lambda: kem_keygen("X25519", rng))
    add("ML-KEM-768 Key Generation", "server", lambda: kem_keygen("ML-KEM-768", rng))
    skip("Raccoon Key Generation", "server")
    add("ML-DSA-65 Key Generation", "server", lambda: sig_keygen(sig, rng), sig_note)
    add("ML-KEM-768 Encapsulation", "sender", lambda: kem_encaps("ML-KEM-768", k1.public, rng))
    add("X25519 Shared Secret", "sender", lambda: x25519.dh(eph_sk, k2.public))
    add("ML-DSA-65 Signing", "sender", lambda: sig_sign(sig, s.secret, msg, rng), sig_note)
    skip("Raccoon Signing", "sender")
    skip("Raccoon Verification", "sender")
    add("Ascon-128a AEAD Encryption", "sender", lambda: aead_seal(key, nonce, b"", pt), "1500-byte record")
    skip("Raccoon Sign", "client")
    skip("Raccoon Signature Verification", "client")
    add("ML-DSA-65 Signature Verification", "client", lambda: sig_verify(sig, s.public, msg, signature), sig_note)
    add("ML-KEM-768 Decapsulation", "client", lambda: kem_decaps("ML-KEM-768", k1.secret, c1))
    add("X25519 Shared Secret", "client", lambda: kem_decaps("X25519", k2.secret, c2))
    add("Ascon-128a AEAD Decryption", "client", lambda: aead_open(key, nonce, b"", sealed), "1500-byte record")
    add("HKDF-SHA256 (32-byte output)", "both", lambda: kdf_extract_expand(msg[:96], b"", b"amphikey/bench", 32))
    add("HMAC-SHA256 over c1||c2", "both", lambda: mac(key + key, msg))
    return report


# phase name -> row label; the client is the AKEM sender, the server the receiver
PHASE_LABELS = {
    "keygen": "Ephemeral KEM key generation",
    "kem1_encaps": "AKEM ML-KEM-768 encapsulation",
    "kem2_encaps": "AKEM X25519 encapsulation",
    "kem1_decaps": "AKEM ML-KEM-768 decapsulation",
    "kem2_decaps": "AKEM X25519 decapsulation",
    "kdf": "Nonce/Key Deriv. (HKDF)",
    "tag": "Tag (HMAC)",
    "tag_verify": "Tag comparison",
    "sign": "Signing",
    "sig_verify": "Signature verification",
    "cert_verify": "Certificate verification",
    "confirm": "Key confirmation MAC",
    "confirm_prep": "Record key and confirm key derivation",
    "confirm_verify": "Confirm check",
    "aead_seal": "Ascon-128a record seal (1500 B)",
    "aead_open": "Ascon-128a record open (1500 B)",
}

# deniable-mode reference values keyed by (role, phase)
DENIABLE_REFERENCE = {
    ("sender (client)", "kem1_encaps"): 56196,
    ("sender (client)", "kem2_encaps"): 39041,
    ("sender (client)", "kdf"): 55185,
    ("sender (client)", "tag"): 4008,
    ("receiver (server)", "kem1_decaps"): 133074,
    ("receiver (server)", "kem2_decaps"): 103685,
    ("receiver (server)", "kdf"): 167481,
    ("receiver (server)", "tag"): 4617,
}

HANDSHAKE_PHASES = {
    Mode.DENIABLE: {
        "sender (client)": ["kem1_encaps", "kem2_encaps", "kdf", "tag", "confirm_prep", "confirm_verify", "aead_seal"],
        "receiver (server)": ["keygen", "kem1_decaps", "kem2_decaps", "kdf", "tag", "tag_verify", "confirm",
                              "aead_open"],
    },
    Mode.AUTHENTICATED: {
        "sender (client)": ["kem1_encaps", "kem2_encaps", "sign", "kdf", "confirm_prep", "confirm_verify",
                            "aead_seal"],
        "receiver (server)": ["keygen", "cert_verify", "sig_verify", "kem1_decaps", "kem2_decaps", "kdf",
                              "confirm", "aead_open"],
    },
}


def _handshake_configs(mode: Mode, suite: SuiteDescriptor, rng: Entropy, clock: SimClock):
    if mode == Mode.DENIABLE:
        cfg = HandshakeConfig(mode, suite.suite_id, clock_ms=clock)
        return cfg, cfg
    now = 1_760_000_000
    ca = sig_keygen(suite.sig_name, rng)
    me = sig_keygen(suite.sig_name, rng)
    cert = issue_cert(ca.secret, "bench-client", me.public, (now - 60, now + 86_400), suite)
    server = HandshakeConfig(mode, suite.suite_id, ca_pk=ca.public, now=lambda: now, clock_ms=clock)
    client = HandshakeConfig(mode, suite.suite_id, local_cert=cert, local_sig_sk=bytes(me.secret),
                             now=lambda: now, clock_ms=clock)
    return server, client


def run_loopback_handshake(server_cfg, client_cfg, rng: Entropy, clock: SimClock | None = None):
    """One full handshake over in-memory framed transports; returns (server, client) outcomes."""
    clock = clock or SimClock()
    s_tr, c_tr = MemoryTransport.pair()
    s = server_flow(server_cfg, rng, s_tr.send_message)
    c = client_flow(client_cfg, rng, c_tr.send_message)
    done = simulate(s, c, {"server": s_tr, "client": c_tr}, clock, server_cfg.timeout_ms)
    by_role = {o.role: o for o in done}
    return by_role["server"], by_role["client"]


def bench_handshake(mode: Mode | int | str, suite: SuiteDescriptor | int | str | None = None,
                    iterations: int = 1000, rng: Entropy | None = None) -> BenchReport:
    """Per-phase medians for both roles plus the handshake total and derived throughput."""
    if iterations < 1:
        raise DomainError("iterations must be at least 1")
    if isinstance(mode, str):
        mode = {"deniable": Mode.DENIABLE, "authenticated": Mode.AUTHENTICATED}[mode.lower()]
    mode = Mode(mode)
    suite = get_suite(suite) if suite is not None else default_suite(mode)
    if suite.mode != mode:
        raise DomainError(f"{suite.name} is not a {mode.name.lower()} suite")
    rng = rng or PinnedEntropy(b"bench-handshake")
    clock = SimClock()
    s_cfg, c_cfg = _handshake_configs(mode, suite, rng, clock)
    phases = HANDSHAKE_PHASES[mode]
    samples: dict[tuple[str, str], list[int]] = {(who, p): [] for who, ps in phases.items() for p in ps}
    totals: dict[str, list[int]] = {who: [] for who in phases}
    record = rng.random_bytes(MTU_PAYLOAD)
    for i in range(iterations + 2):
        s_out, c_out = run_loopback_handshake(s_cfg, c_cfg, rng, clock)
        if not (s_out.ok and c_out.ok):
            raise RuntimeError(f"loopback handshake failed: {s_out.label} / {c_out.label}")
        keys = c_out.established.keys
        t0 = time.perf_counter_ns()
        sealed = seal_record(keys.c2s, 0, record)
        t1 = time.perf_counter_ns()
        open_record(keys.c2s, 0, sealed)
        t2 = time.perf_counter_ns()
        if i < 2:
            continue  # warm-up
        got = {"sender (client)": dict(c_out.phases, aead_seal=t1 - t0),
               "receiver (server)": dict(s_out.phases, aead_open=t2 - t1)}
        for who, ps in phases.items():
            for p in ps:
                samples[(who, p)].append(got[who].get(p, 0))
            totals[who].append(sum(got[who].get(p, 0) for p in ps))
    report = BenchReport(f"handshake: {suite.name} ({mode.name.lower()}), {iterations} iterations")
    mhz = cpu_mhz()
    for (who, p), xs in samples.items():
        label = PHASE_LABELS[p]
        if p in ("sign", "sig_verify"):
            label = f"{suite.sig_name} {label.lower()}"
        med = float(statistics.median(xs))
        ref = DENIABLE_REFERENCE.get((who, p)) if mode == Mode.DENIABLE else None
        report.rows.append(BenchRow(label, who, med, float(statistics.fmean(xs)), iterations,
                                    ref, med * mhz / 1000 if mhz else None))
    for who, xs in totals.items():
        report.rows.append(BenchRow("Total handshake", who, float(statistics.median(xs)),
                                    float(statistics.fmean(xs)), iterations))
    both = [a + b for a, b in zip(*totals.values())]
    total = float(statistics.median(both))
    aead = statistics.median(samples[("sender (client)", "aead_seal")]) + \
        statistics.median(samples[("receiver (server)", "aead_open")])
    report.derived = {
        "mode": mode.name.lower(),
        "handshake_total_ns": total,
        "throughput_mbps": throughput_from_latency(total, MTU_PAYLOAD),
        "aead_share": float(aead / total),
    }
    return report


def summarize_log(records: Iterable[dict]) -> BenchReport:
    """Median per-phase durations from handshake log records, grouped by mode and role."""
    groups: dict[tuple[str, str], list[dict]] = {}
    for r in records:
        if r.get("event") == "handshake" and r.get("outcome") == "Established":
            groups.setdefault((r["mode"], r["role"]), []).append(r)
    report = BenchReport("handshake log summary")
    for (mode, role), rs in sorted(groups.items()):
        names = sorted({k for r in rs for k in r["phases_ns"]})
        for n in names:
            xs = [r["phases_ns"].get(n, 0) for r in rs]
            report.rows.append(BenchRow(f"{mode}: {PHASE_LABELS.get(n, n)}", role, float(statistics.median(xs)),
                                        float(statistics.fmean(xs)), len(xs)))
        xs = [r["total_ns"] for r in rs]
        report.rows.append(BenchRow(f"{mode}: total (wall)", role, float(statistics.median(xs)),
                                    float(statistics.fmean(xs)), len(xs)))
    return report
