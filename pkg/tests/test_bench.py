import csv
import io

import pytest

from amphikey.bench import (NOT_BUILT, REFERENCE_ROWS, bench_handshake, bench_primitives, summarize_log,
                            throughput_from_latency)
from amphikey.errors import DomainError
from amphikey.suite import Mode


def test_throughput_reference_values():
    assert round(throughput_from_latency(86_983), 3) == 137.958
    assert round(throughput_from_latency(507_045), 3) == 23.667
    assert throughput_from_latency(1000, 0) == 0.0


@pytest.mark.parametrize("ns,size", [(0, 1500), (-1, 1500), (10, -1)])
def test_throughput_domain(ns, size):
    with pytest.raises(DomainError):
        throughput_from_latency(ns, size)


@pytest.fixture(scope="module")
def prims():
    return bench_primitives(0x02, 20)


def test_primitive_rows(prims):
    names = [(r.operation, r.participant) for r in prims.rows]
    for op, who, _ in REFERENCE_ROWS:
        assert (op, who) in names
    raccoon = [r for r in prims.rows if r.operation.startswith("Raccoon")]
    assert raccoon and all(r.note == NOT_BUILT and r.median_ns is None for r in raccoon)
    assert prims.row("ML-KEM-768 Encapsulation").reference_ns == 56196


def test_primitive_ordering(prims):
    sign = prims.row("ML-DSA-65 Signing").median_ns
    verify = prims.row("ML-DSA-65 Signature Verification").median_ns
    kem = prims.row("ML-KEM-768 Decapsulation").median_ns
    aead = prims.row("Ascon-128a AEAD Encryption").median_ns
    assert sign > verify > kem > aead


@pytest.fixture(scope="module")
def hs():
    return {m: bench_handshake(m, iterations=10) for m in (Mode.DENIABLE, Mode.AUTHENTICATED)}


def test_handshake_rows(hs):
    den, auth = hs[Mode.DENIABLE], hs[Mode.AUTHENTICATED]
    assert len(den.rows) == 7 + 8 + 2 and len(auth.rows) == 7 + 8 + 2
    assert den.rows[-1].operation == "Total handshake"
    assert den.row("AKEM ML-KEM-768 encapsulation").reference_ns == 56196
    assert auth.row("Dilithium3 signing").median_ns > 0
    assert den.derived["mode"] == "deniable"
    assert 0 < den.derived["aead_share"] < 1


def test_deniable_cheaper(hs):
    assert hs[Mode.DENIABLE].derived["handshake_total_ns"] < hs[Mode.AUTHENTICATED].derived["handshake_total_ns"]
    assert hs[Mode.DENIABLE].derived["throughput_mbps"] > hs[Mode.AUTHENTICATED].derived["throughput_mbps"]


def test_csv_and_text(hs):
    rep = hs[Mode.DENIABLE]
    rows = list(csv.DictReader(io.StringIO(rep.to_csv())))
    assert len(rows) == len(rep.rows) and rows[0]["operation"] == rep.rows[0].operation
    text = rep.to_text()
    assert "Total handshake" in text and "throughput_mbps" in text


def test_bad_inputs():
    with pytest.raises(DomainError):
        bench_handshake(Mode.DENIABLE, 0x02, 5)
    with pytest.raises(DomainError):
        bench_handshake(Mode.DENIABLE, iterations=0)
    with pytest.raises(DomainError):
        bench_primitives(0x01, 0)


def test_summarize_log():
    recs = [{"event": "handshake", "outcome": "Established", "mode": "deniable", "role": "server",
             "phases_ns": {"kdf": v}, "total_ns": 2 * v} for v in (10, 30, 20)]
    recs.append({"event": "handshake", "outcome": "Abort", "mode": "deniable", "role": "server", "phases_ns": {}})
    rep = summarize_log(recs)
    assert rep.rows[0].median_ns == 20
