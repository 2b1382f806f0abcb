"""Flat binary certificates, a tiny CA and an on-disk keystore.

Certificate layout (big-endian)::

    "AMPHCERT1" | subject_len u8 | subject | suite_id u8 | sig_pk_len u16 | sig_pk
    | not_before u64 | not_after u64 | sig_len u16 | ca_signature

The CA signs every byte before ``sig_len``.
"""

from __future__ import annotations

import enum
import os
import struct
from dataclasses import dataclass
from pathlib import Path

from .entropy import Entropy
from .errors import KeystoreError, LengthMismatch, SubjectTooLong, UnknownScheme
from .suite import SIGS, Mode, SigKeyPair, SuiteDescriptor, get_sig, get_suite, sig_keygen, sig_sign, sig_verify

CERT_MAGIC = b"AMPHCERT1"
MAX_SUBJECT = 255
ENV_HOME = "AMPHIKEY_HOME"


class CertificateFormatError(ValueError):
    pass


class CertStatus(enum.Enum):
    ACCEPT = "Accept"
    BAD_SIGNATURE = "BadSignature"
    EXPIRED = "Expired"
    NOT_YET_VALID = "NotYetValid"
    SUITE_MISMATCH = "SuiteMismatch"
    MALFORMED = "Malformed"

    @property
    def ok(self) -> bool:
        return self is CertStatus.ACCEPT


@dataclass(frozen=True)
class Certificate:
    subject: str
    suite_id: int
    sig_pk: bytes
    not_before: int
    not_after: int
    ca_signature: bytes = b""

    def preamble(self) -> bytes:
        subj = self.subject.encode("utf-8")
        if len(subj) > MAX_SUBJECT:
            raise SubjectTooLong(f"subject is {len(subj)} bytes, limit {MAX_SUBJECT}")
        return b"".join([
            CERT_MAGIC,
            struct.pack(">B", len(subj)), subj,
            struct.pack(">BH", self.suite_id, len(self.sig_pk)), self.sig_pk,
            struct.pack(">QQ", self.not_before, self.not_after),
        ])

    def to_bytes(self) -> bytes:
        return self.preamble() + struct.pack(">H", len(self.ca_signature)) + self.ca_signature

    @classmethod
    def from_bytes(cls, data: bytes) -> "Certificate":
        data = bytes(data)
        try:
            if not data.startswith(CERT_MAGIC):
                raise CertificateFormatError("missing AMPHCERT1 header")
            off = len(CERT_MAGIC)
            (n,) = struct.unpack_from(">B", data, off)
            off += 1
            if len(data) < off + n:
                raise CertificateFormatError("subject runs past the end")
            subject = data[off:off + n].decode("utf-8")
            off += n
            suite_id, pk_len = struct.unpack_from(">BH", data, off)
            off += 3
            sig_pk = data[off:off + pk_len]
            off += pk_len
            not_before, not_after = struct.unpack_from(">QQ", data, off)
            off += 16
            (sig_len,) = struct.unpack_from(">H", data, off)
            off += 2
            sig = data[off:off + sig_len]
            off += sig_len
        except (struct.error, UnicodeDecodeError) as exc:
            raise CertificateFormatError(str(exc)) from None
        if off != len(data) or len(sig) != sig_len or len(sig_pk) != pk_len:
            raise CertificateFormatError("length fields disagree with certificate size")
        if not subject:
            raise CertificateFormatError("empty subject")
        return cls(subject, suite_id, sig_pk, not_before, not_after, sig)


def _ca_scheme_for(suite: SuiteDescriptor, ca_scheme: str | None) -> str:
    if ca_scheme:
        return ca_scheme
    if suite.sig_name is None:
        raise UnknownScheme(f"{suite.name} has no signature scheme; name the CA scheme explicitly")
    return suite.sig_name


def issue_cert(ca_sk: bytes, subject: str, subject_sig_pk: bytes, validity: tuple[int, int],
               suite: SuiteDescriptor | int = 0x02, ca_scheme: str | None = None) -> Certificate:
    """CA-sign a binding of ``subject`` to ``subject_sig_pk`` for [not_before, not_after]."""
    suite = get_suite(suite)
    if not subject:
        raise ValueError("subject must be non-empty")
    not_before, not_after = (int(v) for v in validity)
    if not_before >= not_after:
        raise ValueError("not_before must precede not_after")
    if suite.sig_name and len(subject_sig_pk) != suite.sizes.sig_pk:
        raise LengthMismatch(f"{suite.sig_name} public key must be {suite.sizes.sig_pk} bytes")
    unsigned = Certificate(subject, suite.suite_id, bytes(subject_sig_pk), not_before, not_after)
    sig = sig_sign(_ca_scheme_for(suite, ca_scheme), ca_sk, unsigned.preamble())
    return Certificate(subject, suite.suite_id, bytes(subject_sig_pk), not_before, not_after, sig)


def verify_cert(ca_pk: bytes, cert: Certificate | bytes, now: int, ca_scheme: str | None = None,
                suite: SuiteDescriptor | int | None = None) -> CertStatus:
    """Total: every outcome is a :class:`CertStatus`, never an exception."""
    if not isinstance(cert, Certificate):
        try:
            cert = Certificate.from_bytes(cert)
        except CertificateFormatError:
            return CertStatus.MALFORMED
    try:
        cert_suite = get_suite(cert.suite_id)
    except UnknownScheme:
        return CertStatus.SUITE_MISMATCH
    if cert_suite.mode != Mode.AUTHENTICATED or not cert_suite.available:
        return CertStatus.SUITE_MISMATCH
    if suite is not None and get_suite(suite).suite_id != cert.suite_id:
        return CertStatus.SUITE_MISMATCH
    if len(cert.sig_pk) != cert_suite.sizes.sig_pk:
        return CertStatus.SUITE_MISMATCH
    try:
        scheme = _ca_scheme_for(cert_suite, ca_scheme)
        if len(ca_pk) != get_sig(scheme).pk_len:
            return CertStatus.BAD_SIGNATURE
        good = sig_verify(scheme, ca_pk, cert.preamble(), cert.ca_signature)
    except (UnknownScheme, LengthMismatch, SubjectTooLong):
        return CertStatus.BAD_SIGNATURE
    if not good:
        return CertStatus.BAD_SIGNATURE
    if now < cert.not_before:
        return CertStatus.NOT_YET_VALID
    if now > cert.not_after:
        return CertStatus.EXPIRED
    return CertStatus.ACCEPT


# -- keystore --

def _write_new(path: Path, data: bytes, secret: bool) -> None:
    flags = os.O_WRONLY | os.O_CREAT | os.O_EXCL
    try:
        fd = os.open(path, flags, 0o600 if secret else 0o644)
    except FileExistsError:
        raise KeystoreError(f"{path} already exists; refusing to overwrite") from None
    with os.fdopen(fd, "wb") as fh:
        fh.write(data)
    if secret:
        os.chmod(path, 0o600)  # umask may have widened nothing, but be explicit


def infer_sig_scheme(sk_len: int) -> str:
    hits = [s.name for s in SIGS.values() if s.available and s.sk_len == sk_len]
    if len(hits) != 1:
        raise KeystoreError(f"cannot infer signature scheme from a {sk_len}-byte secret key")
    return hits[0]


class Keystore:
    """Directory of raw key files: ``<name>.sigsk``, ``<name>.sigpk``, ``<name>.cert``, ``ca.sk``, ``ca.pk``."""

    def __init__(self, root: str | os.PathLike):
        self.root = Path(root)

    @classmethod
    def default(cls) -> "Keystore":
        return cls(os.environ.get(ENV_HOME) or Path.home() / ".amphikey")

    def path(self, filename: str) -> Path:
        return self.root / filename

    def _ensure(self):
        self.root.mkdir(parents=True, exist_ok=True)

    def save_signing_key(self, name: str, pair: SigKeyPair) -> None:
        self._ensure()
        _write_new(self.path(f"{name}.sigsk"), bytes(pair.secret), secret=True)
        _write_new(self.path(f"{name}.sigpk"), pair.public, secret=False)

    def load_signing_key(self, name: str, scheme: str | None = None) -> SigKeyPair:
        sk = self._read(f"{name}.sigsk")
        scheme = scheme or infer_sig_scheme(len(sk))
        pk = self._read(f"{name}.sigpk")
        s = get_sig(scheme)
        if len(sk) != s.sk_len or len(pk) != s.pk_len:
            raise KeystoreError(f"{name}: key lengths do not match {scheme}")
        return SigKeyPair(scheme, pk, bytearray(sk))

    def load_public(self, name: str, scheme: str = "Dilithium3") -> bytes:
        pk = self._read(f"{name}.sigpk" if name != "ca" else "ca.pk")
        if len(pk) != get_sig(scheme).pk_len:
            raise KeystoreError(f"{name}: public key length does not match {scheme}")
        return pk

    def save_cert(self, name: str, cert: Certificate, overwrite: bool = False) -> None:
        self._ensure()
        p = self.path(f"{name}.cert")
        if overwrite and p.exists():
            p.unlink()
        _write_new(p, cert.to_bytes(), secret=False)

    def load_cert(self, name: str) -> Certificate:
        try:
            return Certificate.from_bytes(self._read(f"{name}.cert"))
        except CertificateFormatError as exc:
            raise KeystoreError(f"{name}.cert: {exc}") from None

    def load_ca_public(self, scheme: str = "Dilithium3") -> bytes:
        return self.load_public("ca", scheme)

    def load_ca_secret(self) -> SigKeyPair:
        sk = self._read("ca.sk")
        scheme = infer_sig_scheme(len(sk))
        return SigKeyPair(scheme, self._read("ca.pk"), bytearray(sk))

    def _read(self, filename: str) -> bytes:
        try:
            return self.path(filename).read_bytes()
        except OSError as exc:
            raise KeystoreError(f"cannot read {self.path(filename)}: {exc.strerror}") from None


def ca_init(rng: Entropy, out_dir: str | os.PathLike, scheme: str = "Dilithium3") -> SigKeyPair:
    """Create ``ca.sk``/``ca.pk`` in ``out_dir``. Existing CA files are never overwritten."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for f in ("ca.sk", "ca.pk"):
        if (out / f).exists():
            raise KeystoreError(f"{out / f} already exists; refusing to overwrite")
    pair = sig_keygen(scheme, rng)
    probe = b"amphikey ca self-test"
    if not sig_verify(scheme, pair.public, probe, sig_sign(scheme, pair.secret, probe)):
        raise KeystoreError("freshly generated CA key failed its self-test")
    _write_new(out / "ca.sk", bytes(pair.secret), secret=True)
    _write_new(out / "ca.pk", pair.public, secret=False)
    return pair
