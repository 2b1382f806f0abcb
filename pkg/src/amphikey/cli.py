"""``amphikey`` command line: keys and certificates, server, client, scenarios, benchmarks."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

from .entropy import SystemEntropy
from .errors import AmphikeyError, HarnessError
from .suite import SIGS, SUITES, Mode, get_suite

ENV_HOME = "AMPHIKEY_HOME"


def _home() -> Path:
    return Path(os.environ.get(ENV_HOME) or Path.home() / ".amphikey")


def _addr(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    try:
        return host or "127.0.0.1", int(port)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected host:port, got {text!r}") from None


def _mode(text: str) -> Mode:
    try:
        return {"deniable": Mode.DENIABLE, "den": Mode.DENIABLE,
                "authenticated": Mode.AUTHENTICATED, "auth": Mode.AUTHENTICATED}[text.lower()]
    except KeyError:
        raise argparse.ArgumentTypeError("mode is 'deniable' or 'authenticated'") from None


def _suite_id(text: str | None) -> int | None:
    if text is None:
        return None
    try:
        return get_suite(int(text, 0) if text[:1].isdigit() else text).suite_id
    except (AmphikeyError, ValueError):
        raise argparse.ArgumentTypeError(f"unknown suite {text!r}; known: {[s.name for s in SUITES.values()]}")


# -- commands --

def cmd_ca_init(args) -> int:
    from .pki import ca_init

    d = Path(args.dir or _home())
    pair = ca_init(SystemEntropy(), d, args.scheme)
    print(f"CA ({pair.scheme}) written to {d}/ca.sk and {d}/ca.pk ({len(pair.public)}-byte public key)")
    return 0


def cmd_ca_issue(args) -> int:
    from .pki import Keystore, issue_cert

    store = Keystore(args.dir or _home())
    ca = store.load_ca_secret()
    pk = Path(args.pk_file).read_bytes()
    suite = get_suite(args.suite) if args.suite is not None else get_suite(0x02)
    now = int(time.time())
    cert = issue_cert(ca.secret, args.subject, pk, (now, now + int(args.days * 86_400)), suite, ca.scheme)
    out = Path(args.out) if args.out else store.path(f"{args.name or args.subject}.cert")
    if out.exists():
        raise AmphikeyError(f"{out} already exists")
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_bytes(cert.to_bytes())
    print(f"certificate for {args.subject!r} ({suite.name}) written to {out}, valid {args.days:g} days")
    return 0


def cmd_keygen(args) -> int:
    from .pki import Keystore
    from .suite import sig_keygen

    out = Path(args.out) if args.out else _home() / "client"
    store = Keystore(out.parent)
    pair = sig_keygen(args.scheme, SystemEntropy())
    store.save_signing_key(out.name, pair)
    print(f"{args.scheme} key pair written to {out}.sigsk (0600) and {out}.sigpk")
    return 0


def cmd_server(args) -> int:
    from .app.server import ServerConfig, run_server

    host, port = args.listen
    cfg = ServerConfig(args.mode, host, port, str(args.keys or _home()), args.suite,
                       timeout_ms=args.timeout_ms, max_chunk=args.max_chunk, log_path=args.log,
                       preprovisioned=args.preprovisioned)
    run_server(cfg)
    return 0


def cmd_client(args) -> int:
    from .app.client import ClientConfig, run_client

    cfg = ClientConfig(args.mode, str(args.keys or _home()), args.name, args.suite, args.timeout_ms,
                       args.max_chunk, not args.subject_only, args.table_id, args.delay_ms)
    return run_client(cfg, args.connect, args.table)


def cmd_scenario(args) -> int:
    from .app.scenario import ScenarioSpec, load_suite, run_scenario

    specs = [ScenarioSpec.load(p) for p in args.spec or []]
    if args.dir:
        specs += load_suite(args.dir)
    if not specs:
        raise HarnessError("give --spec FILE or --dir DIR")
    reports = []
    failed = 0
    for spec in specs:
        prints = set()
        for _ in range(args.runs):
            rep = run_scenario(spec)
            prints.add(rep.fingerprint())
            failed += not rep.passed
        stable = len(prints) == 1
        failed += not stable
        status = "PASS" if rep.passed and stable else "FAIL"
        print(f"{status}  {spec.name:<32} expected {spec.expected:<26} observed {', '.join(sorted(set(rep.observed)))}"
              + ("" if stable else "  (nondeterministic)"))
        reports.append(rep.to_dict())
    if args.report:
        Path(args.report).write_text(json.dumps(reports, indent=2, sort_keys=True), encoding="utf-8")
    return 1 if failed else 0


def cmd_bench(args) -> int:
    from .bench import bench_handshake, bench_primitives

    reports = []
    modes = [args.mode] if args.mode else [Mode.DENIABLE, Mode.AUTHENTICATED]
    if not args.handshake_only:
        reports.append(bench_primitives(args.suite if args.suite is not None else 0x02, args.iters))
    if not args.primitives_only:
        for m in modes:
            suite = args.suite if args.suite is not None and get_suite(args.suite).mode == m else None
            reports.append(bench_handshake(m, suite, args.iters))
    for r in reports:
        print(r.to_text())
        print()
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            for i, r in enumerate(reports):
                text = r.to_csv()
                fh.write(text if i == 0 else text.split("\n", 1)[1])
        print(f"csv written to {args.csv}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="amphikey", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    ca = sub.add_parser("ca", help="certificate authority").add_subparsers(dest="ca_command", required=True)
    c = ca.add_parser("init", help="create ca.sk / ca.pk")
    c.add_argument("--dir", help=f"key directory (default ${ENV_HOME} or ~/.amphikey)")
    c.add_argument("--scheme", default="Dilithium3", choices=[n for n, s in SIGS.items() if s.available])
    c.set_defaults(func=cmd_ca_init)
    c = ca.add_parser("issue", help="sign a certificate for a subject public key")
    c.add_argument("--subject", required=True)
    c.add_argument("--pk-file", required=True)
    c.add_argument("--days", type=float, default=365)
    c.add_argument("--dir", help="directory holding ca.sk")
    c.add_argument("--suite", type=_suite_id, help="suite id or name the key is for (default AUTH-1)")
    c.add_argument("--name", help="keystore entry name (default: subject)")
    c.add_argument("--out", help="explicit output path")
    c.set_defaults(func=cmd_ca_issue)

    k = sub.add_parser("keygen", help="long-term signature key pair")
    k.add_argument("--scheme", default="Dilithium3", choices=[n for n, s in SIGS.items() if s.available])
    k.add_argument("--out", help="path prefix; writes PREFIX.sigsk and PREFIX.sigpk")
    k.set_defaults(func=cmd_keygen)

    def common(sp):
        sp.add_argument("--mode", type=_mode, required=True)
        sp.add_argument("--suite", type=_suite_id)
        sp.add_argument("--keys", help=f"key directory (default ${ENV_HOME} or ~/.amphikey)")
        sp.add_argument("--timeout-ms", type=int, default=5000)
        sp.add_argument("--max-chunk", type=int, default=1024)

    s = sub.add_parser("server", help="run the handshake server")
    common(s)
    s.add_argument("--listen", type=_addr, default=("127.0.0.1", 4433))
    s.add_argument("--log", help="append JSONL handshake records here")
    s.add_argument("--preprovisioned", action="store_true", help="accept subject-only credentials for known certs")
    s.set_defaults(func=cmd_server)

    s = sub.add_parser("client", help="handshake and send one table")
    common(s)
    s.add_argument("--connect", type=_addr, required=True)
    s.add_argument("--table", required=True, help="file whose bytes form the table payload")
    s.add_argument("--table-id", type=int, default=1)
    s.add_argument("--name", default="client", help="keystore entry with NAME.sigsk and NAME.cert")
    s.add_argument("--subject-only", action="store_true", help="send the subject instead of the certificate")
    s.add_argument("--delay-ms", type=float, default=0.0, help="inject a send delay on every flight")
    s.set_defaults(func=cmd_client)

    s = sub.add_parser("scenario", help="run scenario specs in-process")
    s.add_argument("--spec", action="append", help="spec file (repeatable)")
    s.add_argument("--dir", help="run every *.json spec in this directory")
    s.add_argument("--runs", type=int, default=1, help="repeat each spec and require identical results")
    s.add_argument("--report", help="write JSON reports here")
    s.set_defaults(func=cmd_scenario)

    b = sub.add_parser("bench", help="latency benchmarks")
    b.add_argument("--suite", type=_suite_id)
    b.add_argument("--mode", type=_mode)
    b.add_argument("--iters", type=int, default=1000)
    b.add_argument("--csv", help="also write rows as CSV")
    g = b.add_mutually_exclusive_group()
    g.add_argument("--primitives-only", action="store_true")
    g.add_argument("--handshake-only", action="store_true")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (AmphikeyError, OSError) as exc:
        print(f"amphikey: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
