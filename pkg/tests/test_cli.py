import json
import threading
import time
from pathlib import Path

import pytest

from amphikey.app.server import run_server, ServerConfig
from amphikey.cli import build_parser, main
from amphikey.pki import Certificate
from amphikey.suite import Mode

SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


@pytest.fixture
def home(tmp_path, monkeypatch):
    monkeypatch.setenv("AMPHIKEY_HOME", str(tmp_path))
    return tmp_path


def test_enrolment_flow(home, capsys):
    assert main(["ca", "init"]) == 0
    assert (home / "ca.sk").stat().st_mode & 0o777 == 0o600
    assert main(["ca", "init"]) == 1  # refuses to overwrite
    assert main(["keygen", "--out", str(home / "meter")]) == 0
    assert main(["ca", "issue", "--subject", "meter", "--pk-file", str(home / "meter.sigpk"), "--days", "1"]) == 0
    cert = Certificate.from_bytes((home / "meter.cert").read_bytes())
    assert cert.subject == "meter" and cert.not_after - cert.not_before == 86_400
    assert main(["ca", "issue", "--subject", "meter", "--pk-file", str(home / "meter.sigpk")]) == 1
    assert "already exists" in capsys.readouterr().err


def test_client_against_cli_server(home, tmp_path):
    main(["ca", "init"])
    main(["keygen", "--out", str(home / "meter")])
    main(["ca", "issue", "--subject", "meter", "--pk-file", str(home / "meter.sigpk")])
    table = tmp_path / "table.bin"
    table.write_bytes(b"readings" * 100)
    stop, ready = threading.Event(), threading.Event()
    import socket
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        port = s.getsockname()[1]
    cfg = ServerConfig(Mode.AUTHENTICATED, port=port, keys_dir=str(home))
    t = threading.Thread(target=run_server, args=(cfg, stop, ready))
    t.start()
    try:
        assert ready.wait(10)
        base = ["client", "--connect", f"127.0.0.1:{port}", "--table", str(table), "--name", "meter"]
        assert main(base + ["--mode", "auth"]) == 0
        assert main(base + ["--mode", "deniable"]) == 2
        assert main(base + ["--mode", "auth", "--subject-only"]) == 2
    finally:
        stop.set()
        t.join()


def test_scenario_command(tmp_path, capsys):
    report = tmp_path / "r.json"
    code = main(["scenario", "--spec", str(SCENARIOS / "den-honest.json"),
                 "--spec", str(SCENARIOS / "auth-bad-cert.json"), "--runs", "2", "--report", str(report)])
    out = capsys.readouterr().out
    assert code == 0 and out.count("PASS") == 2
    assert [r["name"] for r in json.loads(report.read_text())] == ["den-honest", "auth-bad-cert"]


def test_scenario_failure_exit(tmp_path, capsys):
    p = tmp_path / "wrong.json"
    p.write_text(json.dumps({"name": "wrong", "mode": "deniable", "expected": "Abort(TIMEOUT)"}))
    assert main(["scenario", "--spec", str(p)]) == 1
    assert capsys.readouterr().out.startswith("FAIL")
    assert main(["scenario"]) == 1


def test_bench_command(tmp_path, capsys):
    out = tmp_path / "b.csv"
    assert main(["bench", "--iters", "3", "--mode", "deniable", "--handshake-only", "--csv", str(out)]) == 0
    assert "Total handshake" in capsys.readouterr().out
    assert out.read_text().startswith("operation,")


def test_argument_errors():
    p = build_parser()
    for argv in (["client", "--mode", "x", "--connect", "h:1", "--table", "t"],
                 ["client", "--mode", "den", "--connect", "nope", "--table", "t"],
                 ["bench", "--suite", "AUTH-9"],
                 ["bench", "--primitives-only", "--handshake-only"],
                 []):
        with pytest.raises(SystemExit):
            p.parse_args(argv)


def test_missing_files(home):
    assert main(["ca", "issue", "--subject", "x", "--pk-file", str(home / "nope")]) == 1
