"""Meters uploading tables to a server over TCP in both modes.

Builds a throwaway keystore (CA, one enrolled meter), starts a server per
mode on an ephemeral port, and runs a few clients against each. One client
carries a certificate from an untrusted CA and is turned away.
"""

import io
import os
import tempfile
import time

from amphikey.app import AmphikeyServer, ClientConfig, ServerConfig, run_client
from amphikey.entropy import SystemEntropy
from amphikey.pki import Keystore, ca_init, issue_cert
from amphikey.suite import Mode, sig_keygen

rng = SystemEntropy()
home = tempfile.mkdtemp(prefix="amphikey-demo-")
store = Keystore(home)
ca = ca_init(rng, home)
now = int(time.time())
with sig_keygen("Dilithium3", rng) as meter:
    store.save_signing_key("meter-1", meter)
    store.save_cert("meter-1", issue_cert(ca.secret, "meter-1", meter.public, (now - 60, now + 86_400)))

rogue_dir = tempfile.mkdtemp(prefix="amphikey-rogue-")
rogue_store = Keystore(rogue_dir)
with sig_keygen("Dilithium3", rng) as rogue_ca, sig_keygen("Dilithium3", rng) as intruder:
    rogue_store.save_signing_key("meter-1", intruder)
    rogue_store.save_cert("meter-1", issue_cert(rogue_ca.secret, "meter-1", intruder.public, (now - 60, now + 86_400)))

table = os.urandom(4000)
for mode in (Mode.DENIABLE, Mode.AUTHENTICATED):
    with AmphikeyServer(ServerConfig(mode, keys_dir=home, log_path=os.path.join(home, "server.jsonl"))) as srv:
        print(f"== {mode.name.lower()} server on {srv.address[0]}:{srv.address[1]}")
        for i in range(3):
            out = io.StringIO()
            code = run_client(ClientConfig(mode, home, "meter-1", table_id=i + 1), srv.address, table, out=out)
            print(f"  client {i}: exit {code}: {out.getvalue().strip()}")
        if mode == Mode.AUTHENTICATED:
            out = io.StringIO()
            code = run_client(ClientConfig(mode, rogue_dir, "meter-1"), srv.address, table, out=out)
            print(f"  rogue client: exit {code}: {out.getvalue().strip()}")
        print(f"  server stored {len(srv.tables)} tables; distinct session keys: {len(set(srv.key_fingerprints))}")

print("server log:", os.path.join(home, "server.jsonl"))
