"""Authenticated mode: the signature binds the ciphertexts to the meter's key.

Unlike deniable mode, anyone holding the meter's public key can check who
produced a payload, and the receiver cannot forge one.
"""

from amphikey import AUTH_1, AkemPublicKey, NotValid, SystemEntropy, akem_keygen, auth_decaps, auth_encaps, third_party_verify
from amphikey.akem import PhaseTimer

rng = SystemEntropy()
server = akem_keygen(AUTH_1, rng)
meter = akem_keygen(AUTH_1, rng, signing=True)
meter_pub = AkemPublicKey.signer(meter.public.sig_pk)
print(f"full party bundle: {len(meter.public.to_bytes())} bytes")

t_send = PhaseTimer()
payload, sent = auth_encaps(bytes(meter.sig_sk), meter_pub, server.public, rng, timer=t_send)
print(f"payload: {len(payload)} bytes (signature {len(payload.auth)})")

got = auth_decaps(server, meter_pub, payload)
print("keys agree:", got.k_sh == sent.k_sh)
print("auditor with public data only accepts:", third_party_verify(meter_pub, payload))

# a payload signed by someone else is rejected before any decapsulation runs
other = akem_keygen(AUTH_1, rng, signing=True)
t_recv = PhaseTimer()
try:
    auth_decaps(server, AkemPublicKey.signer(other.public.sig_pk), payload, timer=t_recv)
except NotValid:
    print("wrong signer -> NotValid; receiver phases:", t_recv.names)

for name, ns in t_send.durations().items():
    print(f"  sender {name:<12} {ns / 1e6:8.3f} ms")
