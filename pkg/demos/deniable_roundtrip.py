"""Deniable mode from the receiver's point of view.

A meter (sender) encapsulates to the utility server (receiver). The server
accepts the tag, then shows it could have produced the very same tag alone,
so the transcript proves nothing to anyone else.
"""

from amphikey import DEN_1, Invalid, SystemEntropy, akem_keygen, den_decaps, den_encaps, forge_transcript
from amphikey.akem import invent_ciphertexts

rng = SystemEntropy()
server = akem_keygen(DEN_1, rng)
print(f"server bundle: {len(server.public.to_bytes())} bytes (ML-KEM-768 + X25519)")

payload, sent = den_encaps(server.public, rng)
print(f"payload: {len(payload)} bytes = c1 {len(payload.c1)} + c2 {len(payload.c2)} + tag {len(payload.auth)}")

got = den_decaps(server, None, payload)
print("receiver accepts, keys agree:", got.k_sh == sent.k_sh)

# flip one bit anywhere and the answer is the same opaque Invalid
bad = bytearray(payload.to_bytes())
bad[500] ^= 0x10
try:
    den_decaps(server, None, bytes(bad))
except Invalid as exc:
    print("tampered payload:", type(exc).__name__)

# the simulator: the receiver recomputes the tag from its own secret keys
tag, forged = forge_transcript(server, None, payload.c)
print("forged tag == honest tag:", tag == payload.auth, "| forged k_sh == honest k_sh:", forged.k_sh == sent.k_sh)

# and it can mint whole transcripts no sender ever produced
c = invent_ciphertexts(server.public, rng)
tag, _ = forge_transcript(server, None, c)
fake = c + tag
print("invented transcript accepted by den_decaps:", den_decaps(server, None, fake) is not None)
server.wipe()
