"""Shared fixtures-by-function for the test modules."""

from amphikey import AUTH_1, DEN_1, AkemPublicKey, PinnedEntropy, akem_keygen
from amphikey.entropy import FixedEntropy


def seeded_receiver(suite=DEN_1, seed: bytes = bytes(range(64)), x_seed: bytes = bytes(range(100, 132))):
    """Receiver keys built from known seeds so an outside library can rebuild them."""
    return akem_keygen(suite, FixedEntropy(seed, x_seed))


def signer(label="meter"):
    kp = akem_keygen(AUTH_1, PinnedEntropy(label), signing=True)
    return kp, AkemPublicKey.signer(kp.public.sig_pk)
