"""Wire sizes per suite, and the latency-to-throughput arithmetic used in the bench reports."""

from amphikey.bench import throughput_from_latency
from amphikey.suite import SUITES

print(f"{'suite':<8} {'signature':<12} {'bundle':>7} {'payload':>8}")
for s in SUITES.values():
    z = s.sizes
    note = "" if s.available else "  (sizes only, not built)"
    print(f"{s.name:<8} {s.sig_name or '-':<12} {z.public_bundle:>7} {z.payload:>8}{note}")

print()
for ns in (86_983, 507_045):
    print(f"1500-byte message every {ns} ns -> {throughput_from_latency(ns, 1500):.3f} Mbps")
