"""Run the shipped scenario suite a few times and show it is repeatable."""

import pathlib
import time

from amphikey.app import load_suite, run_scenario

specs = load_suite(pathlib.Path(__file__).resolve().parent.parent / "scenarios")
t0 = time.perf_counter()
for spec in specs:
    reports = [run_scenario(spec) for _ in range(3)]
    stable = len({r.fingerprint() for r in reports}) == 1
    r = reports[0]
    print(f"{'ok ' if r.passed and stable else 'BAD'} {spec.name:<28} {r.observed[0]:<26} {spec.description}")
print(f"{len(specs)} specs x 3 runs in {time.perf_counter() - t0:.1f} s")
