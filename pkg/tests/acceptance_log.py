"""Collects one verdict line per acceptance criterion; conftest prints them at the end."""

import time
from contextlib import contextmanager

LINES: list[str] = []


@contextmanager
def criterion(number: int, title: str, limit_s: float | None):
    notes: list[str] = []
    t0 = time.perf_counter()
    verdict = "FAIL"
    try:
        yield notes
        elapsed = time.perf_counter() - t0
        if limit_s is not None:
            assert elapsed < limit_s, f"took {elapsed:.1f} s, limit {limit_s:g} s"
        verdict = "PASS"
    except BaseException as exc:
        notes.append(f"{type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}")
        raise
    finally:
        elapsed = time.perf_counter() - t0
        line = f"{verdict}  criterion {number:>2}  {title}  ({elapsed:.1f} s)"
        if notes:
            line += "  " + "; ".join(notes)
        LINES.append(line)
        print(line)
