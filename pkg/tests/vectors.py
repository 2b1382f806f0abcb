"""Readers for the vector files under testdata/."""

import json
from pathlib import Path

DATA = Path(__file__).resolve().parent.parent / "testdata"


def rsp_records(path, key="count"):
    """Parse ``name = value`` blocks; a new block starts at each ``key`` line."""
    out, cur = [], None
    for line in (DATA / path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#") or "=" not in line:
            continue
        name, _, value = (p.strip() for p in line.partition("="))
        if name.lower() == key.lower():
            cur = {}
            out.append(cur)
        if cur is not None:
            cur[name] = value
    return out


def h(s: str) -> bytes:
    return bytes.fromhex(s)


def acvp(path):
    return json.loads((DATA / path).read_text())["testGroups"]
