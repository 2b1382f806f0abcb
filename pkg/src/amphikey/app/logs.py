"""Line-delimited JSON event log, one record per handshake."""

from __future__ import annotations

import json
import logging
import threading
from pathlib import Path
from typing import IO, Iterable

logger = logging.getLogger("amphikey")


class EventLog:
    def __init__(self, sink: str | Path | IO[str] | None = None):
        self.records: list[dict] = []
        self._lock = threading.Lock()
        self._owned = False
        if isinstance(sink, (str, Path)):
            self._fh = open(sink, "a", encoding="utf-8")
            self._owned = True
        else:
            self._fh = sink

    def emit(self, record: dict) -> None:
        line = json.dumps(record, sort_keys=True)
        with self._lock:
            self.records.append(record)
            if self._fh is not None:
                self._fh.write(line + "\n")
                self._fh.flush()
        if record.get("outcome") == "Abort":
            logger.warning("handshake abort: %s (%s, %s)", record.get("reason"), record.get("role"),
                           record.get("origin"))
        else:
            logger.info("%s", line)

    def close(self) -> None:
        if self._owned and self._fh is not None:
            self._fh.close()
            self._fh = None


def read_log(path: str | Path) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def handshake_records(records: Iterable[dict]) -> list[dict]:
    return [r for r in records if r.get("event") == "handshake"]
