"""Append-only JSONL event journal backing campaign persistence.

Each committed event is one JSON line {"seq", "type", "at", "data"} flushed
and fsynced before the call returns, so a process kill loses at most the
event being written. On open, a torn trailing line (the usual crash residue)
is truncated away with a warning; corruption anywhere earlier means the file
was edited or damaged and the journal refuses to load.
"""

from __future__ import annotations

import json
import logging
import os
from pathlib import Path

from .errors import JournalCorruptError

log = logging.getLogger(__name__)


class Journal:
    def __init__(self, path: Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._events: list[dict] = []
        self._recover()
        self._handle = open(self.path, "ab")

    def _recover(self) -> None:
        if not self.path.exists():
            return
        raw = self.path.read_bytes()
        offset = 0
        events: list[dict] = []
        for line in raw.splitlines(keepends=True):
            complete = line.endswith(b"\n")
            try:
                event = json.loads(line)
                if not isinstance(event, dict) or "type" not in event or "data" not in event:
                    raise ValueError("not an event object")
            except ValueError as exc:
                if offset + len(line) >= len(raw):
                    # Torn trailing write: drop it and continue from the last
                    # durable event.
                    log.warning("journal %s: dropping torn trailing line (%s)", self.path, exc)
                    with open(self.path, "r+b") as fh:
                        fh.truncate(offset)
                    break
                raise JournalCorruptError(
                    f"journal {self.path} is corrupt at byte {offset}: {exc}. "
                    "Restore it from a backup or remove the malformed line manually."
                ) from exc
            if not complete:
                log.warning("journal %s: dropping unterminated trailing line", self.path)
                with open(self.path, "r+b") as fh:
                    fh.truncate(offset)
                break
            events.append(event)
            offset += len(line)
        self._events = events

    @property
    def events(self) -> list[dict]:
        return list(self._events)

    def __len__(self) -> int:
        return len(self._events)

    def append(self, event_type: str, data: dict, at_ms: int) -> dict:
        event = {"seq": len(self._events) + 1, "type": event_type, "at": at_ms, "data": data}
        line = json.dumps(event, separators=(",", ":")) + "\n"
        self._handle.write(line.encode("utf-8"))
        self._handle.flush()
        os.fsync(self._handle.fileno())
        self._events.append(event)
        return event

    def close(self) -> None:
        if not self._handle.closed:
            self._handle.flush()
            os.fsync(self._handle.fileno())
            self._handle.close()

    def __enter__(self) -> "Journal":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
