"""Append-only JSONL response log.

One file per experiment. The first record is a header carrying the schema
version and a hash of the experiment config; every later line is one
session or response record in arrival order. Appends go through a journal
file first so a crash mid-append can be detected and repaired on reopen;
all writers in a process share one lock. Exports return the raw file bytes,
so two exports without intervening appends are byte-identical.
"""

from __future__ import annotations

import json
import os
import threading
from pathlib import Path

from ..errors import FormatError

SCHEMA_VERSION = 1


def _encode(record: dict) -> bytes:
    return (json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n").encode()


class JsonlStore:
    def __init__(self, path, experiment_id: str, config_hash: str = ""):
        self.path = Path(path)
        self._journal = self.path.with_name(self.path.name + ".journal")
        self._lock = threading.Lock()
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._recover()
        if not self.path.exists() or self.path.stat().st_size == 0:
            header = {
                "type": "header",
                "schema_version": SCHEMA_VERSION,
                "experiment": experiment_id,
                "config_hash": config_hash,
            }
            with open(self.path, "wb") as fh:
                fh.write(_encode(header))
                fh.flush()
                os.fsync(fh.fileno())

    def _recover(self):
        """Finish an append the last process may have died in the middle of."""
        if not self._journal.exists():
            return
        pending = self._journal.read_bytes()
        if pending:
            existing = self.path.read_bytes() if self.path.exists() else b""
            if not existing.endswith(pending):
                with open(self.path, "ab") as fh:
                    fh.write(pending)
                    fh.flush()
                    os.fsync(fh.fileno())
        self._journal.unlink()

    def append(self, record: dict) -> None:
        """Durably append one record; serialized across threads."""
        data = _encode(record)
        with self._lock:
            with open(self._journal, "wb") as fh:
                fh.write(data)
                fh.flush()
                os.fsync(fh.fileno())
            with open(self.path, "ab") as fh:
                fh.write(data)
                fh.flush()
                os.fsync(fh.fileno())
            self._journal.unlink()

    def records(self) -> list:
        """All records in arrival order, header first."""
        out = []
        with self._lock:
            data = self.path.read_bytes()
        for ln, line in enumerate(data.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise FormatError(f"malformed record on line {ln}: {exc}") from exc
        return out

    def export_bytes(self) -> bytes:
        with self._lock:
            return self.path.read_bytes()

    @property
    def header(self) -> dict:
        recs = self.records()
        if not recs or recs[0].get("type") != "header":
            raise FormatError("store file does not start with a header record")
        return recs[0]
