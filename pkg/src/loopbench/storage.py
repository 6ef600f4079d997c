"""Storage layer: append-only event log plus a keyed document store.

The event log is one JSON document per line ({topic, seq, actor, ts,
payload}); the document store is a thread-safe key -> JSON-document map with
last-writer-wins semantics. Knowledge-graph style data is kept as documents
with (subject, relation, object) edge lists rather than a graph engine.
"""

from __future__ import annotations

import json
import os
import threading
from typing import Dict, Iterator, List, Optional

from .errors import NotFoundError
from .types import Event


class DocumentStore:
    """In-memory keyed document store; concurrent readers, serialized writers."""

    def __init__(self) -> None:
        self._docs: Dict[str, dict] = {}
        self._lock = threading.RLock()

    def put(self, key: str, doc: dict) -> None:
        if not key:
            raise ValueError("document key must be nonempty")
        with self._lock:
            self._docs[key] = json.loads(json.dumps(doc))

    def get(self, key: str) -> dict:
        if not key:
            raise ValueError("document key must be nonempty")
        with self._lock:
            if key not in self._docs:
                raise NotFoundError(f"no document under key {key!r}")
            return json.loads(json.dumps(self._docs[key]))

    def contains(self, key: str) -> bool:
        with self._lock:
            return key in self._docs

    def keys(self, prefix: str = "") -> List[str]:
        with self._lock:
            return sorted(k for k in self._docs if k.startswith(prefix))

    def delete(self, key: str) -> None:
        with self._lock:
            self._docs.pop(key, None)


class EventLog:
    """Append-only, line-delimited JSON event log with durable appends."""

    def __init__(self, path: Optional[str] = None) -> None:
        self._path = path
        self._lock = threading.Lock()
        self._events: List[Event] = []
        if path and os.path.exists(path):
            with open(path, "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        self._events.append(Event.from_doc(json.loads(line)))

    def append(self, event: Event) -> None:
        """Durably append; on I/O failure the in-memory log is untouched."""
        with self._lock:
            if self._path:
                line = json.dumps(event.to_doc(), sort_keys=True)
                with open(self._path, "a", encoding="utf-8") as fh:
                    fh.write(line + "\n")
                    fh.flush()
                    os.fsync(fh.fileno())
            self._events.append(event)

    def events(self, topic: Optional[str] = None) -> List[Event]:
        with self._lock:
            if topic is None:
                return list(self._events)
            return [e for e in self._events if e.topic == topic]

    def replay(self, topic: Optional[str] = None) -> Iterator[Event]:
        """Iterate events in append order; safe to call repeatedly."""
        return iter(self.events(topic))

    def last_seq(self, topic: str) -> int:
        with self._lock:
            seqs = [e.seq for e in self._events if e.topic == topic]
            return max(seqs) if seqs else 0

    def __len__(self) -> int:
        with self._lock:
            return len(self._events)
