"""In-process event bus wiring the workbench modules together.

Topics are fixed at startup. Appends are serialized per topic, the event is
durably stored before any subscriber sees it, and each subscriber consumes on
its own queue so per-topic delivery order always equals append order.
"""

from __future__ import annotations

import queue
import threading
from typing import Dict, List, Optional

from .storage import EventLog
from .types import Event, now_ms

DEFAULT_TOPICS = (
    "samples",
    "queries",
    "labels",
    "predictions",
    "explanations",
    "options",
    "feedback",
    "scenarios",
    "intent",
    "policy",
    "audit",
)


class Subscription:
    """Independent cursor over one topic; blocking or polling consumption."""

    def __init__(self, topic: str) -> None:
        self.topic = topic
        self._queue: "queue.Queue[Event]" = queue.Queue()

    def _deliver(self, event: Event) -> None:
        self._queue.put(event)

    def poll(self, timeout: Optional[float] = None) -> Optional[Event]:
        try:
            return self._queue.get(timeout=timeout)
        except queue.Empty:
            return None

    def drain(self) -> List[Event]:
        out = []
        while True:
            try:
                out.append(self._queue.get_nowait())
            except queue.Empty:
                return out


class EventBus:
    def __init__(self, topics=DEFAULT_TOPICS, log: Optional[EventLog] = None) -> None:
        self._topics = tuple(topics)
        self._log = log if log is not None else EventLog()
        self._locks: Dict[str, threading.Lock] = {t: threading.Lock() for t in self._topics}
        self._seq: Dict[str, int] = {t: self._log.last_seq(t) for t in self._topics}
        self._subs: Dict[str, List[Subscription]] = {t: [] for t in self._topics}
        self._subs_lock = threading.Lock()

    @property
    def topics(self) -> tuple:
        return self._topics

    @property
    def log(self) -> EventLog:
        return self._log

    def subscribe(self, topic: str) -> Subscription:
        self._check_topic(topic)
        sub = Subscription(topic)
        with self._subs_lock:
            self._subs[topic].append(sub)
        return sub

    def unsubscribe(self, sub: Subscription) -> None:
        with self._subs_lock:
            subs = self._subs.get(sub.topic, [])
            if sub in subs:
                subs.remove(sub)

    def publish(self, topic: str, payload: dict, actor: str) -> Event:
        """Append an event and deliver it to all current subscribers.

        The append is durable before delivery; if the log write fails no
        subscriber observes the event and the seq counter is not advanced.
        """
        self._check_topic(topic)
        with self._locks[topic]:
            event = Event(
                topic=topic,
                seq=self._seq[topic] + 1,
                actor=actor,
                payload=payload,
                ts=now_ms(),
            )
            self._log.append(event)  # raises -> nothing delivered
            self._seq[topic] = event.seq
            with self._subs_lock:
                subs = list(self._subs[topic])
            for sub in subs:
                sub._deliver(event)
        return event

    def replay(self, topic: Optional[str] = None):
        return self._log.replay(topic)

    def _check_topic(self, topic: str) -> None:
        if topic not in self._locks:
            raise ValueError(f"unknown topic {topic!r}; topics are fixed at startup")
