"""Access policies and the tamper-evident audit log.

Policies are (role, resource glob, action, effect, redaction) tuples with
default deny: the most specific matching pattern wins, deny beats allow at
equal specificity, and no match means deny. The audit log hash-chains every
entry with SHA-256 so any byte flip is detectable from the genesis entry on.
"""

from __future__ import annotations

import fnmatch
import hashlib
import json
import os
import threading
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

from ..errors import PolicyLoadError
from ..types import now_ms

ROLES = ("annotator", "planner", "admin", "robot")
ACTIONS = ("read", "write")
EFFECTS = ("allow", "deny")
REDACTIONS = ("full", "concept_only")
DEFAULT_REDACTION = "concept_only"

GENESIS_HASH = "0" * 64  # hex of 32 zero bytes


@dataclass(frozen=True)
class Policy:
    id: str
    role: str  # concrete role or "*"
    resource: str  # path glob, e.g. "/explanations/*"
    action: str  # read | write | "*"
    effect: str  # allow | deny
    redaction: str = DEFAULT_REDACTION

    def __post_init__(self) -> None:
        if self.effect not in EFFECTS:
            raise PolicyLoadError(f"policy {self.id!r}: unknown effect {self.effect!r}")
        if self.action not in ACTIONS + ("*",):
            raise PolicyLoadError(f"policy {self.id!r}: unknown action {self.action!r}")
        if self.redaction not in REDACTIONS:
            raise PolicyLoadError(f"policy {self.id!r}: unknown redaction {self.redaction!r}")
        if not self.resource.startswith("/"):
            raise PolicyLoadError(f"policy {self.id!r}: resource pattern must start with '/'")

    @property
    def specificity(self) -> int:
        return len([seg for seg in self.resource.split("/") if seg])

    def matches(self, role: str, resource: str, action: str) -> bool:
        if self.role not in ("*", role):
            return False
        if self.action not in ("*", action):
            return False
        return fnmatch.fnmatchcase(resource, self.resource)


class PolicySet:
    """Immutable snapshot of policies; reload swaps the whole set atomically."""

    def __init__(self, policies: Sequence[Policy] = ()):
        self._policies = tuple(policies)

    @classmethod
    def from_docs(cls, docs: Sequence[dict]) -> "PolicySet":
        policies = []
        for i, doc in enumerate(docs, start=1):
            try:
                policies.append(
                    Policy(
                        id=doc.get("id", f"policy-{i}"),
                        role=doc["role"],
                        resource=doc["resource"],
                        action=doc.get("action", "*"),
                        effect=doc["effect"],
                        redaction=doc.get("redaction", DEFAULT_REDACTION),
                    )
                )
            except KeyError as exc:
                raise PolicyLoadError(f"policy line {i}: missing field {exc.args[0]!r}") from exc
            except PolicyLoadError as exc:
                raise PolicyLoadError(f"policy line {i}: {exc}") from exc
        return cls(policies)

    def to_docs(self) -> List[dict]:
        return [
            {
                "id": p.id,
                "role": p.role,
                "resource": p.resource,
                "action": p.action,
                "effect": p.effect,
                "redaction": p.redaction,
            }
            for p in self._policies
        ]

    def evaluate(self, role: str, resource: str, action: str) -> Tuple[str, str]:
        """(effect, redaction) for a request; no matching policy means deny."""
        matches = [p for p in self._policies if p.matches(role, resource, action)]
        if not matches:
            return "deny", DEFAULT_REDACTION
        # most specific wins; deny beats allow at equal specificity
        matches.sort(key=lambda p: (-p.specificity, 0 if p.effect == "deny" else 1, p.id))
        winner = matches[0]
        return winner.effect, winner.redaction

    def __len__(self) -> int:
        return len(self._policies)


def default_policies() -> PolicySet:
    """Desk-mode policy set for the built-in roles."""
    docs = [
        {"id": "admin-all", "role": "admin", "resource": "/*", "action": "*",
         "effect": "allow", "redaction": "full"},
        {"id": "annot-queue", "role": "annotator", "resource": "/queue/*", "action": "read",
         "effect": "allow"},
        {"id": "annot-labels", "role": "annotator", "resource": "/labels", "action": "write",
         "effect": "allow"},
        {"id": "annot-expl", "role": "annotator", "resource": "/explanations/*", "action": "read",
         "effect": "allow", "redaction": "concept_only"},
        {"id": "annot-pred", "role": "annotator", "resource": "/predictions/*", "action": "read",
         "effect": "allow"},
        {"id": "annot-feedback", "role": "annotator", "resource": "/feedback", "action": "write",
         "effect": "allow"},
        {"id": "annot-events", "role": "annotator", "resource": "/events", "action": "read",
         "effect": "allow"},
        {"id": "plan-forecasts", "role": "planner", "resource": "/forecasts/*", "action": "read",
         "effect": "allow"},
        {"id": "plan-whatif", "role": "planner", "resource": "/whatif", "action": "write",
         "effect": "allow"},
        {"id": "plan-options", "role": "planner", "resource": "/options", "action": "read",
         "effect": "allow"},
        {"id": "plan-feedback", "role": "planner", "resource": "/feedback", "action": "write",
         "effect": "allow"},
        {"id": "plan-knowledge", "role": "planner", "resource": "/knowledge", "action": "write",
         "effect": "allow"},
        {"id": "plan-expl", "role": "planner", "resource": "/explanations/*", "action": "read",
         "effect": "allow", "redaction": "concept_only"},
        {"id": "plan-pred", "role": "planner", "resource": "/predictions/*", "action": "read",
         "effect": "allow"},
        {"id": "plan-metrics", "role": "planner", "resource": "/stream/metrics", "action": "read",
         "effect": "allow"},
        {"id": "plan-events", "role": "planner", "resource": "/events", "action": "read",
         "effect": "allow"},
        {"id": "robot-intent", "role": "robot", "resource": "/intent/*", "action": "read",
         "effect": "allow"},
    ]
    return PolicySet.from_docs(docs)


# --------------------------------------------------------------------------
# hash-chained audit log


@dataclass(frozen=True)
class AuditEntry:
    seq: int
    ts: int
    actor: str
    action: str
    resource: str
    outcome: str
    prev_hash: str
    hash: str

    def to_doc(self) -> dict:
        return {
            "seq": self.seq,
            "ts": self.ts,
            "actor": self.actor,
            "action": self.action,
            "resource": self.resource,
            "outcome": self.outcome,
            "prev_hash": self.prev_hash,
            "hash": self.hash,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "AuditEntry":
        return cls(
            seq=int(doc["seq"]),
            ts=int(doc["ts"]),
            actor=doc["actor"],
            action=doc["action"],
            resource=doc["resource"],
            outcome=doc["outcome"],
            prev_hash=doc["prev_hash"],
            hash=doc["hash"],
        )


def _entry_hash(seq: int, ts: int, actor: str, action: str, resource: str,
                outcome: str, prev_hash: str) -> str:
    payload = f"{seq}|{ts}|{actor}|{action}|{resource}|{outcome}|{prev_hash}"
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class AuditLog:
    """Append-only audit trail; appends serialized, chain verifiable."""

    def __init__(self, path: Optional[str] = None):
        self._path = path
        self._lock = threading.Lock()
        self._entries: List[AuditEntry] = []
        if path and os.path.exists(path):
            with open(path, "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if line:
                        self._entries.append(AuditEntry.from_doc(json.loads(line)))

    def append(self, actor: str, action: str, resource: str, outcome: str) -> AuditEntry:
        with self._lock:
            seq = len(self._entries)
            prev = self._entries[-1].hash if self._entries else GENESIS_HASH
            ts = now_ms()
            entry = AuditEntry(
                seq=seq,
                ts=ts,
                actor=actor,
                action=action,
                resource=resource,
                outcome=outcome,
                prev_hash=prev,
                hash=_entry_hash(seq, ts, actor, action, resource, outcome, prev),
            )
            if self._path:
                with open(self._path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(entry.to_doc(), sort_keys=True) + "\n")
            self._entries.append(entry)
            return entry

    def entries(self) -> List[AuditEntry]:
        with self._lock:
            return list(self._entries)

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)

    @staticmethod
    def verify(entries: Sequence[AuditEntry]) -> Tuple[bool, Optional[int]]:
        """(valid, first_bad_seq); recomputes the whole chain from genesis."""
        prev = GENESIS_HASH
        for i, e in enumerate(entries):
            expected = _entry_hash(e.seq, e.ts, e.actor, e.action, e.resource,
                                   e.outcome, e.prev_hash)
            if e.seq != i or e.prev_hash != prev or e.hash != expected:
                return False, i
            prev = e.hash
        return True, None
