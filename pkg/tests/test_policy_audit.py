"""Policy evaluation (default deny, specificity) and the audit hash chain."""

import json
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from loopbench.errors import PolicyLoadError
from loopbench.gateway.policy import (
    AuditEntry,
    AuditLog,
    GENESIS_HASH,
    PolicySet,
    default_policies,
)


class TestPolicyEvaluation:
    def test_empty_policy_set_denies(self):
        effect, _ = PolicySet().evaluate("admin", "/queue/next", "read")
        assert effect == "deny"

    def test_allow_matching_role_and_pattern(self):
        ps = PolicySet.from_docs(
            [{"id": "p", "role": "annotator", "resource": "/queue/*",
              "action": "read", "effect": "allow"}]
        )
        assert ps.evaluate("annotator", "/queue/next", "read")[0] == "allow"
        assert ps.evaluate("annotator", "/queue/next", "write")[0] == "deny"
        assert ps.evaluate("planner", "/queue/next", "read")[0] == "deny"

    def test_more_specific_deny_beats_allow(self):
        ps = PolicySet.from_docs(
            [
                {"id": "a", "role": "planner", "resource": "/explanations/*",
                 "action": "read", "effect": "allow"},
                {"id": "d", "role": "planner", "resource": "/explanations/raw/*",
                 "action": "read", "effect": "deny"},
            ]
        )
        assert ps.evaluate("planner", "/explanations/e1", "read")[0] == "allow"
        assert ps.evaluate("planner", "/explanations/raw/e1", "read")[0] == "deny"

    def test_deny_beats_allow_at_equal_specificity(self):
        ps = PolicySet.from_docs(
            [
                {"id": "a", "role": "*", "resource": "/x/*", "action": "read", "effect": "allow"},
                {"id": "d", "role": "*", "resource": "/x/*", "action": "read", "effect": "deny"},
            ]
        )
        assert ps.evaluate("admin", "/x/1", "read")[0] == "deny"

    def test_redaction_comes_from_winning_policy(self):
        ps = PolicySet.from_docs(
            [{"id": "p", "role": "admin", "resource": "/explanations/*",
              "action": "read", "effect": "allow", "redaction": "full"}]
        )
        assert ps.evaluate("admin", "/explanations/e", "read") == ("allow", "full")

    def test_malformed_policy_reports_line(self):
        with pytest.raises(PolicyLoadError, match="line 2"):
            PolicySet.from_docs(
                [
                    {"id": "ok", "role": "*", "resource": "/a", "effect": "allow"},
                    {"id": "bad", "role": "*", "resource": "no-slash", "effect": "allow"},
                ]
            )

    def test_evaluation_is_pure(self):
        ps = default_policies()
        probe = ("annotator", "/queue/next", "read")
        first = ps.evaluate(*probe)
        for resource in ("/audit", "/labels", "/whatif"):
            ps.evaluate("planner", resource, "write")
        assert ps.evaluate(*probe) == first

    @settings(deadline=None, max_examples=300)
    @given(
        st.text(min_size=0, max_size=12),
        st.text(min_size=0, max_size=30),
        st.sampled_from(["read", "write"]),
    )
    def test_default_deny_property(self, role, resource, action):
        effect, _ = PolicySet().evaluate(role, "/" + resource, action)
        assert effect == "deny"


class TestAuditChain:
    def test_genesis_prev_hash_is_zero_bytes(self):
        log = AuditLog()
        entry = log.append("u", "read", "/queue/next", "ok")
        assert entry.prev_hash == GENESIS_HASH == "0" * 64

    def test_untouched_log_verifies(self):
        log = AuditLog()
        for i in range(1000):
            log.append(f"user{i % 7}", "write" if i % 3 else "read", f"/r/{i}", "ok")
        valid, first_bad = AuditLog.verify(log.entries())
        assert valid and first_bad is None

    def test_every_single_byte_flip_is_detected(self):
        log = AuditLog()
        for i in range(50):
            log.append(f"user{i}", "write", f"/res/{i}", "ok")
        entries = log.entries()
        rng = random.Random(0)
        detected = 0
        trials = 0
        while trials < 100:
            idx = rng.randrange(len(entries))
            line = json.dumps(entries[idx].to_doc(), sort_keys=True)
            pos = rng.randrange(len(line))
            flipped = line[:pos] + chr(ord(line[pos]) ^ (1 << rng.randrange(1, 5))) + line[pos + 1:]
            try:
                doc = json.loads(flipped)
            except (json.JSONDecodeError, UnicodeDecodeError):
                trials += 1
                detected += 1  # a corrupted log line cannot even be parsed
                continue
            if doc == entries[idx].to_doc():
                continue  # flip landed outside any value; not an effective tamper
            tampered = list(entries)
            try:
                tampered[idx] = AuditEntry.from_doc(doc)
            except (ValueError, TypeError, KeyError):
                trials += 1
                detected += 1  # schema-breaking tamper
                continue
            trials += 1
            valid, first_bad = AuditLog.verify(tampered)
            assert not valid, f"undetected tamper at entry {idx}: {flipped}"
            assert first_bad is not None and first_bad <= idx + 1
            detected += 1
        assert detected == 100

    def test_first_bad_seq_points_at_the_tampered_entry(self):
        log = AuditLog()
        for i in range(10):
            log.append("u", "read", f"/r/{i}", "ok")
        entries = log.entries()
        doc = entries[4].to_doc()
        doc["resource"] = "/r/evil"
        entries[4] = AuditEntry.from_doc(doc)
        valid, first_bad = AuditLog.verify(entries)
        assert not valid and first_bad == 4

    def test_log_persists_and_reloads(self, tmp_path):
        path = str(tmp_path / "audit.jsonl")
        log = AuditLog(path)
        for i in range(5):
            log.append("u", "read", f"/r/{i}", "ok")
        reloaded = AuditLog(path)
        assert len(reloaded) == 5
        valid, _ = AuditLog.verify(reloaded.entries())
        assert valid
        nxt = reloaded.append("u", "read", "/r/5", "ok")
        assert nxt.seq == 5
