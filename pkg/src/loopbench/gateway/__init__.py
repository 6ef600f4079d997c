"""Transversal security layer and service surface: policies, audit, HTTP API, CLI."""

from .policy import AuditEntry, AuditLog, Policy, PolicySet

__all__ = ["AuditEntry", "AuditLog", "Policy", "PolicySet"]
