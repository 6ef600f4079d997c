"""Exception types shared across the workbench."""


class LoopbenchError(Exception):
    """Base class for workbench errors."""


class NotFoundError(LoopbenchError):
    """A referenced key, sample, or task does not exist."""


class ColdModelError(LoopbenchError):
    """Prediction requested before the model has seen any labeled data."""


class LeaseError(LoopbenchError):
    """Annotation task lease is missing, expired, or held by someone else."""


class PolicyLoadError(LoopbenchError):
    """Policy or rule file is malformed; message carries the line number."""
