"""Human-in-the-loop industrial AI workbench.

Modules: forecasting (classifiers, calibration, demand), active_learning,
simreal (synthetic data and scenarios), xai (explanations and redaction),
decisions (recommender and feedback), intention (activity and safe zone),
gateway (policies, audit, HTTP service, CLI), all wired by app.Workbench
over the event bus and storage layer.
"""

__version__ = "0.1.0"

from .types import Event, GrayImage, Prediction, Provenance, Sample, SampleKind

__all__ = [
    "Event",
    "GrayImage",
    "Prediction",
    "Provenance",
    "Sample",
    "SampleKind",
    "__version__",
]
