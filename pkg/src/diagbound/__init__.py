"""Anytime posterior-bound inference for bipartite leaky noisy-OR diagnosis networks."""

from .model import (
    CompleteHypothesis,
    Disease,
    Evidence,
    InvalidModelError,
    ModelError,
    Network,
    NoisyOrFinding,
    PartialHypothesis,
    TabularFinding,
    validate_case,
    validate_network,
)
from .search import SearchConfig, SearchState

__version__ = "0.1.0"

__all__ = [
    "CompleteHypothesis",
    "Disease",
    "Evidence",
    "InvalidModelError",
    "ModelError",
    "Network",
    "NoisyOrFinding",
    "PartialHypothesis",
    "SearchConfig",
    "SearchState",
    "TabularFinding",
    "validate_case",
    "validate_network",
    "__version__",
]
