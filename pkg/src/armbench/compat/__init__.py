"""
Compatibility testing by comparison: GUI similarity metrics and the oracle
that replays every operation on a reference device.
"""

from armbench.compat.oracle import (
    BugKind,
    BugReport,
    ComparisonExplorer,
    ComparisonResult,
    Evidence,
    Verdict,
    assess_operation,
    check_profiles,
    classify_operation,
    run_comparison_session,
)
from armbench.compat.similarity import (
    SimilarityMetric,
    SimilarityScore,
    block_similarity,
    gui_similarity,
    histogram_similarity,
)

__all__ = [
    "BugKind",
    "BugReport",
    "ComparisonExplorer",
    "ComparisonResult",
    "Evidence",
    "Verdict",
    "assess_operation",
    "check_profiles",
    "classify_operation",
    "run_comparison_session",
    "SimilarityMetric",
    "SimilarityScore",
    "block_similarity",
    "gui_similarity",
    "histogram_similarity",
]
