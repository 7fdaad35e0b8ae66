"""
Exploration: choosing what to touch next and running the perceive-decide-act
loop against an app session.
"""

from armbench.explorer.runner import (
    Budget,
    ExplorationResult,
    ExplorationTrace,
    Explorer,
    Perception,
    RunMetrics,
    StepRecord,
    run_exploration,
)
from armbench.explorer.strategy import (
    ExplorationHistory,
    Strategy,
    StrategyVariant,
    select_gesture_for,
    select_target,
)

__all__ = [
    "Budget",
    "ExplorationResult",
    "ExplorationTrace",
    "Explorer",
    "Perception",
    "RunMetrics",
    "StepRecord",
    "run_exploration",
    "ExplorationHistory",
    "Strategy",
    "StrategyVariant",
    "select_gesture_for",
    "select_target",
]
