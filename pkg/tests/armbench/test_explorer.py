import tempfile
from pathlib import Path
from unittest.mock import patch

import numpy as np
import pytest
from pydantic import ValidationError

from armbench.errors import NoScreenFoundError, NoWidgetsError
from armbench.explorer.runner import (
    Budget,
    ExplorationTrace,
    Explorer,
    Perception,
    run_exploration,
)
from armbench.explorer.strategy import (
    ExplorationHistory,
    Strategy,
    StrategyVariant,
    edge_anchor,
    median_spacing,
    select_gesture_for,
    select_target,
    slide_endpoints,
)
from armbench.geometry import Rect
from armbench.kinematics import WIDGET_GESTURES, ArmConfig, CompoundGesture, GestureKind
from armbench.simbench.registry import get_model_registry
from armbench.simbench.session import AppSession
from armbench.vision.widgets import Widget, WidgetKind

SCREEN = (200, 200)


def box(cx, cy, size=20, input=False):
    half = size // 2
    return Widget(
        kind=WidgetKind.nontext,
        bounds=Rect(x=cx - half, y=cy - half, width=size, height=size),
        input=input,
    )


def history_moving(points, anchor=(100.0, 100.0)):
    history = ExplorationHistory(anchor)
    history.enter("s")
    for p in points:
        history.record(p)
    return history


@pytest.fixture
def session():
    registry = get_model_registry()
    return AppSession(registry.app("example"), registry.device("regular"))


def oracle_run(session, variant=StrategyVariant.center, seed=0, budget=None):
    strategy = Strategy(variant=variant, seed=seed)
    return run_exploration(
        session, strategy, budget or Budget(steps=25), perception=Perception.oracle
    )


# --- strategy ---


def test_first_target_is_nearest_to_anchor():
    a, b, c = box(150, 100), box(100, 150), box(60, 100)
    history = history_moving([])
    assert select_target([a, b, c], history, Strategy(), SCREEN, np.random.default_rng(0)) == c


def test_first_target_prefers_unvisited():
    a, b, c = box(150, 100), box(100, 150), box(60, 100)
    history = history_moving([])
    history.record(None, c)
    assert history.is_visited(c)
    assert select_target([a, b, c], history, Strategy(), SCREEN, np.random.default_rng(0)) == a
    picked = select_target(
        [a, b, c], history, Strategy(prefer_unvisited=False), SCREEN, np.random.default_rng(0)
    )
    assert picked == c


def test_next_target_lies_in_cone():
    ahead, side, behind = box(150, 100), box(100, 150), box(60, 100)
    history = history_moving([(50.0, 100.0), (100.0, 100.0)])
    assert history.direction == (1.0, 0.0)
    picked = select_target(
        [ahead, side, behind], history, Strategy(), SCREEN, np.random.default_rng(0)
    )
    assert picked == ahead
    assert history.direction == (1.0, 0.0)


def test_direction_is_redrawn_at_the_border():
    widgets = [box(40, 100), box(100, 40), box(100, 160)]
    history = history_moving([(150.0, 100.0), (195.0, 100.0)])
    picked = select_target(widgets, history, Strategy(), SCREEN, np.random.default_rng(1))
    assert picked in widgets


def test_random_variant_is_uniform():
    widgets = [box(40, 40), box(100, 100), box(160, 160)]
    history = history_moving([])
    rng = np.random.default_rng(7)
    strategy = Strategy(variant=StrategyVariant.random)
    counts = {w.center: 0 for w in widgets}
    for _ in range(3000):
        counts[select_target(widgets, history, strategy, SCREEN, rng).center] += 1
    assert all(850 <= n <= 1150 for n in counts.values())


def test_no_widgets():
    history = history_moving([])
    rng = np.random.default_rng(0)
    assert select_target([], history, Strategy(), SCREEN, rng) is None
    with pytest.raises(NoWidgetsError, match="scrolling is disabled"):
        select_target([], history, Strategy(), SCREEN, rng, allow_screen_level=False)


def test_gesture_choice_matches_widget():
    rng = np.random.default_rng(3)
    assert select_gesture_for(None, rng) == GestureKind.scroll
    button = {select_gesture_for(box(50, 50), rng) for _ in range(300)}
    assert button == set(WIDGET_GESTURES)
    field = {select_gesture_for(box(50, 50, input=True), rng) for _ in range(300)}
    assert GestureKind.input in field


def test_edge_anchor_lies_on_border():
    rng = np.random.default_rng(11)
    w, h = 270, 540
    for _ in range(200):
        x, y = edge_anchor((w, h), rng)
        assert 0.0 <= x <= w and 0.0 <= y <= h
        assert min(x, w - x, y, h - y) == pytest.approx(0.0, abs=1e-9)


def test_slide_crosses_widget_between_opposite_edges():
    rng = np.random.default_rng(5)
    bounds = Rect(x=40, y=60, width=100, height=30)
    ix, iy = 15.0, 4.5
    cx, cy = bounds.center
    for _ in range(200):
        (sx, sy), (ex, ey) = slide_endpoints(bounds, rng)
        for x, y in ((sx, sy), (ex, ey)):
            assert bounds.x + ix - 1e-9 <= x <= bounds.x1 - ix + 1e-9
            assert bounds.y + iy - 1e-9 <= y <= bounds.y1 - iy + 1e-9
        gaps = (sx - bounds.x - ix, bounds.x1 - ix - sx, sy - bounds.y - iy, bounds.y1 - iy - sy)
        assert min(gaps) == pytest.approx(0.0, abs=1e-9)
        assert (sx + ex) / 2 == pytest.approx(cx)
        assert (sy + ey) / 2 == pytest.approx(cy)


def test_slide_on_thin_widget_stays_inside():
    rng = np.random.default_rng(6)
    bounds = Rect(x=10, y=10, width=4, height=200)
    for _ in range(50):
        for x, y in slide_endpoints(bounds, rng):
            assert bounds.x < x < bounds.x1 and bounds.y < y < bounds.y1


def test_median_spacing():
    assert median_spacing([box(10, 10)]) == 0.0
    assert median_spacing([box(10, 10), box(20, 10), box(40, 10)]) == pytest.approx(10.0)


def test_history_forgets_targets_on_new_screen():
    history = history_moving([(10.0, 10.0), (20.0, 10.0)])
    assert history.enter("s") is False
    assert history.last == (20.0, 10.0)
    assert history.enter("t") is True
    assert history.last is None
    assert history.direction is None


def test_strategy_rejects_bad_cone():
    with pytest.raises(ValidationError):
        Strategy(cone_half_angle=0)


# --- budgets ---


def test_budget_granularity():
    assert Budget().granularity == "200step"
    assert Budget(steps=None, seconds=300).granularity == "300s"
    assert Budget(steps=200, seconds=300).granularity == "200step-300s"


def test_budget_needs_a_limit():
    with pytest.raises(ValidationError, match="needs a step count"):
        Budget(steps=None)


def test_budget_exhaustion():
    both = Budget(steps=10, seconds=60)
    assert not both.exhausted(9, 59.9)
    assert both.exhausted(10, 0.0)
    assert both.exhausted(0, 60.0)


# --- runner ---


def test_oracle_run_is_deterministic():
    registry = get_model_registry()
    app, device = registry.app("example"), registry.device("regular")
    first = oracle_run(AppSession(app, device), seed=4)
    second = oracle_run(AppSession(app, device), seed=4)
    assert first.trace.to_jsonl() == second.trace.to_jsonl()
    assert first.metrics == second.metrics


def test_oracle_run_bookkeeping(session):
    trace, metrics = oracle_run(session, StrategyVariant.edge)
    assert metrics.steps == len(trace.records) == 25
    assert metrics.failed_steps == 0
    assert [r.step for r in trace.records] == list(range(25))
    assert trace.is_contiguous()
    assert trace.recomputed_distance() == pytest.approx(metrics.distance, rel=1e-9)
    assert trace.total_distance == pytest.approx(metrics.distance, rel=1e-9)
    cumulative = [r.cumulative_distance for r in trace.records]
    assert cumulative == sorted(cumulative)
    assert cumulative[-1] == pytest.approx(metrics.distance)
    assert 1 <= metrics.screens_visited <= 4
    assert 0.0 < metrics.screen_coverage <= 1.0
    assert sum(metrics.effective.values()) + sum(metrics.noneffective.values()) == 25
    assert metrics.recognition_rate is None or 0.0 <= metrics.recognition_rate <= 1.0


def test_zero_step_budget(session):
    trace, metrics = oracle_run(session, budget=Budget(steps=0))
    assert trace.records == []
    assert metrics.distance == 0.0
    assert metrics.screens_visited == 1


def test_seconds_budget_stops_after_crossing(session):
    trace, metrics = oracle_run(session, budget=Budget(steps=None, seconds=20))
    assert metrics.seconds >= 20
    assert trace.records[-1].cumulative_seconds == pytest.approx(metrics.seconds)
    if len(trace.records) > 1:
        assert trace.records[-2].cumulative_seconds < 20


def test_trace_jsonl_reloads(session):
    trace, _ = oracle_run(session, budget=Budget(steps=5))
    reloaded = ExplorationTrace.from_jsonl(trace.to_jsonl())
    assert reloaded == trace
    assert reloaded.is_contiguous()


def test_failed_steps_are_recorded(session):
    with patch.object(Explorer, "perceive", side_effect=NoScreenFoundError("no screen in photo")):
        trace, metrics = oracle_run(session, budget=Budget(steps=3))
    assert metrics.steps == metrics.failed_steps == 3
    assert metrics.distance == 0.0
    assert metrics.seconds == pytest.approx(3 * ArmConfig().gesture_overhead)
    assert metrics.recognition_rate is None
    assert all(r.error.startswith("NoScreenFoundError") for r in trace.records)
    assert all(len(r.segment) == 1 for r in trace.records)
    assert trace.is_contiguous()


def test_camera_run_writes_overlays(session):
    with tempfile.TemporaryDirectory() as tmp:
        strategy = Strategy(seed=2)
        explorer = Explorer(session, strategy, overlay_dir=tmp)
        trace, metrics = explorer.run(Budget(steps=3))
        assert metrics.steps == 3
        assert trace.is_contiguous()
        for r in trace.records:
            if r.failed:
                assert r.photo is None
            else:
                assert (Path(tmp) / r.photo).is_file()


def open_keyboard(session):
    user = session.app.screen("login").widget("user").rect
    session.apply(CompoundGesture(kind=GestureKind.click, targets=(user.center,)))
    assert session.keyboard_visible
    return user


def test_key_label_stands_for_its_key(session):
    open_keyboard(session)
    explorer = Explorer(session, Strategy(), perception=Perception.oracle)
    cx, cy = session.keyboard.keys["w"].center
    label = Widget(kind=WidgetKind.text, bounds=Rect(x=round(cx) - 4, y=round(cy) - 4, width=8, height=9), text="w")
    assert explorer.intended_widget(label) == "key:w"
    assert explorer.intended_widget(box(round(cx), round(cy), size=22)) == "key:w"
    assert explorer.intended_widget(box(5, 5, size=4)) is None


def test_keyboard_is_not_explored_as_app_widgets(session):
    explorer = Explorer(session, Strategy(), perception=Perception.oracle)
    _, closed = session.render()
    assert explorer.app_widgets(closed) == closed

    user = open_keyboard(session)
    _, opened = session.render()
    kept = explorer.app_widgets(opened)
    panel = session.keyboard.panel
    assert len(kept) < len(opened)
    assert not any(panel.contains_point(w.center) for w in kept)
    assert any(w.bounds == user for w in kept)


def test_few_widgets_in_keyboard_area_are_kept(session):
    explorer = Explorer(session, Strategy(), perception=Perception.oracle)
    low = [box(60, 400), box(200, 480)]
    assert explorer.app_widgets(low) == low


@pytest.mark.benchmark
def test_camera_run_recognises_targets_on_suite():
    registry = get_model_registry()
    device = registry.device("regular")
    recognised = aimed = 0
    for name in registry.expand_apps(["suite:*"]):
        session = AppSession(registry.app(name), device)
        trace, _ = run_exploration(session, Strategy(seed=0), Budget(steps=40))
        for r in trace.records:
            if r.target_bounds is None:
                continue
            aimed += 1
            recognised += int(r.intended is not None and r.intended == r.resolved)
    assert aimed > 0
    assert recognised / aimed >= 0.98
