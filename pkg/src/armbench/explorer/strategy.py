"""
Target and gesture selection.

The random variant picks any perceived widget. The centre and edge variants
start each screen at the widget nearest their anchor (the screen centre, or a
point on the screen border drawn once per run) and then keep moving in the
direction of the last two targets: the next target is the nearest widget
inside a cone around that direction. When the direction would carry the arm
off the screen, or the cone holds nothing worth touching, a new direction is
drawn at random.
"""

import logging
import math
from collections import deque
from enum import StrEnum

import numpy as np
from pydantic import Field

from armbench.documents import BenchBaseModel
from armbench.errors import NoWidgetsError
from armbench.geometry import Point, Rect, distance
from armbench.kinematics import WIDGET_GESTURES, GestureKind
from armbench.units import Radians
from armbench.vision.widgets import Widget

log = logging.getLogger("armbench.explorer")

VISIT_GRID = 4
# slide endpoints keep this fraction of the widget, and at least 3 px, from its edges
SLIDE_EDGE_INSET = 0.15
SLIDE_MIN_INSET = 3.0


class StrategyVariant(StrEnum):
    random = "random"
    edge = "edge"
    center = "center"


class Strategy(BenchBaseModel):
    variant: StrategyVariant = StrategyVariant.center
    seed: int = 0
    cone_half_angle: Radians = Field(default=math.pi / 3, gt=0, le=math.pi)
    prefer_unvisited: bool = True
    scroll_probability: float = Field(default=0.05, ge=0, le=1)
    max_retries: int = Field(default=8, ge=0)


class ExplorationHistory:
    """
    What the strategy remembers between steps: the anchor, the last two target
    points on the current screen, the current direction and the widgets
    already touched on every screen.
    """

    def __init__(self, anchor: Point):
        self.anchor = anchor
        self.targets: deque[Point] = deque(maxlen=2)
        self.direction: Point | None = None
        self.visited: set[tuple[str, int, int]] = set()
        self.steps = 0
        self.screen: str | None = None

    def enter(self, screen: str) -> bool:
        """Switch to `screen`; returns True (and forgets the targets) if it is a different screen."""
        if screen == self.screen:
            return False
        self.screen = screen
        self.targets.clear()
        self.direction = None
        return True

    def key(self, widget: Widget) -> tuple[str, int, int]:
        cx, cy = widget.center
        return (self.screen or "", round(cx / VISIT_GRID), round(cy / VISIT_GRID))

    def is_visited(self, widget: Widget) -> bool:
        return self.key(widget) in self.visited

    def record(self, target: Point | None, widget: Widget | None = None) -> None:
        self.steps += 1
        if widget is not None:
            self.visited.add(self.key(widget))
        if target is None:
            return
        self.targets.append(target)
        if len(self.targets) == 2:
            (x0, y0), (x1, y1) = self.targets
            norm = math.hypot(x1 - x0, y1 - y0)
            self.direction = ((x1 - x0) / norm, (y1 - y0) / norm) if norm > 0 else None

    @property
    def last(self) -> Point | None:
        return self.targets[-1] if self.targets else None


def edge_anchor(screen_size: tuple[float, float], rng: np.random.Generator) -> Point:
    """A point drawn uniformly along the screen border."""
    w, h = screen_size
    t = float(rng.uniform(0.0, 2.0 * (w + h)))
    if t < w:
        return (t, 0.0)
    t -= w
    if t < h:
        return (float(w), t)
    t -= h
    if t < w:
        return (w - t, float(h))
    return (0.0, h - (t - w))


def slide_endpoints(bounds: Rect, rng: np.random.Generator) -> tuple[Point, Point]:
    """
    A drag across `bounds`, from a point drawn along one edge to the mirrored
    point on the opposite edge, both inset from the widget border.
    """
    ix, iy = (
        max(SLIDE_EDGE_INSET * size, min(SLIDE_MIN_INSET, size / 2.0)) for size in (bounds.width, bounds.height)
    )
    ex, ey = edge_anchor((bounds.width - 2.0 * ix, bounds.height - 2.0 * iy), rng)
    start = (bounds.x + ix + ex, bounds.y + iy + ey)
    cx, cy = bounds.center
    return start, (2.0 * cx - start[0], 2.0 * cy - start[1])


def start_anchor(variant: StrategyVariant, screen_size: tuple[int, int], rng: np.random.Generator) -> Point:
    if variant == StrategyVariant.edge:
        return edge_anchor(screen_size, rng)
    return (screen_size[0] / 2.0, screen_size[1] / 2.0)


def select_gesture_for(widget: Widget | None, rng: np.random.Generator) -> GestureKind:
    """Uniform over the gestures `widget` accepts; screen-level means scroll."""
    if widget is None:
        return GestureKind.scroll
    options = [*WIDGET_GESTURES, GestureKind.input] if widget.input else list(WIDGET_GESTURES)
    return options[int(rng.integers(len(options)))]


def _random_direction(rng: np.random.Generator) -> Point:
    angle = float(rng.uniform(0.0, 2.0 * math.pi))
    return (math.cos(angle), math.sin(angle))


def median_spacing(widgets: list[Widget]) -> float:
    """Median distance from each widget centre to its nearest neighbour."""
    if len(widgets) < 2:
        return 0.0
    centres = np.array([w.center for w in widgets])
    gaps = np.linalg.norm(centres[:, None, :] - centres[None, :, :], axis=-1)
    np.fill_diagonal(gaps, np.inf)
    return float(np.median(gaps.min(axis=1)))


def _in_cone(origin: Point, direction: Point, p: Point, half_angle: float) -> bool:
    dx, dy = p[0] - origin[0], p[1] - origin[1]
    norm = math.hypot(dx, dy)
    if norm == 0:
        return False
    cos = (dx * direction[0] + dy * direction[1]) / norm
    return cos >= math.cos(half_angle) - 1e-12


def _nearest(widgets: list[Widget], p: Point) -> Widget:
    return min(widgets, key=lambda w: distance(w.center, p))


def select_target(
    widgets: list[Widget],
    history: ExplorationHistory,
    strategy: Strategy,
    screen_size: tuple[int, int],
    rng: np.random.Generator,
    allow_screen_level: bool = True,
) -> Widget | None:
    """
    The next widget to operate on, or None for a screen-level gesture.

    Raises:
        NoWidgetsError: nothing was perceived and screen-level gestures are not allowed.
    """
    if not widgets:
        if allow_screen_level:
            return None
        raise NoWidgetsError(f"No widgets perceived on screen '{history.screen}' and scrolling is disabled")

    if strategy.variant == StrategyVariant.random:
        return widgets[int(rng.integers(len(widgets)))]

    unvisited = [w for w in widgets if not history.is_visited(w)]
    preferred = unvisited if strategy.prefer_unvisited and unvisited else widgets
    last = history.last
    if last is None:
        return _nearest(preferred, history.anchor)

    w, h = screen_size
    step = median_spacing(widgets)
    direction = history.direction or _random_direction(rng)
    for _ in range(strategy.max_retries + 1):
        ahead = (last[0] + direction[0] * step, last[1] + direction[1] * step)
        if 0.0 <= ahead[0] <= w and 0.0 <= ahead[1] <= h:
            cone = [c for c in widgets if _in_cone(last, direction, c.center, strategy.cone_half_angle)]
            if strategy.prefer_unvisited and unvisited:
                pool = [c for c in cone if not history.is_visited(c)]
            else:
                pool = cone
            if pool:
                history.direction = direction
                return _nearest(pool, last)
        direction = _random_direction(rng)
        log.debug(f"Redrew exploration direction to ({direction[0]:.3f}, {direction[1]:.3f})")
    return preferred[int(rng.integers(len(preferred)))]
