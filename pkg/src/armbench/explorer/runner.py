"""
The perceive-decide-act loop of one exploration run.

Each step photographs the device, finds and rectifies the screen, extracts
widgets, lets the strategy choose a target and a gesture, plans the arm
movement against the perceived screen and finally touches the device where
the arm really lands. Failures of perception or planning are recorded as
failed steps; they never abort the run.
"""

import json
import logging
from enum import StrEnum
from pathlib import Path
from typing import NamedTuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from armbench.camera import (
    CameraIntrinsics,
    ScreenQuad,
    locate_quad,
    rectify_screen,
    undistort_image,
)
from armbench.documents import BenchBaseModel
from armbench.errors import ArmbenchError
from armbench.explorer.strategy import (
    ExplorationHistory,
    Strategy,
    select_gesture_for,
    select_target,
    slide_endpoints,
    start_anchor,
)
from armbench.geometry import Point
from armbench.kinematics import (
    ArmConfig,
    CompoundGesture,
    GestureKind,
    TipPosition,
    path_length,
    screen_to_world,
    synthesize_gesture,
)
from armbench.simbench.models import Response, ResponseKind
from armbench.simbench.session import AppSession
from armbench.units import Seconds
from armbench.vision.glyphs import GlyphLibrary, default_library
from armbench.vision.image import Image, write_image
from armbench.vision.screen import detect_screen, draw_overlay, extract_widgets
from armbench.vision.widgets import Widget

log = logging.getLogger("armbench.explorer")

INTENDED_IOU = 0.5
LABEL_CONTAINMENT = 0.9
KEYBOARD_SEEN = 0.5
_LETTERS = "abcdefghijklmnopqrstuvwxyz"


class Perception(StrEnum):
    camera = "camera"
    oracle = "oracle"


class Budget(BenchBaseModel):
    """Stop after `steps` steps or `seconds` simulated seconds, whichever comes first."""

    steps: int | None = Field(default=200, ge=0)
    seconds: Seconds | None = Field(default=None, ge=0)

    @model_validator(mode="after")
    def _check_any(self):
        if self.steps is None and self.seconds is None:
            raise ValueError("A budget needs a step count, a number of seconds, or both")
        return self

    @property
    def granularity(self) -> str:
        if self.steps is not None and self.seconds is None:
            return f"{self.steps}step"
        if self.steps is None:
            return f"{self.seconds:g}s"
        return f"{self.steps}step-{self.seconds:g}s"

    def exhausted(self, steps: int, seconds: float) -> bool:
        if self.steps is not None and steps >= self.steps:
            return True
        return self.seconds is not None and seconds >= self.seconds


class StepRecord(BaseModel):
    step: int
    screen: str
    gesture: GestureKind | None = None
    targets: list[Point] = Field(default_factory=list)
    target_bounds: list[int] | None = None
    payload: str | None = None
    intended: str | None = None
    resolved: str | None = None
    response: ResponseKind | None = None
    next_screen: str
    segment: list[tuple[float, float, float]]
    segment_length: float = Field(ge=0)
    cumulative_distance: float = Field(ge=0)
    seconds: float = Field(ge=0)
    cumulative_seconds: float = Field(ge=0)
    photo: str | None = None
    error: str | None = None

    model_config = ConfigDict(frozen=True)

    @property
    def failed(self) -> bool:
        return self.error is not None


class ExplorationTrace(BaseModel):
    records: list[StepRecord] = Field(default_factory=list)

    def to_jsonl(self) -> str:
        return "".join(
            json.dumps(r.model_dump(mode="json"), sort_keys=True) + "\n" for r in self.records
        )

    @classmethod
    def from_jsonl(cls, text: str) -> "ExplorationTrace":
        return cls(
            records=[StepRecord.model_validate_json(line) for line in text.splitlines() if line.strip()]
        )

    @property
    def total_distance(self) -> float:
        return sum(r.segment_length for r in self.records)

    def recomputed_distance(self) -> float:
        """Distance re-derived from the tip paths rather than the stored lengths."""
        return sum(path_length(r.segment) for r in self.records)

    def is_contiguous(self) -> bool:
        return all(
            a.segment[-1] == b.segment[0]
            for a, b in zip(self.records, self.records[1:], strict=False)
        )


class RunMetrics(BaseModel):
    steps: int = 0
    failed_steps: int = 0
    distance: float = 0.0
    seconds: float = 0.0
    screens_visited: int = 0
    widgets_exercised: int = 0
    crashes: int = 0
    effective: dict[str, int] = Field(default_factory=dict)
    noneffective: dict[str, int] = Field(default_factory=dict)
    recognition_rate: float | None = None
    screen_coverage: float = 0.0
    widget_coverage: float = 0.0


class ExplorationResult(NamedTuple):
    trace: ExplorationTrace
    metrics: RunMetrics


class Perceived(NamedTuple):
    quad: ScreenQuad
    widgets: list[Widget]
    photo: Image | None


class Explorer:
    """One exploration run over one session; strictly sequential."""

    def __init__(
        self,
        session: AppSession,
        strategy: Strategy,
        arm: ArmConfig | None = None,
        perception: Perception = Perception.camera,
        intrinsics: CameraIntrinsics | None = None,
        library: GlyphLibrary | None = None,
        overlay_dir: str | Path | None = None,
    ):
        self.session = session
        self.strategy = strategy
        self.arm = arm or ArmConfig()
        self.perception = perception
        self.intrinsics = intrinsics or session.rig.intrinsics
        self.library = library or default_library()
        self.overlay_dir = Path(overlay_dir) if overlay_dir is not None else None
        self.rng = np.random.default_rng(strategy.seed)
        self.keyboard = session.keyboard

    def perceive(self) -> Perceived:
        """
        Raises:
            NoScreenFoundError, QuadOutOfBoundsError, DegenerateQuadError: the
                screen could not be found in the photo.
        """
        session = self.session
        device = session.device
        if self.perception == Perception.oracle:
            _, truth = session.render()
            return Perceived(device.true_quad(), truth, None)
        photo = undistort_image(session.photograph().image, self.intrinsics, session.scene.background)
        found = detect_screen(photo)
        quad = locate_quad(
            found, self.intrinsics, session.rig.pose(device), device.screen_size, device.resolution
        )
        screen = rectify_screen(photo, quad, device.resolution)
        return Perceived(quad, extract_widgets(screen, self.library), photo)

    def _gesture(self, kind: GestureKind, target: Widget | None) -> CompoundGesture:
        if target is None:
            return CompoundGesture(kind=kind, reverse=bool(self.rng.uniform() < 0.5))
        centre = target.center
        if kind == GestureKind.slide:
            return CompoundGesture(kind=kind, targets=slide_endpoints(target.bounds, self.rng))
        if kind == GestureKind.input:
            n = int(self.rng.integers(3, 7))
            word = "".join(_LETTERS[int(i)] for i in self.rng.integers(0, len(_LETTERS), size=n))
            return CompoundGesture(kind=kind, targets=(centre,), payload=word)
        return CompoundGesture(kind=kind, targets=(centre,))

    def _to_device(self, p: Point, quad: ScreenQuad) -> Point:
        """Where a touch aimed at perceived pixel `p` lands on the real screen."""
        world = screen_to_world(p, quad, self.arm.pen_alpha)
        return self.session.to_screen((world.x, world.y))

    def intended_widget(self, target: Widget) -> str | None:
        """
        Id of the reachable widget `target` stands for: the best match at
        IoU ≥ 0.5, else the smallest widget holding it, as a key holds its label.
        """
        reachable = self.session.visible_widgets()
        best, best_iou = None, INTENDED_IOU
        for widget_id, rect in reachable:
            iou = target.bounds.iou(rect)
            if iou >= best_iou:
                best, best_iou = widget_id, iou
        if best is not None:
            return best
        holders = [
            (rect.area, widget_id)
            for widget_id, rect in reachable
            if rect.contains_point(target.center) and target.bounds.containment_in(rect) >= LABEL_CONTAINMENT
        ]
        return min(holders)[1] if holders else None

    def app_widgets(self, widgets: list[Widget]) -> list[Widget]:
        """Perceived widgets minus the soft keyboard, once most of its keys are seen."""
        layout = self.keyboard
        seen = {layout.key_at(w.center) for w in widgets} - {None}
        if len(seen) < KEYBOARD_SEEN * len(layout.keys):
            return widgets
        return [w for w in widgets if not layout.panel.contains_point(w.center)]

    def _overlay(self, step: int, perceived: Perceived) -> str | None:
        if self.overlay_dir is None or perceived.photo is None:
            return None
        name = f"step-{step:04d}.png"
        write_image(self.overlay_dir / name, draw_overlay(perceived.photo, perceived.quad, perceived.widgets))
        return name

    def execute(self, step: int, gesture: CompoundGesture) -> Response:
        """Perform `gesture`, already in device pixels, on the session."""
        return self.session.apply(gesture)

    def run(self, budget: Budget) -> ExplorationResult:
        session = self.session
        device = session.device
        strategy = self.strategy
        arm = self.arm
        history = ExplorationHistory(start_anchor(strategy.variant, device.resolution, self.rng))
        home = screen_to_world(history.anchor, device.true_quad(), arm.pen_alpha)
        tip = TipPosition(home.x, home.y, arm.hover_height)
        keys = self.keyboard.centers()

        records: list[StepRecord] = []
        screens = {session.screen}
        exercised: set[tuple[str, str]] = set()
        effective: dict[str, int] = {}
        noneffective: dict[str, int] = {}
        recognised = aimed = crashes = 0
        distance = seconds = 0.0

        while not budget.exhausted(len(records), seconds):
            step = len(records)
            before = session.screen
            history.enter(before)
            try:
                perceived = self.perceive()
                widgets = self.app_widgets(perceived.widgets)
                scroll = self.rng.uniform() < strategy.scroll_probability
                target = None if scroll else select_target(
                    widgets, history, strategy, device.resolution, self.rng
                )
                kind = select_gesture_for(target, self.rng)
                gesture = self._gesture(kind, target)
                plan = synthesize_gesture(gesture, tip, perceived.quad, arm, keys)
                landed = tuple(self._to_device(p, perceived.quad) for p in gesture.targets)
            except ArmbenchError as e:
                cost = arm.gesture_overhead
                seconds += cost
                records.append(
                    StepRecord(
                        step=step,
                        screen=before,
                        next_screen=before,
                        segment=[tuple(tip)],
                        segment_length=0.0,
                        cumulative_distance=distance,
                        seconds=cost,
                        cumulative_seconds=seconds,
                        error=f"{type(e).__name__}: {e}",
                    )
                )
                history.record(None)
                log.debug(f"Step {step} failed: {e}")
                continue

            intended = self.intended_widget(target) if target is not None else None
            resolved = session.resolve(landed[0]) if landed else None
            if target is not None:
                aimed += 1
                recognised += int(intended is not None and intended == resolved)
            response = self.execute(step, gesture.model_copy(update={"targets": landed}))

            if response.widget is not None and not response.widget.startswith("key:"):
                exercised.add((before, response.widget))
            tally = effective if response.kind != ResponseKind.none else noneffective
            tally[kind.value] = tally.get(kind.value, 0) + 1
            crashes += int(response.kind == ResponseKind.crash)
            screens.add(session.screen)

            distance += plan.xy_distance
            seconds += plan.seconds
            tip = plan.end
            records.append(
                StepRecord(
                    step=step,
                    screen=before,
                    gesture=kind,
                    targets=list(gesture.targets),
                    target_bounds=target.bounds.as_list() if target is not None else None,
                    payload=gesture.payload,
                    intended=intended,
                    resolved=resolved,
                    response=response.kind,
                    next_screen=session.screen,
                    segment=[tuple(p) for p in plan.tip_path],
                    segment_length=plan.xy_distance,
                    cumulative_distance=distance,
                    seconds=plan.seconds,
                    cumulative_seconds=seconds,
                    photo=self._overlay(step, perceived),
                )
            )
            history.record(target.center if target is not None else None, target)

        app = session.app
        metrics = RunMetrics(
            steps=len(records),
            failed_steps=sum(r.failed for r in records),
            distance=distance,
            seconds=seconds,
            screens_visited=len(screens),
            widgets_exercised=len(exercised),
            crashes=crashes,
            effective=effective,
            noneffective=noneffective,
            recognition_rate=recognised / aimed if aimed else None,
            screen_coverage=len(screens) / len(app.screens),
            widget_coverage=len(exercised) / max(app.widget_count(), 1),
        )
        log.debug(
            f"{strategy.variant} run on '{app.name}' seed {strategy.seed}: {metrics.steps} steps, {distance:.1f} mm"
        )
        return ExplorationResult(ExplorationTrace(records=records), metrics)


def run_exploration(
    session: AppSession,
    strategy: Strategy,
    budget: Budget,
    arm: ArmConfig | None = None,
    perception: Perception = Perception.camera,
    intrinsics: CameraIntrinsics | None = None,
    overlay_dir: str | Path | None = None,
) -> ExplorationResult:
    """Explore `session` with `strategy` until `budget` runs out."""
    explorer = Explorer(session, strategy, arm, perception, intrinsics, overlay_dir=overlay_dir)
    return explorer.run(budget)

