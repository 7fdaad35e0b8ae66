"""
Comparison-based bug detection.

Every gesture performed on the device under test is repeated at the same
screen coordinates on a reference device of the same size. A device
"responded" when its screen changed noticeably; when one device responds and
the other does not, the operation exposes a compatibility bug. Crashes of the
device under test are reported as well.
"""

import json
import logging
from enum import StrEnum
from pathlib import Path
from typing import NamedTuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from armbench.camera import CameraIntrinsics, rectify_screen, undistort_image
from armbench.compat.similarity import SimilarityMetric, gui_similarity
from armbench.errors import ArmbenchError, MismatchedScreensError, ProfileMismatchError
from armbench.explorer.runner import Budget, Explorer, ExplorationTrace, Perception, RunMetrics
from armbench.explorer.strategy import Strategy, StrategyVariant
from armbench.kinematics import ArmConfig, CompoundGesture, GestureKind
from armbench.simbench.models import AppModel, DeviceProfile, Response, ResponseKind
from armbench.simbench.photo import CameraRig, SceneConfig
from armbench.simbench.session import AppSession
from armbench.vision.glyphs import GlyphLibrary
from armbench.vision.image import Image, write_image
from armbench.vision.screen import detect_screen

log = logging.getLogger("armbench.compat")

RESPONSE_THRESHOLD = 0.9


class Verdict(StrEnum):
    normal_progress = "normal_progress"
    normal_no_progress = "normal_no_progress"
    compatibility_bug = "compatibility_bug"


class Assessment(NamedTuple):
    verdict: Verdict
    similarity_a: float
    similarity_b: float


def assess_operation(
    before_a: Image,
    after_a: Image,
    before_b: Image,
    after_b: Image,
    threshold: float = RESPONSE_THRESHOLD,
    metric: SimilarityMetric = SimilarityMetric.block,
    screens: tuple[str, str] | None = None,
) -> Assessment:
    """
    Raises:
        MismatchedScreensError: `screens` says the devices started on different screens.
        EmptyImageError: an image has no pixels.
    """
    if screens is not None and screens[0] != screens[1]:
        raise MismatchedScreensError(
            f"Devices were on different screens before the operation: '{screens[0]}' and '{screens[1]}'"
        )
    sim_a = gui_similarity(before_a, after_a, metric).value
    sim_b = gui_similarity(before_b, after_b, metric).value
    responded_a, responded_b = sim_a < threshold, sim_b < threshold
    if responded_a and responded_b:
        verdict = Verdict.normal_progress
    elif not responded_a and not responded_b:
        verdict = Verdict.normal_no_progress
    else:
        verdict = Verdict.compatibility_bug
    return Assessment(verdict, sim_a, sim_b)


def classify_operation(
    before_a: Image,
    after_a: Image,
    before_b: Image,
    after_b: Image,
    threshold: float = RESPONSE_THRESHOLD,
    metric: SimilarityMetric = SimilarityMetric.block,
    screens: tuple[str, str] | None = None,
) -> Verdict:
    return assess_operation(before_a, after_a, before_b, after_b, threshold, metric, screens).verdict


class BugKind(StrEnum):
    crash = "crash"
    compatibility = "compatibility"


class Evidence(BaseModel):
    """Paths of the evidence PNGs, relative to the run's output directory."""

    before_a: str | None = None
    after_a: str | None = None
    before_b: str | None = None
    after_b: str | None = None

    def complete(self) -> bool:
        return None not in (self.before_a, self.after_a, self.before_b, self.after_b)


class BugReport(BaseModel):
    kind: BugKind
    app: str
    screen: str
    widget: str | None = None
    gesture: GestureKind
    step: int = Field(ge=0)
    strategy: StrategyVariant
    seed: int
    device: str
    reference: str
    response_a: ResponseKind
    response_b: ResponseKind
    similarity_a: float | None = None
    similarity_b: float | None = None
    evidence: Evidence = Field(default_factory=Evidence)

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check_evidence(self):
        if self.kind == BugKind.compatibility and not self.evidence.complete():
            raise ValueError("A compatibility report needs before and after images of both devices")
        return self

    @property
    def key(self) -> tuple[str, str, str | None, GestureKind, BugKind]:
        return (self.app, self.screen, self.widget, self.gesture, self.kind)

    def to_json(self) -> str:
        return json.dumps(self.model_dump(mode="json"), sort_keys=True, indent=2) + "\n"


def check_profiles(device: DeviceProfile, reference: DeviceProfile) -> None:
    """
    Raises:
        ProfileMismatchError: the two screens differ in size or resolution.
    """
    if tuple(device.screen_size) != tuple(reference.screen_size) or tuple(device.resolution) != tuple(
        reference.resolution
    ):
        raise ProfileMismatchError(
            f"Device '{device.id}' ({device.screen_size} mm, {device.resolution} px) and reference "
            f"'{reference.id}' ({reference.screen_size} mm, {reference.resolution} px) differ"
        )


class ComparisonExplorer(Explorer):
    """Explores the device under test and mirrors every operation on the reference."""

    def __init__(
        self,
        session: AppSession,
        reference: AppSession,
        strategy: Strategy,
        out_dir: str | Path,
        arm: ArmConfig | None = None,
        perception: Perception = Perception.camera,
        intrinsics: CameraIntrinsics | None = None,
        threshold: float = RESPONSE_THRESHOLD,
        metric: SimilarityMetric = SimilarityMetric.block,
        library: GlyphLibrary | None = None,
        overlay_dir: str | Path | None = None,
    ):
        check_profiles(session.device, reference.device)
        super().__init__(session, strategy, arm, perception, intrinsics, library, overlay_dir)
        self.reference = reference
        self.threshold = threshold
        self.metric = metric
        self.out_dir = Path(out_dir)
        self.run_name = f"{session.app.name}-{strategy.variant}-s{strategy.seed}".replace(":", "-")
        self.reports: dict[tuple, BugReport] = {}

    def capture(self, session: AppSession) -> Image:
        """The screen as the camera sees it, rectified; the rendering itself under oracle perception."""
        if self.perception == Perception.oracle:
            return session.render()[0]
        photo = undistort_image(session.photograph().image, self.intrinsics, session.scene.background)
        return rectify_screen(photo, detect_screen(photo), session.device.resolution)

    def _capture_pair(self) -> tuple[Image, Image] | None:
        try:
            return self.capture(self.session), self.capture(self.reference)
        except ArmbenchError as e:
            log.debug(f"Comparison photo failed: {e}")
            return None

    def _evidence(self, step: int, before: tuple[Image, Image] | None, after: tuple[Image, Image] | None) -> Evidence:
        paths: dict[str, str] = {}
        for label, pair in (("before", before), ("after", after)):
            if pair is None:
                continue
            for device, image in zip(("a", "b"), pair, strict=True):
                name = f"evidence/{self.run_name}-{step:04d}-{device}-{label}.png"
                write_image(self.out_dir / name, image)
                paths[f"{label}_{device}"] = name
        return Evidence(**paths)

    def _report(
        self,
        kind: BugKind,
        fields: dict,
        before: tuple[Image, Image] | None,
        after: tuple[Image, Image] | None,
    ) -> None:
        key = (fields["app"], fields["screen"], fields["widget"], fields["gesture"], kind)
        if key in self.reports:
            return
        evidence = self._evidence(fields["step"], before, after)
        self.reports[key] = BugReport(kind=kind, evidence=evidence, **fields)
        log.debug(f"{kind} bug on {fields['screen']}/{fields['widget']} by {fields['gesture']} at step {fields['step']}")

    def execute(self, step: int, gesture: CompoundGesture) -> Response:
        a, b = self.session, self.reference
        if a.screen != b.screen:
            b.sync_from(a)
        screen = a.screen
        widget = a.resolve(gesture.targets[0]) if gesture.targets else None
        before = self._capture_pair()
        response_a = a.apply(gesture)
        response_b = b.apply(gesture)
        after = self._capture_pair()

        common = {
            "app": a.app.name,
            "screen": screen,
            "widget": widget,
            "gesture": gesture.kind,
            "step": step,
            "strategy": self.strategy.variant,
            "seed": self.strategy.seed,
            "device": a.device.id,
            "reference": b.device.id,
            "response_a": response_a.kind,
            "response_b": response_b.kind,
        }
        if response_a.kind == ResponseKind.crash:
            self._report(BugKind.crash, common, before, after)
        if before is not None and after is not None:
            assessment = assess_operation(
                before[0], after[0], before[1], after[1], self.threshold, self.metric, (screen, screen)
            )
            if assessment.verdict == Verdict.compatibility_bug:
                similarities = {
                    "similarity_a": assessment.similarity_a,
                    "similarity_b": assessment.similarity_b,
                }
                self._report(BugKind.compatibility, common | similarities, before, after)

        if (a.screen, a.field_values, a.keyboard_visible) != (b.screen, b.field_values, b.keyboard_visible):
            b.sync_from(a)
        return response_a

    def sorted_reports(self) -> list[BugReport]:
        return sorted(self.reports.values(), key=lambda r: (r.step, r.kind))


class ComparisonResult(NamedTuple):
    reports: list[BugReport]
    trace: ExplorationTrace
    metrics: RunMetrics


def run_comparison_session(
    app: AppModel,
    device: DeviceProfile,
    reference: DeviceProfile,
    strategy: Strategy,
    budget: Budget,
    out_dir: str | Path,
    arm: ArmConfig | None = None,
    rig: CameraRig | None = None,
    scene: SceneConfig | None = None,
    perception: Perception = Perception.camera,
    intrinsics: CameraIntrinsics | None = None,
    threshold: float = RESPONSE_THRESHOLD,
    metric: SimilarityMetric = SimilarityMetric.block,
    library: GlyphLibrary | None = None,
) -> ComparisonResult:
    """
    Explore `app` on `device` and replay each operation on `reference`.

    Evidence images go under `out_dir/evidence`.

    Raises:
        ProfileMismatchError: the devices differ in screen size or resolution.
    """
    check_profiles(device, reference)
    session = AppSession(app, device, rig, scene, seed=strategy.seed, library=library)
    mirror = AppSession(app, reference, rig, scene, seed=strategy.seed, library=library)
    explorer = ComparisonExplorer(
        session, mirror, strategy, out_dir, arm, perception, intrinsics, threshold, metric, library
    )
    trace, metrics = explorer.run(budget)
    reports = explorer.sorted_reports()
    log.debug(f"Comparison of '{device.id}' against '{reference.id}' on '{app.name}': {len(reports)} report(s)")
    return ComparisonResult(reports, trace, metrics)
