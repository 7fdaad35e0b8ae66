"""
Documents describing the simulated world: device profiles and app models.

A device profile is the physical side (screen size, resolution, where the
device lies in the arm's base frame, camera cutouts). An app model is a GUI
state machine: screens of ground-truth widgets, transitions between them and
the gestures that crash the app.
"""

import logging
import math
from collections import deque
from enum import StrEnum
from typing import Literal

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, model_validator

from armbench.camera import Homography, ScreenQuad
from armbench.documents import BenchBaseModel
from armbench.errors import UnknownScreenError
from armbench.geometry import Point, Rect
from armbench.kinematics import GestureKind
from armbench.units import Millimeters, Radians
from armbench.vision.glyphs import default_library
from armbench.vision.widgets import Widget, WidgetKind

log = logging.getLogger("armbench.simbench")

SCHEMA_VERSION = 1


class MaskShape(StrEnum):
    rect = "rect"
    ellipse = "ellipse"


class MaskRegion(BenchBaseModel):
    shape: MaskShape = MaskShape.rect
    bounds: Rect

    def contains(self, p: Point) -> bool:
        b = self.bounds
        if self.shape == MaskShape.rect:
            return b.contains_point(p)
        cx, cy = b.center
        dx = (p[0] - cx) / (b.width / 2.0)
        dy = (p[1] - cy) / (b.height / 2.0)
        return dx * dx + dy * dy <= 1.0

    def raster(self, width: int, height: int) -> npt.NDArray[np.bool_]:
        """Pixels whose centre lies in the region."""
        xs, ys = np.meshgrid(np.arange(width) + 0.5, np.arange(height) + 0.5)
        b = self.bounds
        if self.shape == MaskShape.rect:
            return (xs >= b.x) & (xs < b.x1) & (ys >= b.y) & (ys < b.y1)
        cx, cy = b.center
        return ((xs - cx) / (b.width / 2.0)) ** 2 + ((ys - cy) / (b.height / 2.0)) ** 2 <= 1.0


class Placement(BenchBaseModel):
    """Screen centre in the arm base frame and the screen's in-plane rotation."""

    x: Millimeters = 0.0
    y: Millimeters = 150.0
    deflection: Radians = 0.0


class DeviceProfile(BenchBaseModel):
    schema_version: Literal[1] = SCHEMA_VERSION
    id: str
    screen_size: tuple[Millimeters, Millimeters] = (54.0, 108.0)
    resolution: tuple[int, int] = (270, 540)
    placement: Placement = Field(default_factory=Placement)
    irregular_mask: list[MaskRegion] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_geometry(self):
        (sw, sh), (rw, rh) = self.screen_size, self.resolution
        if sw <= 0 or sh <= 0 or rw < 1 or rh < 1:
            raise ValueError(f"Device '{self.id}' needs a positive screen size and resolution")
        if abs((sw / sh) / (rw / rh) - 1.0) > 0.01:
            raise ValueError(
                f"Device '{self.id}': screen aspect {sw}x{sh} mm does not match resolution {rw}x{rh} px"
            )
        for region in self.irregular_mask:
            if not region.bounds.within(rw, rh):
                raise ValueError(
                    f"Device '{self.id}': mask region {region.bounds.as_list()} leaves the {rw}x{rh} screen"
                )
        return self

    @property
    def is_irregular(self) -> bool:
        return bool(self.irregular_mask)

    @property
    def mm_per_px(self) -> float:
        return self.screen_size[0] / self.resolution[0]

    def regular_twin(self) -> "DeviceProfile":
        """The same device without its cutouts: the reference for comparison runs."""
        return self.model_copy(update={"id": f"{self.id}-regular", "irregular_mask": []})

    def in_mask(self, p: Point) -> bool:
        return any(region.contains(p) for region in self.irregular_mask)

    def mask_raster(self) -> npt.NDArray[np.bool_]:
        rw, rh = self.resolution
        mask = np.zeros((rh, rw), dtype=bool)
        for region in self.irregular_mask:
            mask |= region.raster(rw, rh)
        return mask

    def true_quad(self) -> ScreenQuad:
        """Ground-truth screen mapping; its corners are world-plane millimeters."""
        scale = self.mm_per_px
        plane = self.screen_to_plane()
        rw, rh = self.resolution
        corners = plane.apply([[0, 0], [rw, 0], [rw, rh], [0, rh]])
        return ScreenQuad(
            corners=tuple((float(x), float(y)) for x, y in corners),
            deflection_angle=self.placement.deflection,
            scale=scale,
            origin=(float(corners[0, 0]), float(corners[0, 1])),
            rectified_size=self.resolution,
        )

    def screen_to_plane(self) -> Homography:
        """Screen pixels to the world plane (mm): scale, rotate about the centre, place."""
        s = self.mm_per_px
        c, n = math.cos(self.placement.deflection), math.sin(self.placement.deflection)
        rw, rh = self.resolution
        rotate = np.array([[c * s, -n * s, 0.0], [n * s, c * s, 0.0], [0.0, 0.0, 1.0]])
        centre = np.array([[1.0, 0.0, -rw / 2.0], [0.0, 1.0, -rh / 2.0], [0.0, 0.0, 1.0]])
        place = np.array(
            [[1.0, 0.0, self.placement.x], [0.0, 1.0, self.placement.y], [0.0, 0.0, 1.0]]
        )
        return Homography(matrix=place @ rotate @ centre)


class WidgetSpec(BenchBaseModel):
    """
    A ground-truth widget. Non-text widgets give `bounds`; text widgets give
    the top-left `position` of their ink and get their bounds from the glyph
    layout of `text`.
    """

    id: str
    kind: WidgetKind = WidgetKind.nontext
    bounds: Rect | None = None
    position: tuple[int, int] | None = None
    text: str | None = None
    clickable: bool = True
    input: bool = False

    @model_validator(mode="after")
    def _check_kind(self):
        if self.kind == WidgetKind.text:
            if not self.text or self.position is None:
                raise ValueError(f"Text widget '{self.id}' needs text and a position")
            if self.input:
                raise ValueError(f"Text widget '{self.id}' cannot take input")
            _, width, height = default_library().ink_extent(self.text)
            x, y = self.position
            laid_out = Rect(x=x, y=y, width=width, height=height)
            if self.bounds is not None and self.bounds != laid_out:
                raise ValueError(
                    f"Text widget '{self.id}' declares bounds {self.bounds.as_list()} but its text lays out at {laid_out.as_list()}"
                )
            self.bounds = laid_out
        else:
            if self.bounds is None or self.text is not None or self.position is not None:
                raise ValueError(f"Non-text widget '{self.id}' needs bounds and no text or position")
        return self

    @property
    def rect(self) -> Rect:
        assert self.bounds is not None
        return self.bounds

    def as_widget(self) -> Widget:
        return Widget(kind=self.kind, bounds=self.rect, text=self.text, confidence=1.0, input=self.input)


class ScreenSpec(BenchBaseModel):
    id: str
    widgets: list[WidgetSpec] = Field(default_factory=list)

    def widget(self, widget_id: str) -> WidgetSpec:
        for w in self.widgets:
            if w.id == widget_id:
                return w
        raise KeyError(f"Screen '{self.id}' has no widget '{widget_id}'")

    def widget_at(self, p: Point) -> WidgetSpec | None:
        """Topmost widget under `p`: the last one in document order."""
        for w in reversed(self.widgets):
            if w.rect.contains_point(p):
                return w
        return None


class Transition(BenchBaseModel):
    screen: str
    widget: str | None = None
    gesture: GestureKind
    target: str


class CrashTrigger(BenchBaseModel):
    screen: str
    widget: str | None = None
    gesture: GestureKind


class AppModel(BenchBaseModel):
    schema_version: Literal[1] = SCHEMA_VERSION
    name: str
    resolution: tuple[int, int] = (270, 540)
    initial: str
    screens: list[ScreenSpec]
    transitions: list[Transition] = Field(default_factory=list)
    crash_triggers: list[CrashTrigger] = Field(default_factory=list)

    @model_validator(mode="after")
    def _check_model(self):
        ids = [s.id for s in self.screens]
        if len(set(ids)) != len(ids):
            raise ValueError(f"App '{self.name}' has duplicate screen ids")
        screens = {s.id: s for s in self.screens}
        if self.initial not in screens:
            raise ValueError(f"App '{self.name}': initial screen '{self.initial}' does not exist")
        rw, rh = self.resolution
        for s in self.screens:
            widget_ids = [w.id for w in s.widgets]
            if len(set(widget_ids)) != len(widget_ids):
                raise ValueError(f"Screen '{s.id}' of app '{self.name}' has duplicate widget ids")
            for w in s.widgets:
                if not w.rect.within(rw, rh):
                    raise ValueError(
                        f"Widget '{s.id}/{w.id}' at {w.rect.as_list()} leaves the {rw}x{rh} screen"
                    )

        def check_ref(kind: str, screen: str, widget: str | None, gesture: GestureKind) -> None:
            if screen not in screens:
                raise ValueError(f"{kind} refers to unknown screen '{screen}'")
            if (widget is None) != (gesture == GestureKind.scroll):
                raise ValueError(f"{kind} on '{screen}': scroll is screen-level, other gestures need a widget")
            if widget is not None:
                found = next((w for w in screens[screen].widgets if w.id == widget), None)
                if found is None:
                    raise ValueError(f"{kind} refers to unknown widget '{screen}/{widget}'")
                if gesture == GestureKind.input and not found.input:
                    raise ValueError(f"{kind} inputs into '{screen}/{widget}', which takes no input")

        keys = set()
        for t in self.transitions:
            check_ref("Transition", t.screen, t.widget, t.gesture)
            if t.target not in screens:
                raise ValueError(f"Transition from '{t.screen}' targets unknown screen '{t.target}'")
            key = (t.screen, t.widget, t.gesture)
            if key in keys:
                raise ValueError(f"Duplicate transition for {key}")
            keys.add(key)
        for c in self.crash_triggers:
            check_ref("Crash trigger", c.screen, c.widget, c.gesture)

        unreachable = set(screens) - self.reachable_screens()
        if unreachable:
            raise ValueError(
                f"App '{self.name}': screens {sorted(unreachable)} are unreachable from '{self.initial}'"
            )
        return self

    def reachable_screens(self) -> set[str]:
        seen = {self.initial}
        queue = deque([self.initial])
        edges: dict[str, list[str]] = {}
        for t in self.transitions:
            edges.setdefault(t.screen, []).append(t.target)
        while queue:
            for nxt in edges.get(queue.popleft(), []):
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        return seen

    def screen(self, screen_id: str) -> ScreenSpec:
        for s in self.screens:
            if s.id == screen_id:
                return s
        raise UnknownScreenError(f"App '{self.name}' has no screen '{screen_id}'")

    def transition_for(self, screen: str, widget: str | None, gesture: GestureKind) -> str | None:
        for t in self.transitions:
            if t.screen == screen and t.widget == widget and t.gesture == gesture:
                return t.target
        return None

    def crashes_on(self, screen: str, widget: str | None, gesture: GestureKind) -> bool:
        return any(
            c.screen == screen and c.widget == widget and c.gesture == gesture
            for c in self.crash_triggers
        )

    def widget_count(self) -> int:
        return sum(len(s.widgets) for s in self.screens)

    def fault_widgets(self, device: DeviceProfile) -> list[tuple[str, str]]:
        """(screen, widget) pairs whose centre the device's cutouts swallow and that lead somewhere."""
        faults = []
        for s in self.screens:
            for w in s.widgets:
                if not device.in_mask(w.rect.center):
                    continue
                if any(t.screen == s.id and t.widget == w.id for t in self.transitions):
                    faults.append((s.id, w.id))
        return faults


class ResponseKind(StrEnum):
    transition = "transition"
    none = "none"
    crash = "crash"


class Response(BaseModel):
    kind: ResponseKind
    next_screen: str | None = None
    widget: str | None = None

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check_next(self):
        if (self.kind == ResponseKind.transition) != (self.next_screen is not None):
            raise ValueError(f"A {self.kind} response cannot have next screen {self.next_screen!r}")
        return self
