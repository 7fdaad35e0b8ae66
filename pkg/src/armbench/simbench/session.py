"""
Operation semantics and the single-owner app session.
"""

import logging

import numpy as np

from armbench.errors import ModelError
from armbench.geometry import Point, Rect
from armbench.kinematics import CompoundGesture, GestureKind, world_to_screen
from armbench.simbench.models import AppModel, DeviceProfile, Response, ResponseKind
from armbench.simbench.photo import CameraRig, SceneConfig, SyntheticPhoto, synthesize_photo
from armbench.simbench.render import SoftKeyboard, render_screen, show_keyboard
from armbench.vision.glyphs import GlyphLibrary, default_library
from armbench.vision.image import Image
from armbench.vision.widgets import Widget

log = logging.getLogger("armbench.simbench")

_NONE = Response(kind=ResponseKind.none)


def apply_operation(
    app: AppModel, current: str, device: DeviceProfile, g: CompoundGesture
) -> Response:
    """
    What the app does when `g` lands on screen `current` of `device`.

    The touch point is the gesture's first target. A touch inside the device's
    cutout is swallowed; otherwise the topmost widget under it decides, crash
    triggers first, then transitions. Scroll acts on the screen itself and
    input only on input widgets.

    Raises:
        UnknownScreenError: `current` is not a screen of `app`.
    """
    screen = app.screen(current)
    if g.kind == GestureKind.scroll:
        if app.crashes_on(current, None, g.kind):
            return Response(kind=ResponseKind.crash)
        target = app.transition_for(current, None, g.kind)
        if target is None:
            return _NONE
        return Response(kind=ResponseKind.transition, next_screen=target)

    p = g.targets[0]
    if device.in_mask(p):
        return _NONE
    widget = screen.widget_at(p)
    if widget is None:
        return _NONE
    if g.kind == GestureKind.input and not widget.input:
        return Response(kind=ResponseKind.none, widget=widget.id)
    if app.crashes_on(current, widget.id, g.kind):
        return Response(kind=ResponseKind.crash, widget=widget.id)
    target = app.transition_for(current, widget.id, g.kind)
    if target is None:
        return Response(kind=ResponseKind.none, widget=widget.id)
    return Response(kind=ResponseKind.transition, next_screen=target, widget=widget.id)


class AppSession:
    """
    One app running on one device, photographed by one camera.

    Holds the current screen, typed field values, keyboard state and the
    noise generator; a crash resets the app to its initial screen.
    """

    def __init__(
        self,
        app: AppModel,
        device: DeviceProfile,
        rig: CameraRig | None = None,
        scene: SceneConfig | None = None,
        seed: int = 0,
        library: GlyphLibrary | None = None,
    ):
        if tuple(app.resolution) != tuple(device.resolution):
            raise ModelError(
                f"App '{app.name}' is laid out for {app.resolution} but device '{device.id}' has {device.resolution}"
            )
        self.app = app
        self.device = device
        self.rig = rig or CameraRig()
        self.scene = scene or SceneConfig()
        self.library = library or default_library()
        self.rng = np.random.default_rng(seed)
        self.crashes = 0
        self._keyboard = show_keyboard(device)
        self._quad = device.true_quad()
        self.reset()

    def reset(self) -> None:
        self.screen = self.app.initial
        self.field_values: dict[tuple[str, str], str] = {}
        self.focused: str | None = None
        self.keyboard_visible = False

    @property
    def keyboard(self) -> SoftKeyboard:
        return self._keyboard.model_copy(update={"visible": self.keyboard_visible})

    def render(self) -> tuple[Image, list[Widget]]:
        return render_screen(
            self.app,
            self.screen,
            self.device,
            keyboard=self.keyboard,
            field_values={w: v for (s, w), v in self.field_values.items() if s == self.screen},
            library=self.library,
        )

    def photograph(self) -> SyntheticPhoto:
        image, _ = self.render()
        return synthesize_photo(
            image,
            self.device,
            self.rig.intrinsics,
            self.rig.pose(self.device),
            self.scene,
            self.rig.resolution,
            self.rng,
        )

    def sync_from(self, other: "AppSession") -> None:
        """Put this session in the same app state as `other`."""
        self.screen = other.screen
        self.field_values = dict(other.field_values)
        self.focused = other.focused
        self.keyboard_visible = other.keyboard_visible

    def to_screen(self, world: Point) -> Point:
        """Where a touch at world point `world` (mm) lands on the screen, in pixels."""
        return world_to_screen(world, self._quad)

    def resolve(self, p: Point) -> str | None:
        """Id of the widget a touch at screen pixel `p` reaches."""
        if self.keyboard_visible and self._keyboard.panel.contains_point(p):
            key = self._keyboard.key_at(p)
            return None if key is None else f"key:{key}"
        widget = self.app.screen(self.screen).widget_at(p)
        return None if widget is None else widget.id

    def visible_widgets(self) -> list[tuple[str, Rect]]:
        """
        Ids and bounds of everything a touch can reach right now, keyboard keys
        included; widgets running under the keyboard keep their uncovered part.
        """
        boxes = [(w.id, w.rect) for w in self.app.screen(self.screen).widgets]
        if self.keyboard_visible:
            top = self._keyboard.panel.y
            boxes = [(i, r if r.y1 <= top else Rect.from_bounds(r.x, r.y, r.x1, top)) for i, r in boxes if r.y < top]
            boxes += [(f"key:{ch}", r) for ch, r in self._keyboard.keys.items()]
        return boxes

    def dismiss_keyboard(self) -> None:
        """Hide the keyboard and drop the focus, as a touch beside the keyboard does."""
        self.focused = None
        self.keyboard_visible = False

    def apply(self, g: CompoundGesture) -> Response:
        if g.kind != GestureKind.scroll:
            p = g.targets[0]
            # the cutout does not register touches at all
            if self.device.in_mask(p):
                return _NONE
            if self.keyboard_visible and self._keyboard.panel.contains_point(p):
                return self._press_key(p, g)
        self.dismiss_keyboard()

        response = apply_operation(self.app, self.screen, self.device, g)
        match response.kind:
            case ResponseKind.crash:
                self.crashes += 1
                log.debug(f"App '{self.app.name}' crashed on {self.screen}/{response.widget} by {g.kind}")
                self.reset()
            case ResponseKind.transition:
                self._record_input(g, response.widget)
                self.screen = response.next_screen or self.screen
                self.focused = None
                self.keyboard_visible = False
            case ResponseKind.none:
                self._record_input(g, response.widget)
        return response

    def _record_input(self, g: CompoundGesture, widget_id: str | None) -> None:
        if widget_id is None:
            return
        widget = self.app.screen(self.screen).widget(widget_id)
        if not widget.input or g.kind not in (GestureKind.click, GestureKind.input):
            return
        self.focused = widget_id
        self.keyboard_visible = True
        if g.kind == GestureKind.input:
            self.field_values[(self.screen, widget_id)] = g.payload or ""

    def _press_key(self, p: Point, g: CompoundGesture) -> Response:
        key = self._keyboard.key_at(p)
        if key is None or g.kind != GestureKind.click:
            return Response(kind=ResponseKind.none)
        if self.focused is not None:
            slot = (self.screen, self.focused)
            self.field_values[slot] = self.field_values.get(slot, "") + key
        return Response(kind=ResponseKind.none, widget=f"key:{key}")
