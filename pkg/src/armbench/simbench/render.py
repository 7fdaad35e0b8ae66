"""
Rasterization of app screens and the soft keyboard.

Screens are grayscale: a light background, non-text widgets as filled
rectangles with a dark two-pixel border, text stamped from the glyph library.
Cutouts of an irregular device are painted black last, over everything.
"""

import logging

import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict

from armbench.geometry import Point, Rect
from armbench.simbench.models import AppModel, DeviceProfile, ScreenSpec
from armbench.vision.glyphs import GlyphLibrary, default_library
from armbench.vision.image import Image
from armbench.vision.widgets import Widget, WidgetKind

log = logging.getLogger("armbench.simbench")

BACKGROUND = 235
WIDGET_FILL = 215
BORDER = 70
BORDER_WIDTH = 2
INK = 30
MASK = 0
KEYBOARD_PANEL = 205
KEY_FACE = 235
KEYBOARD_FRACTION = 0.4
KEY_ROWS = ("qwertyuiop", "asdfghjkl", "zxcvbnm")
_ROW_OFFSETS = (0.0, 0.5, 1.5)
_SPACE_SPAN = (2.5, 7.5)
_KEY_INSET = 2
_FIELD_PADDING = 4


class SoftKeyboard(BaseModel):
    panel: Rect
    keys: dict[str, Rect]
    visible: bool = True

    model_config = ConfigDict(frozen=True)

    def centers(self) -> dict[str, Point]:
        return {ch: rect.center for ch, rect in self.keys.items()}

    def key_at(self, p: Point) -> str | None:
        for ch, rect in self.keys.items():
            if rect.contains_point(p):
                return ch
        return None


def show_keyboard(device: DeviceProfile) -> SoftKeyboard:
    """QWERTY letters and a space bar over the lower part of the screen."""
    rw, rh = device.resolution
    top = rh - round(KEYBOARD_FRACTION * rh)
    row_h = (rh - top) / 4.0
    key_w = rw / 10.0

    def key_rect(x0: float, x1: float, row: int) -> Rect:
        y0 = top + row * row_h
        return Rect.from_bounds(
            round(x0) + _KEY_INSET,
            round(y0) + _KEY_INSET,
            round(x1) - _KEY_INSET,
            round(y0 + row_h) - _KEY_INSET,
        )

    keys: dict[str, Rect] = {}
    for row, (letters, offset) in enumerate(zip(KEY_ROWS, _ROW_OFFSETS, strict=True)):
        for i, ch in enumerate(letters):
            x0 = (offset + i) * key_w
            keys[ch] = key_rect(x0, x0 + key_w, row)
    keys[" "] = key_rect(_SPACE_SPAN[0] * key_w, _SPACE_SPAN[1] * key_w, 3)
    return SoftKeyboard(panel=Rect.from_bounds(0, top, rw, rh), keys=keys)


def _stamp(canvas: Image, mask: npt.NDArray[np.bool_], x: int, y: int, value: int) -> None:
    h, w = canvas.shape
    mh, mw = mask.shape
    x0, y0 = max(x, 0), max(y, 0)
    x1, y1 = min(x + mw, w), min(y + mh, h)
    if x0 >= x1 or y0 >= y1:
        return
    region = canvas[y0:y1, x0:x1]
    region[mask[y0 - y : y1 - y, x0 - x : x1 - x]] = value


def _draw_box(canvas: Image, r: Rect, fill: int) -> None:
    canvas[r.y : r.y1, r.x : r.x1] = BORDER
    b = BORDER_WIDTH
    if r.width > 2 * b and r.height > 2 * b:
        canvas[r.y + b : r.y1 - b, r.x + b : r.x1 - b] = fill


def _draw_text(canvas: Image, text: str, x: int, y: int, library: GlyphLibrary) -> Rect | None:
    """Stamp `text` with its ink box's top-left corner at (x, y); returns the ink box."""
    top, width, height = library.ink_extent(text)
    if width == 0:
        return None
    _stamp(canvas, library.layout(text), x, y - top, INK)
    return Rect(x=x, y=y, width=width, height=height)


def _field_text(value: str, field: Rect, library: GlyphLibrary) -> str:
    """The longest tail of `value` that fits inside the field's padding."""
    room = field.width - 2 * _FIELD_PADDING
    shown = value.strip()
    while shown and library.ink_extent(shown)[1] > room:
        shown = shown[1:].lstrip()
    return shown


def render_screen(
    app: AppModel,
    screen_id: str,
    device: DeviceProfile,
    keyboard: SoftKeyboard | None = None,
    field_values: dict[str, str] | None = None,
    library: GlyphLibrary | None = None,
) -> tuple[Image, list[Widget]]:
    """
    Pixels of one screen and the ground-truth widgets it shows.

    The ground truth ignores the device cutouts: a widget under the mask is
    still listed. Widgets hidden by a visible keyboard are not.

    Raises:
        UnknownScreenError: `screen_id` is not a screen of `app`.
    """
    library = library or default_library()
    screen: ScreenSpec = app.screen(screen_id)
    rw, rh = device.resolution
    canvas = np.full((rh, rw), BACKGROUND, dtype=np.uint8)
    truth: list[Widget] = []
    values = field_values or {}

    for widget in screen.widgets:
        if widget.kind == WidgetKind.text:
            _draw_text(canvas, widget.text or "", widget.rect.x, widget.rect.y, library)
        else:
            _draw_box(canvas, widget.rect, WIDGET_FILL)
        truth.append(widget.as_widget())
        shown = _field_text(values.get(widget.id, ""), widget.rect, library) if widget.input else ""
        if shown:
            _, width, height = library.ink_extent(shown)
            y = widget.rect.y + (widget.rect.height - height) // 2
            box = _draw_text(canvas, shown, widget.rect.x + _FIELD_PADDING, y, library)
            if box is not None:
                truth.append(Widget(kind=WidgetKind.text, bounds=box, text=shown))

    if keyboard is not None and keyboard.visible:
        panel = keyboard.panel
        truth = [w for w in truth if w.bounds.intersection_area(panel) == 0]
        canvas[panel.y : panel.y1, panel.x : panel.x1] = KEYBOARD_PANEL
        for ch, rect in keyboard.keys.items():
            _draw_box(canvas, rect, KEY_FACE)
            truth.append(Widget(kind=WidgetKind.nontext, bounds=rect))
            if ch == " ":
                continue
            _, width, height = library.ink_extent(ch)
            cx, cy = rect.center
            box = _draw_text(canvas, ch, round(cx - width / 2), round(cy - height / 2), library)
            if box is not None:
                truth.append(Widget(kind=WidgetKind.text, bounds=box, text=ch))

    if device.is_irregular:
        canvas[device.mask_raster()] = MASK
    return canvas, sorted(truth, key=Widget.sort_key)
