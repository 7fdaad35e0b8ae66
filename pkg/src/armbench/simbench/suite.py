"""
The shipped benchmark suite: a manifest of seeded app descriptions expanded
deterministically into app models.

Every generated screen has a title, rows of buttons, icons, labels and input
fields, and (except the first) a back icon. Transitions form a spanning tree
from the initial screen plus seeded extra edges. Mask faults are buttons
placed where a punch-hole camera sits, on screens chosen by the seed.
"""

import logging
import math
from typing import Literal

import numpy as np
from pydantic import Field

from armbench.documents import BenchBaseModel
from armbench.geometry import Rect
from armbench.kinematics import GestureKind
from armbench.simbench.models import (
    AppModel,
    CrashTrigger,
    ScreenSpec,
    Transition,
    WidgetSpec,
)
from armbench.vision.glyphs import default_library
from armbench.vision.widgets import WidgetKind

log = logging.getLogger("armbench.simbench")

WORDS = (
    "home", "settings", "profile", "search", "notes", "save", "cancel", "share",
    "edit", "delete", "archive", "inbox", "music", "photos", "camera", "weather",
    "alarm", "timer", "maps", "route", "help", "about", "account", "login",
    "cart", "order", "pay", "news", "sports", "video", "play", "pause", "next",
    "menu", "filter", "sort", "report", "calendar", "event", "contact",
    "message", "send", "reply", "library", "friends", "games", "store", "wallet",
    "travel", "recipes", "fitness", "sleep", "budget", "tasks", "upload", "sync",
)

TOP = 50
MARGIN = 8
ROW_GAP = 20
COLUMN_GAP = 20
BACK_ICON = Rect(x=8, y=8, width=32, height=32)
FAULT_REGION = Rect(x=105, y=9, width=60, height=30)


class SuiteApp(BenchBaseModel):
    name: str
    seed: int
    screens: int = Field(ge=6, le=15)
    crash_triggers: int = Field(default=2, ge=0)
    mask_faults: int = Field(default=3, ge=0)
    widgets_per_screen: tuple[int, int] = (8, 14)


class SuiteManifest(BenchBaseModel):
    schema_version: Literal[1] = 1
    resolution: tuple[int, int] = (270, 540)
    fault_region: Rect = FAULT_REGION
    apps: list[SuiteApp]


def _label(rng: np.random.Generator, words: int) -> str:
    return " ".join(str(w) for w in rng.choice(WORDS, size=words, replace=False))


def _next_shape(rng: np.random.Generator) -> tuple[str, int, int, str]:
    """A widget before placement: (kind tag, width, height, text)."""
    library = default_library()
    roll = rng.uniform()
    if roll < 0.35:
        h = int(rng.integers(24, 45))
        w = int(rng.integers(max(h, 40), min(math.floor(2.5 * h), 110) + 1))
        return ("button", w, h, "")
    if roll < 0.55:
        s = int(rng.integers(30, 41))
        return ("icon", s, s, "")
    if roll < 0.85:
        text = _label(rng, int(rng.integers(1, 3)))
        _, w, h = library.ink_extent(text)
        return ("text", w, h, text)
    h = int(rng.integers(28, 35))
    w = int(rng.integers(math.ceil(3.5 * h), 201))
    return ("field", w, h, "")


def _layout_screen(rng: np.random.Generator, n_widgets: int, resolution: tuple[int, int]) -> list[WidgetSpec]:
    rw, rh = resolution
    library = default_library()
    title = _label(rng, 2)
    _, _, title_h = library.ink_extent(title)
    widgets = [WidgetSpec(id="title", kind=WidgetKind.text, text=title, position=(MARGIN, TOP))]
    counters = {"button": 0, "icon": 0, "text": 0, "field": 0}
    prefix = {"button": "b", "icon": "i", "text": "t", "field": "f"}
    y = TOP + title_h + ROW_GAP
    pending = None
    while len(widgets) < n_widgets:
        row = []
        x = MARGIN
        per_row = int(rng.integers(1, 4))
        while len(row) < per_row and len(widgets) + len(row) < n_widgets:
            shape = pending or _next_shape(rng)
            pending = None
            tag, w, h, text = shape
            if row and x + w > rw - MARGIN:
                pending = shape
                break
            row.append((tag, x, w, h, text))
            x += w + COLUMN_GAP
        row_h = max(r[3] for r in row)
        if y + row_h > rh - MARGIN:
            break
        for tag, x0, w, h, text in row:
            y0 = y + (row_h - h) // 2
            counters[tag] += 1
            wid = f"{prefix[tag]}{counters[tag]}"
            if tag == "text":
                widgets.append(WidgetSpec(id=wid, kind=WidgetKind.text, text=text, position=(x0, y0), clickable=False))
            else:
                widgets.append(
                    WidgetSpec(id=wid, bounds=Rect(x=x0, y=y0, width=w, height=h), input=tag == "field")
                )
        y += row_h + ROW_GAP
    return widgets


def _tappable(screen: ScreenSpec) -> list[str]:
    return [
        w.id
        for w in screen.widgets
        if w.kind == WidgetKind.nontext and not w.input and w.id not in ("back", "fault")
    ]


def generate_app(entry: SuiteApp, resolution: tuple[int, int] = (270, 540), fault_region: Rect = FAULT_REGION) -> AppModel:
    """Expand one suite entry; the same entry always yields the same model."""
    rng = np.random.default_rng(entry.seed)
    lo, hi = entry.widgets_per_screen
    screens: list[ScreenSpec] = []
    for i in range(entry.screens):
        widgets = _layout_screen(rng, int(rng.integers(lo, hi + 1)), resolution)
        if i > 0:
            widgets.insert(0, WidgetSpec(id="back", bounds=BACK_ICON))
        screens.append(ScreenSpec(id=f"s{i:02d}", widgets=widgets))

    transitions: list[Transition] = []
    used: set[tuple[str, str | None, GestureKind]] = set()

    def link(screen: str, widget: str | None, gesture: GestureKind, target: str) -> None:
        used.add((screen, widget, gesture))
        transitions.append(Transition(screen=screen, widget=widget, gesture=gesture, target=target))

    ids = [s.id for s in screens]

    def free_clicks(p: int) -> list[str]:
        return [w for w in _tappable(screens[p]) if (ids[p], w, GestureKind.click) not in used]

    for i in range(1, len(screens)):
        candidates = [p for p in range(i) if free_clicks(p)]
        if candidates:
            parent = int(rng.choice(candidates))
            link(ids[parent], str(rng.choice(free_clicks(parent))), GestureKind.click, ids[i])
        else:
            parent = next(p for p in range(i) if (ids[p], None, GestureKind.scroll) not in used)
            link(ids[parent], None, GestureKind.scroll, ids[i])
        link(ids[i], "back", GestureKind.click, ids[parent])

    def other(screen: str) -> str:
        return str(rng.choice([s for s in ids if s != screen]))

    gestures = list(GestureKind)
    for s in screens:
        for w in _tappable(s):
            if rng.uniform() < 0.5:
                g = GestureKind.click if rng.uniform() < 0.6 else gestures[int(rng.integers(1, 4))]
                if (s.id, w, g) not in used:
                    link(s.id, w, g, other(s.id))
        for w in s.widgets:
            if w.input and rng.uniform() < 0.3:
                link(s.id, w.id, GestureKind.input, other(s.id))
        if (s.id, None, GestureKind.scroll) not in used and rng.uniform() < 0.3:
            link(s.id, None, GestureKind.scroll, other(s.id))

    fault_screens = rng.choice(len(screens), size=min(entry.mask_faults, len(screens)), replace=False)
    for idx in sorted(int(i) for i in fault_screens):
        s = screens[idx]
        s.widgets.append(WidgetSpec(id="fault", bounds=fault_region))
        link(s.id, "fault", GestureKind.click, other(s.id))

    crash_triggers: list[CrashTrigger] = []
    options = [
        (s.id, w, g)
        for s in screens
        for w in _tappable(s)
        for g in (GestureKind.double_click, GestureKind.long_click)
        if (s.id, w, g) not in used
    ]
    picks = rng.choice(len(options), size=min(entry.crash_triggers, len(options)), replace=False)
    for k in sorted(int(p) for p in picks):
        s_id, w, g = options[k]
        crash_triggers.append(CrashTrigger(screen=s_id, widget=w, gesture=g))

    app = AppModel(
        name=entry.name,
        resolution=resolution,
        initial=ids[0],
        screens=screens,
        transitions=transitions,
        crash_triggers=crash_triggers,
    )
    log.debug(
        f"Generated app '{entry.name}': {len(screens)} screens, {app.widget_count()} widgets, {len(transitions)} transitions"
    )
    return app
