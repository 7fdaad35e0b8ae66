"""
Perceived widgets: contour-based non-text extraction and the merge with text.
"""

import logging
from collections.abc import Iterable
from enum import StrEnum

import cv2
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from armbench.geometry import Rect
from armbench.vision.edges import canny, morph_close
from armbench.vision.image import Image, as_gray

log = logging.getLogger("armbench.vision")

NESTING_THRESHOLD = 0.85
OVERSIZE_FRACTION = 0.9
DEDUP_IOU = 0.7
MIN_SIDE = 4


class WidgetKind(StrEnum):
    text = "text"
    nontext = "nontext"


class Widget(BaseModel):
    kind: WidgetKind
    bounds: Rect
    text: str | None = None
    confidence: float = Field(default=1.0, ge=0.0, le=1.0)
    input: bool = False

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check_text(self):
        if (self.kind == WidgetKind.text) != (self.text is not None):
            raise ValueError(f"{self.kind} widget at {self.bounds.as_list()} has text {self.text!r}")
        return self

    @property
    def center(self) -> tuple[float, float]:
        return self.bounds.center

    def sort_key(self) -> tuple:
        b = self.bounds
        return (b.y, b.x, b.height, b.width, str(self.kind), self.text or "")


def looks_like_input(bounds: Rect) -> bool:
    """Text-field shape: wide, and about one line of text tall."""
    return bounds.width >= 3 * bounds.height and 20 <= bounds.height <= 44


def eliminate_nesting(candidates: list[Rect], threshold: float = NESTING_THRESHOLD) -> list[Rect]:
    """
    Replace nesting candidates by the candidates they nest.

    Candidates are visited largest first; an outer rectangle goes when some
    rectangle inside it covers more than `threshold` of its area. Every pass
    removes at least one candidate or stops.
    """
    remaining = sorted(set(candidates), key=lambda r: (-r.area, r.y, r.x, r.height, r.width))
    while True:
        removed = None
        for outer in remaining:
            for inner in remaining:
                if inner is outer or inner.area > outer.area:
                    continue
                if inner.containment_in(outer) >= 1.0 and inner.area / outer.area > threshold:
                    removed = outer
                    break
            if removed is not None:
                break
        if removed is None:
            return remaining
        remaining.remove(removed)


def _contour_rects(closed: np.ndarray) -> list[Rect]:
    contours, hierarchy = cv2.findContours(closed, cv2.RETR_TREE, cv2.CHAIN_APPROX_SIMPLE)
    if hierarchy is None:
        return []
    parents = hierarchy[0][:, 3]
    rects = []
    for i, contour in enumerate(contours):
        depth, p = 0, parents[i]
        while p >= 0:
            depth += 1
            p = parents[p]
        # odd depths are the inner sides of stroked outlines
        if depth % 2:
            continue
        x, y, w, h = cv2.boundingRect(contour)
        if w < MIN_SIDE or h < MIN_SIDE:
            continue
        rects.append(Rect(x=x, y=y, width=w, height=h))
    return rects


def extract_nontext(
    screen: Image,
    low: float = 50,
    high: float = 150,
    kernel: int = 5,
    nesting_threshold: float = NESTING_THRESHOLD,
    oversize_fraction: float = OVERSIZE_FRACTION,
) -> list[Widget]:
    gray = as_gray(screen)
    h, w = gray.shape
    closed = morph_close(canny(gray, low, high), kernel)
    candidates = _contour_rects(closed)

    # Cutouts of an irregular screen are solid black, not widgets.
    dark = gray < 0.25 * float(np.median(gray))
    candidates = [
        r for r in candidates if dark[r.y : r.y1, r.x : r.x1].mean() < 0.5
    ]
    kept = eliminate_nesting(candidates, nesting_threshold)
    screen_area = float(w * h)
    kept = [r for r in kept if r.area <= oversize_fraction * screen_area]
    log.debug(f"Non-text extraction: {len(candidates)} candidates, {len(kept)} kept")
    widgets = [
        Widget(kind=WidgetKind.nontext, bounds=r, confidence=1.0, input=looks_like_input(r))
        for r in kept
    ]
    return sorted(widgets, key=Widget.sort_key)


def _is_duplicate(candidate: Widget, texts: list[Widget], iou: float, containment: float, margin: int) -> bool:
    for t in texts:
        if candidate.bounds.iou(t.bounds) > iou:
            return True
        if candidate.bounds.containment_in(t.bounds.expanded(margin)) >= containment:
            return True
    return False


def merge_widgets(
    text: Iterable[Widget],
    nontext: Iterable[Widget],
    iou: float = DEDUP_IOU,
    containment: float = NESTING_THRESHOLD,
    margin: int = 2,
) -> list[Widget]:
    """
    Union of text and non-text widgets with duplicates removed.

    A non-text widget duplicates a text widget when their IoU exceeds `iou` or
    when it lies at least `containment` inside the text box grown by `margin`.
    The text widget is kept. Output is sorted top-to-bottom, left-to-right.
    """
    pool = list(text) + list(nontext)
    texts = sorted({w for w in pool if w.kind == WidgetKind.text}, key=Widget.sort_key)
    others = {w for w in pool if w.kind == WidgetKind.nontext}
    kept = [w for w in others if not _is_duplicate(w, texts, iou, containment, margin)]
    return sorted(texts + kept, key=Widget.sort_key)
