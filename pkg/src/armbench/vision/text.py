"""
Text extraction by glyph template matching, in two passes.

The coarse pass groups glyph-sized ink components into line boxes and scores
each box by the mean match of its characters; boxes scoring below
`COARSE_THRESHOLD` are not text. The refine pass re-reads every line one
character at a time, drops characters matching below `CONFIDENCE_THRESHOLD`
and merges the surviving fragments into widgets.
"""

import functools
import logging
import statistics

import cv2
import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from armbench.geometry import Rect
from armbench.vision.glyphs import GlyphLibrary, default_library
from armbench.vision.image import Image, as_gray
from armbench.vision.widgets import Widget, WidgetKind

log = logging.getLogger("armbench.vision")

CONFIDENCE_THRESHOLD = 0.8
COARSE_THRESHOLD = 0.5
INK_RATIO = 0.75
LINE_GAP = 12
_MARGIN = 3
_WIDTH_SLACK = 2
_WIDTH_PENALTY = 0.01
_BLUR_SIGMA = 0.7
# libraries whose blurred templates stay prepared
TEMPLATE_CACHE_SIZE = 8


class CharMatch(BaseModel):
    char: str
    bounds: Rect
    score: float = Field(ge=0.0, le=1.0)

    model_config = ConfigDict(frozen=True)


def ink_mask(gray: Image, ratio: float = INK_RATIO) -> npt.NDArray[np.bool_]:
    """Pixels darker than `ratio` times the median intensity."""
    return gray < ratio * float(np.median(gray))


@functools.lru_cache(maxsize=TEMPLATE_CACHE_SIZE)
def _prepared_templates(library: GlyphLibrary) -> list[tuple[str, int, npt.NDArray[np.float32]]]:
    prepared = []
    for ch, mask in library.items():
        ink = cv2.GaussianBlur(
            mask.astype(np.float32), (0, 0), _BLUR_SIGMA, borderType=cv2.BORDER_CONSTANT
        )
        prepared.append((ch, mask.shape[1], 1.0 - ink))
    return prepared


def _group_lines(
    mask: npt.NDArray[np.bool_], library: GlyphLibrary
) -> list[tuple[Rect, npt.NDArray[np.bool_]]]:
    """Glyph-sized components grouped into line boxes, each with its glyph mask."""
    n, labels, stats, _ = cv2.connectedComponentsWithStats(mask.astype(np.uint8), connectivity=8)
    x0 = stats[1:, cv2.CC_STAT_LEFT]
    y0 = stats[1:, cv2.CC_STAT_TOP]
    w = stats[1:, cv2.CC_STAT_WIDTH]
    h = stats[1:, cv2.CC_STAT_HEIGHT]
    glyph_sized = (h <= library.cell_height) & (w <= library.max_width + _WIDTH_SLACK)
    ids = np.flatnonzero(glyph_sized)
    if len(ids) == 0:
        return []
    x0, y0, x1, y1 = x0[ids], y0[ids], x0[ids] + w[ids], y0[ids] + h[ids]

    cy = (y0 + y1) / 2.0
    gap = np.maximum(x0[:, None], x0[None, :]) - np.minimum(x1[:, None], x1[None, :])
    near = (np.abs(cy[:, None] - cy[None, :]) <= 0.5 * library.cell_height) & (gap <= LINE_GAP)
    count, group = connected_components(csr_matrix(near), directed=False)

    lines = []
    for g in range(count):
        members = np.flatnonzero(group == g)
        box = Rect.from_bounds(
            int(x0[members].min()),
            int(y0[members].min()),
            int(x1[members].max()),
            int(y1[members].max()),
        )
        line_mask = np.isin(labels[box.y : box.y1, box.x : box.x1], ids[members] + 1)
        lines.append((box, line_mask))
    return sorted(lines, key=lambda line: (line[0].y, line[0].x))


def _column_runs(line_mask: npt.NDArray[np.bool_]) -> list[tuple[int, int]]:
    cols = np.concatenate([[False], line_mask.any(axis=0), [False]]).astype(np.int8)
    edges = np.flatnonzero(np.diff(cols))
    return list(zip(edges[::2].tolist(), edges[1::2].tolist(), strict=True))


def _match_char(
    blurred: npt.NDArray[np.float32],
    pad: int,
    line: Rect,
    ink: Rect,
    library: GlyphLibrary,
) -> CharMatch:
    cell = library.cell_height
    top = min(line.y, line.y1 - cell) - _MARGIN + pad
    bottom = max(line.y1, line.y + cell) + _MARGIN + pad
    left = ink.x - _MARGIN + pad
    right = ink.x1 + _MARGIN + pad
    window = blurred[top:bottom, left:right]

    best_char, best_score = None, -np.inf
    for ch, width, template in _prepared_templates(library):
        if abs(width - ink.width) > _WIDTH_SLACK:
            continue
        if template.shape[0] > window.shape[0] or width > window.shape[1]:
            continue
        raw = float(cv2.matchTemplate(window, template, cv2.TM_CCOEFF_NORMED).max())
        score = raw - _WIDTH_PENALTY * abs(width - ink.width)
        if score > best_score:
            best_char, best_score = ch, score
    if best_char is None:
        return CharMatch(char="?", bounds=ink, score=0.0)
    return CharMatch(char=best_char, bounds=ink, score=float(np.clip(best_score, 0.0, 1.0)))


def refine_line(
    chars: list[CharMatch],
    cell_height: int,
    space_gap: int,
    threshold: float = CONFIDENCE_THRESHOLD,
) -> list[Widget]:
    """
    Fine pass over one line of character matches (left to right).

    Characters scoring below `threshold` are eliminated. Survivors are joined
    into fragments; neighbouring fragments merge when the space between them
    is below the line's merge gap, which is 1.5 times the larger of the median
    gap and 0.6 cell heights. A gap of at least `space_gap` is read as a space.
    """
    kept = sorted((c for c in chars if c.score >= threshold), key=lambda c: c.bounds.x)
    if not kept:
        return []
    gaps = [b.bounds.x - a.bounds.x1 for a, b in zip(kept, kept[1:], strict=False)]
    merge_gap = 1.5 * max(statistics.median(gaps) if gaps else 0.0, 0.6 * cell_height)

    fragments: list[list[CharMatch]] = [[kept[0]]]
    for gap, c in zip(gaps, kept[1:], strict=True):
        if gap <= merge_gap:
            fragments[-1].append(c)
        else:
            fragments.append([c])

    widgets = []
    for fragment in fragments:
        text = fragment[0].char
        for a, b in zip(fragment, fragment[1:], strict=False):
            text += (" " if b.bounds.x - a.bounds.x1 >= space_gap else "") + b.char
        bounds = Rect.from_bounds(
            min(c.bounds.x for c in fragment),
            min(c.bounds.y for c in fragment),
            max(c.bounds.x1 for c in fragment),
            max(c.bounds.y1 for c in fragment),
        )
        confidence = float(np.mean([c.score for c in fragment]))
        widgets.append(Widget(kind=WidgetKind.text, bounds=bounds, text=text, confidence=confidence))
    return widgets


def detect_text(
    screen: Image,
    library: GlyphLibrary | None = None,
    threshold: float = CONFIDENCE_THRESHOLD,
) -> list[Widget]:
    library = library or default_library()
    gray = as_gray(screen)
    pad = library.cell_height + _MARGIN
    padded = cv2.copyMakeBorder(gray, pad, pad, pad, pad, cv2.BORDER_REPLICATE)
    blurred = cv2.GaussianBlur(padded.astype(np.float32), (0, 0), _BLUR_SIGMA)

    widgets: list[Widget] = []
    lines = _group_lines(ink_mask(gray), library)
    for line, line_mask in lines:
        matches = []
        for c0, c1 in _column_runs(line_mask):
            rows = np.flatnonzero(line_mask[:, c0:c1].any(axis=1))
            ink = Rect.from_bounds(
                line.x + c0, line.y + int(rows[0]), line.x + c1, line.y + int(rows[-1]) + 1
            )
            matches.append(_match_char(blurred, pad, line, ink, library))
        coarse = float(np.mean([m.score for m in matches]))
        if coarse < COARSE_THRESHOLD:
            log.debug(f"Dropped line at {line.as_list()}: coarse confidence {coarse:.2f}")
            continue
        widgets.extend(refine_line(matches, library.cell_height, library.space_gap, threshold))
    log.debug(f"Text extraction: {len(lines)} line boxes, {len(widgets)} text widgets")
    return sorted(widgets, key=Widget.sort_key)
