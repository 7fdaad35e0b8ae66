"""
Screen detection in photos, whole-screen widget extraction and debug overlays.
"""

import logging

import cv2
import numpy as np
import numpy.typing as npt
from pydantic import ValidationError
from scipy import ndimage

from armbench.camera import (
    FloatArray,
    ScreenQuad,
    estimate_homography,
    measure_deflection,
    order_corners,
)
from armbench.errors import NoScreenFoundError
from armbench.vision.edges import canny
from armbench.vision.glyphs import GlyphLibrary
from armbench.vision.image import Image, as_gray, check_image
from armbench.vision.text import detect_text
from armbench.vision.widgets import Widget, WidgetKind, extract_nontext, merge_widgets

log = logging.getLogger("armbench.vision")

MIN_AREA_FRACTION = 0.05
_SEED_SIGMA = 3.0
_SMOOTHNESS_WEIGHT = 2.0
_FLOOD_RANGE = 30
_MIN_CONTRAST = 20.0
_CORNER_EXCLUSION = 3.0


def _seed_point(gray: Image) -> tuple[int, int]:
    """Brightest smooth spot: blurred brightness minus a multiple of local deviation."""
    g = gray.astype(np.float32)
    mean = cv2.GaussianBlur(g, (0, 0), _SEED_SIGMA)
    sq = cv2.GaussianBlur(g * g, (0, 0), _SEED_SIGMA)
    std = np.sqrt(np.maximum(sq - mean * mean, 0.0))
    score = mean - _SMOOTHNESS_WEIGHT * std
    row, col = np.unravel_index(int(np.argmax(score)), score.shape)
    return int(col), int(row)


def _flood_region(gray: Image, seed: tuple[int, int], low: float, high: float) -> npt.NDArray[np.bool_]:
    barrier = cv2.dilate(canny(gray, low, high), np.ones((3, 3), np.uint8))
    mask = np.pad(barrier, 1).astype(np.uint8)
    flags = 4 | cv2.FLOODFILL_MASK_ONLY | cv2.FLOODFILL_FIXED_RANGE | (255 << 8)
    cv2.floodFill(gray.copy(), mask, seed, 0, _FLOOD_RANGE, _FLOOD_RANGE, flags)
    return mask[1:-1, 1:-1] == 255


def _fit_side(points: FloatArray, centroid: FloatArray) -> tuple[FloatArray, FloatArray]:
    """Line through `points` as (point, unit normal pointing away from `centroid`)."""
    vx, vy, x0, y0 = cv2.fitLine(points.astype(np.float32), cv2.DIST_L2, 0, 0.01, 0.01).ravel()
    normal = np.array([-vy, vx], dtype=float)
    anchor = np.array([x0, y0], dtype=float)
    if np.dot(anchor - centroid, normal) < 0:
        normal = -normal
    return anchor, normal


def _intersect(a: tuple[FloatArray, FloatArray], b: tuple[FloatArray, FloatArray]) -> FloatArray:
    (pa, na), (pb, nb) = a, b
    m = np.array([na, nb])
    rhs = np.array([np.dot(na, pa), np.dot(nb, pb)])
    return np.linalg.solve(m, rhs)


def _refine_corners(boundary: FloatArray, rough: FloatArray) -> FloatArray:
    """Fit one line per side through the boundary points and intersect neighbours."""
    centroid = boundary.mean(axis=0)
    sides = []
    for i in range(4):
        a, b = rough[i], rough[(i + 1) % 4]
        direction = (b - a) / np.linalg.norm(b - a)
        rel = boundary - a
        along = rel @ direction
        across = np.abs(rel[:, 0] * direction[1] - rel[:, 1] * direction[0])
        length = float(np.linalg.norm(b - a))
        dists = []
        for j in range(4):
            c, d = rough[j], rough[(j + 1) % 4]
            u = (d - c) / np.linalg.norm(d - c)
            r = boundary - c
            dists.append(np.abs(r[:, 0] * u[1] - r[:, 1] * u[0]))
        nearest = np.argmin(np.stack(dists, axis=1), axis=1)
        chosen = (
            (nearest == i)
            & (along > _CORNER_EXCLUSION)
            & (along < length - _CORNER_EXCLUSION)
            & (across < 0.25 * length)
        )
        if chosen.sum() < 2:
            raise NoScreenFoundError(f"Screen side {i} has too few boundary points to fit")
        anchor, normal = _fit_side(boundary[chosen], centroid)
        # boundary pixel centres sit half a pixel inside the edge
        sides.append((anchor + 0.5 * normal, normal))
    return np.array([_intersect(sides[(i - 1) % 4], sides[i]) for i in range(4)])


def detect_screen(
    photo: Image,
    physical_screen_size: tuple[float, float] | None = None,
    rectified_width: int | None = None,
    min_area_fraction: float = MIN_AREA_FRACTION,
    low: float = 50,
    high: float = 150,
) -> ScreenQuad:
    """
    Find the bright, flat, rectangle-like screen region of a photo.

    A flood fill from the brightest smooth point, bounded by Canny edges,
    samples the screen intensity; the threshold halfway to the surroundings
    segments the screen, whose boundary is fitted with four lines.

    Raises:
        NoScreenFoundError: no region covers `min_area_fraction` of the photo, or
            its outline does not give a convex quad.
    """
    gray = as_gray(photo)
    h, w = gray.shape
    seed = _seed_point(gray)
    region = _flood_region(gray, seed, low, high)
    if region.all() or not region.any():
        raise NoScreenFoundError("Flood fill found no bounded screen region")
    inside = float(np.median(gray[region]))
    outside = float(np.median(gray[~region]))
    if inside - outside < _MIN_CONTRAST:
        raise NoScreenFoundError(
            f"No screen: region brightness {inside:.0f} vs surroundings {outside:.0f}"
        )
    bright = gray > 0.5 * (inside + outside)
    _, labels = cv2.connectedComponents(bright.astype(np.uint8), connectivity=4)
    screen = ndimage.binary_fill_holes(labels == labels[seed[1], seed[0]])
    area = int(screen.sum())
    if area < min_area_fraction * h * w:
        raise NoScreenFoundError(
            f"Largest screen candidate covers {area / (h * w):.1%} of the photo, below {min_area_fraction:.0%}"
        )

    contours, _ = cv2.findContours(
        screen.astype(np.uint8), cv2.RETR_EXTERNAL, cv2.CHAIN_APPROX_NONE
    )
    boundary = max(contours, key=cv2.contourArea).reshape(-1, 2).astype(float) + 0.5
    rough = order_corners(cv2.boxPoints(cv2.minAreaRect(boundary.astype(np.float32))))
    try:
        corners = order_corners(_refine_corners(boundary, rough))
        if not np.isfinite(corners).all():
            raise NoScreenFoundError("Screen sides do not meet in four finite corners")
        if physical_screen_size is not None:
            angle, scale = measure_deflection(corners, physical_screen_size, rectified_width)
        else:
            angle, _ = measure_deflection(corners, 1.0)
            scale = 1.0
        quad = ScreenQuad(
            corners=tuple((float(x), float(y)) for x, y in corners),
            deflection_angle=angle,
            scale=scale,
        )
    except (np.linalg.LinAlgError, ValidationError) as e:
        raise NoScreenFoundError(f"Screen outline does not form a usable quad: {e}") from e
    log.debug(f"Detected screen at {np.round(corners, 1).tolist()}, deflection {np.degrees(angle):.2f}°")
    return quad


def extract_widgets(screen: Image, library: GlyphLibrary | None = None) -> list[Widget]:
    """Text and non-text widgets of a rectified screen, deduplicated."""
    return merge_widgets(detect_text(screen, library), extract_nontext(screen))


def draw_overlay(photo: Image, quad: ScreenQuad, widgets: list[Widget]) -> Image:
    """Colour copy of `photo` with the quad and the widget boxes mapped back onto it."""
    check_image(photo)
    canvas = cv2.cvtColor(photo, cv2.COLOR_GRAY2BGR) if photo.ndim == 2 else photo.copy()
    corners = quad.corner_array
    cv2.polylines(canvas, [np.round(corners - 0.5).astype(np.int32)], True, (0, 200, 0), 2)
    if quad.rectified_size is None:
        return canvas
    rw, rh = quad.rectified_size
    to_photo = estimate_homography([[0, 0], [rw, 0], [rw, rh], [0, rh]], corners)
    for widget in widgets:
        b = widget.bounds
        box = to_photo.apply([[b.x, b.y], [b.x1, b.y], [b.x1, b.y1], [b.x, b.y1]])
        colour = (0, 0, 230) if widget.kind == WidgetKind.text else (230, 120, 0)
        cv2.polylines(canvas, [np.round(box - 0.5).astype(np.int32)], True, colour, 1)
    return canvas
