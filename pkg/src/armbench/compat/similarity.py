"""
GUI image similarity.

The default metric compares local luminance, contrast and structure over
16x16 blocks of the smoothed images and averages the blocks that show
something in either image; GUI screens are mostly empty background, which
would otherwise drown any change. A gray-level histogram correlation is
available behind the same interface.
"""

from enum import StrEnum

import cv2
import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field

from armbench.errors import EmptyImageError
from armbench.vision.image import Image, as_gray

BLOCK = 16
SMOOTHING_SIGMA = 1.5
HISTOGRAM_BINS = 64
# blocks flat in both images (after smoothing) and of the same brightness are left out
VARIANCE_FLOOR = 1.0
LUMINANCE_FLOOR = 4.0
_C1 = (0.01 * 255) ** 2
_C2 = (0.03 * 255) ** 2


class SimilarityMetric(StrEnum):
    block = "block"
    histogram = "histogram"


class SimilarityScore(BaseModel):
    value: float = Field(ge=0.0, le=1.0)
    metric: SimilarityMetric

    model_config = ConfigDict(frozen=True)


def _matched_pair(a: Image, b: Image) -> tuple[Image, Image]:
    """Both images in gray, the smaller one resampled to the other's size."""
    if a.size == 0 or b.size == 0:
        raise EmptyImageError(f"Cannot compare an empty image (shapes {a.shape} and {b.shape})")
    ga, gb = as_gray(a), as_gray(b)
    if ga.shape == gb.shape:
        return ga, gb
    # order by (area, shape) so the result does not depend on argument order
    if (ga.size, ga.shape) < (gb.size, gb.shape):
        ga = cv2.resize(ga, (gb.shape[1], gb.shape[0]), interpolation=cv2.INTER_LINEAR)
    else:
        gb = cv2.resize(gb, (ga.shape[1], ga.shape[0]), interpolation=cv2.INTER_LINEAR)
    return ga, gb


def _block_sums(values: npt.NDArray[np.float64], block: int) -> npt.NDArray[np.float64]:
    h, w = values.shape
    rows = np.add.reduceat(values, np.arange(0, h, block), axis=0)
    return np.add.reduceat(rows, np.arange(0, w, block), axis=1)


def block_similarity(a: Image, b: Image, block: int = BLOCK, sigma: float = SMOOTHING_SIGMA) -> float:
    """Mean blockwise luminance-contrast-structure index, clipped to [0, 1]."""
    ga, gb = _matched_pair(a, b)
    x = cv2.GaussianBlur(ga.astype(np.float64), (0, 0), sigma)
    y = cv2.GaussianBlur(gb.astype(np.float64), (0, 0), sigma)
    n = _block_sums(np.ones_like(x), block)
    mx = _block_sums(x, block) / n
    my = _block_sums(y, block) / n
    vx = _block_sums(x * x, block) / n - mx * mx
    vy = _block_sums(y * y, block) / n - my * my
    cov = _block_sums(x * y, block) / n - mx * my
    index = ((2 * mx * my + _C1) * (2 * cov + _C2)) / ((mx * mx + my * my + _C1) * (vx + vy + _C2))
    informative = (vx > VARIANCE_FLOOR) | (vy > VARIANCE_FLOOR) | (np.abs(mx - my) > LUMINANCE_FLOOR)
    if not informative.any():
        return 1.0
    return float(np.clip(index[informative].mean(), 0.0, 1.0))


def histogram_similarity(a: Image, b: Image, bins: int = HISTOGRAM_BINS) -> float:
    """Correlation of the gray-level histograms, negative correlation counted as 0."""
    ga, gb = _matched_pair(a, b)
    ha = cv2.calcHist([ga], [0], None, [bins], [0, 256])
    hb = cv2.calcHist([gb], [0], None, [bins], [0, 256])
    return float(np.clip(cv2.compareHist(ha, hb, cv2.HISTCMP_CORREL), 0.0, 1.0))


def gui_similarity(a: Image, b: Image, metric: SimilarityMetric = SimilarityMetric.block) -> SimilarityScore:
    """
    Raises:
        EmptyImageError: either image has no pixels.
    """
    match metric:
        case SimilarityMetric.block:
            value = block_similarity(a, b)
        case SimilarityMetric.histogram:
            value = histogram_similarity(a, b)
    return SimilarityScore(value=value, metric=metric)
