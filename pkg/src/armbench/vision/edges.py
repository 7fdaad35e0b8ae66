"""Edge maps: Canny detection and morphological closing."""

import cv2
import numpy as np
import numpy.typing as npt

from armbench.vision.image import Image, as_gray

EdgeMap = npt.NDArray[np.uint8]


def canny(img: Image, low: float = 50, high: float = 150, sigma: float = 1.4) -> EdgeMap:
    """
    Gaussian smoothing, L2 gradient, non-maximum suppression and hysteresis.

    Returns a {0, 1} map the size of `img`.
    """
    if not 0 <= low <= high <= 255:
        raise ValueError(f"Canny thresholds must satisfy 0 ≤ low ≤ high ≤ 255, got {low}, {high}")
    gray = as_gray(img)
    smoothed = cv2.GaussianBlur(gray, (0, 0), sigmaX=sigma) if sigma > 0 else gray
    edges = cv2.Canny(smoothed, low, high, L2gradient=True)
    return (edges > 0).astype(np.uint8)


def morph_close(edges: EdgeMap, kernel: int = 5) -> EdgeMap:
    """Dilation followed by erosion with a square `kernel` x `kernel` element."""
    if kernel < 1 or kernel % 2 == 0:
        raise ValueError(f"Closing kernel must be odd and ≥ 1, got {kernel}")
    element = np.ones((kernel, kernel), dtype=np.uint8)
    closed = cv2.morphologyEx(edges.astype(np.uint8), cv2.MORPH_CLOSE, element)
    return (closed > 0).astype(np.uint8)
