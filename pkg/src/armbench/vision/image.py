"""
Image values and their on-disk formats.

An image is a numpy array of 8-bit intensities, shape (height, width) for
grayscale or (height, width, 3) for colour. PNG is the interchange format;
`.npy` holds raw matrices for golden tests.
"""

import io
from pathlib import Path

import cv2
import numpy as np
import numpy.typing as npt

from armbench.errors import EmptyImageError
from common.utils import atomic_write_bytes

Image = npt.NDArray[np.uint8]


def check_image(img: npt.NDArray) -> Image:
    """
    Raises:
        EmptyImageError: no pixels, or a shape that is not an image.
    """
    if img.ndim not in (2, 3) or img.shape[0] < 1 or img.shape[1] < 1:
        raise EmptyImageError(f"Not an image: shape {img.shape}")
    if img.ndim == 3 and img.shape[2] not in (1, 3):
        raise EmptyImageError(f"Unsupported channel count {img.shape[2]}")
    if img.dtype != np.uint8:
        raise EmptyImageError(f"Images are 8-bit, got dtype {img.dtype}")
    return img


def as_gray(img: Image) -> Image:
    check_image(img)
    if img.ndim == 2:
        return img
    if img.shape[2] == 1:
        return img[:, :, 0]
    return cv2.cvtColor(img, cv2.COLOR_BGR2GRAY)


def read_image(path: str | Path) -> Image:
    path = Path(path)
    if path.suffix == ".npy":
        return check_image(np.load(path, allow_pickle=False))
    img = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if img is None:
        raise EmptyImageError(f"Cannot read image '{path}'")
    return check_image(img)


def encode_png(img: Image) -> bytes:
    ok, buf = cv2.imencode(".png", check_image(img))
    if not ok:
        raise EmptyImageError(f"PNG encoding failed for image of shape {img.shape}")
    return buf.tobytes()


def write_image(path: str | Path, img: Image) -> Path:
    """Write as PNG, or as a raw matrix when the suffix is `.npy`."""
    path = Path(path)
    if path.suffix == ".npy":
        stream = io.BytesIO()
        np.save(stream, check_image(img), allow_pickle=False)
        atomic_write_bytes(path, stream.getvalue())
    else:
        atomic_write_bytes(path, encode_png(img))
    return path
