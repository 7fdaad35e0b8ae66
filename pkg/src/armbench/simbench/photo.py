"""
Synthetic photographs: the camera looking down at a device, and chessboard
views for calibration.
"""

import logging
from typing import NamedTuple

import cv2
import numpy as np
from pydantic import Field, model_validator
from scipy.spatial.transform import Rotation

from armbench.camera import (
    CameraIntrinsics,
    CameraPose,
    ChessboardView,
    FloatArray,
    plane_homography,
    project,
    undistort_pixels,
    warp_perspective,
)
from armbench.documents import BenchBaseModel
from armbench.errors import DeviceOutOfFrameError
from armbench.simbench.models import DeviceProfile
from armbench.units import Millimeters
from armbench.vision.image import Image, check_image

log = logging.getLogger("armbench.simbench")


class CameraRig(BenchBaseModel):
    """The true camera: intrinsics, sensor size and height above the table."""

    intrinsics: CameraIntrinsics = Field(
        default_factory=lambda: CameraIntrinsics(fx=800.0, fy=800.0, cx=640.0, cy=360.0)
    )
    resolution: tuple[int, int] = (1280, 720)
    height: Millimeters = Field(default=160.0, gt=0)
    position: tuple[Millimeters, Millimeters] | None = None

    def pose(self, device: DeviceProfile) -> CameraPose:
        """Looking straight down, above `position` or else above the device centre."""
        x, y = self.position or (device.placement.x, device.placement.y)
        return CameraPose.look_down(x, y, self.height)


class SceneConfig(BenchBaseModel):
    background: int = Field(default=60, ge=0, le=255)
    noise_sigma: float = Field(default=0.0, ge=0)
    illumination_gradient: float = Field(default=0.0, ge=0, lt=1)
    chessboard_views: int = Field(default=5, ge=0)
    chessboard_noise: float = Field(default=0.2, ge=0)
    chessboard_grid: tuple[int, int] = (9, 6)
    chessboard_square: Millimeters = Field(default=20.0, gt=0)

    @model_validator(mode="after")
    def _check_grid(self):
        if min(self.chessboard_grid) < 2:
            raise ValueError(f"A chessboard needs at least 2x2 inner corners, got {self.chessboard_grid}")
        return self


class SyntheticPhoto(NamedTuple):
    image: Image
    corners: FloatArray


def _distort_image(ideal: Image, intrinsics: CameraIntrinsics, background: int) -> Image:
    h, w = ideal.shape[:2]
    xs, ys = np.meshgrid(np.arange(w) + 0.5, np.arange(h) + 0.5)
    src = undistort_pixels(intrinsics, np.stack([xs, ys], axis=-1).reshape(-1, 2)) - 0.5
    src = src.reshape(h, w, 2).astype(np.float32)
    return cv2.remap(
        ideal,
        src[..., 0],
        src[..., 1],
        interpolation=cv2.INTER_LINEAR,
        borderMode=cv2.BORDER_CONSTANT,
        borderValue=background,
    )


def synthesize_photo(
    screen_img: Image,
    device: DeviceProfile,
    intrinsics: CameraIntrinsics,
    pose: CameraPose,
    scene: SceneConfig,
    resolution: tuple[int, int] = (1280, 720),
    rng: np.random.Generator | None = None,
) -> SyntheticPhoto:
    """
    Photograph a rendered screen lying on the table.

    The screen is mapped through its placement and the camera's plane
    homography, then radial distortion, a horizontal illumination gradient and
    Gaussian noise are applied. The true corners (distorted like the image)
    come back with the photo.

    Raises:
        DeviceOutOfFrameError: a screen corner falls outside the photo.
    """
    check_image(screen_img)
    width, height = resolution
    linear = intrinsics.model_copy(update={"k1": 0.0})
    to_plane = device.screen_to_plane()
    h = plane_homography(linear, pose).compose(to_plane)
    rw, rh = device.resolution
    plane_corners = to_plane.apply([[0, 0], [rw, 0], [rw, rh], [0, rh]])
    corners = project(intrinsics, pose, np.column_stack([plane_corners, np.zeros(4)]))
    if np.any(corners < 0) or np.any(corners[:, 0] > width) or np.any(corners[:, 1] > height):
        raise DeviceOutOfFrameError(
            f"Device '{device.id}' corners {np.round(corners, 1).tolist()} leave the {width}x{height} frame"
        )

    photo = warp_perspective(screen_img, h, (width, height), scene.background)
    if intrinsics.k1 != 0.0:
        photo = _distort_image(photo, intrinsics, scene.background)

    if scene.illumination_gradient == 0.0 and scene.noise_sigma == 0.0:
        return SyntheticPhoto(photo, corners)
    values = photo.astype(np.float64)
    if scene.illumination_gradient:
        gain = 1.0 + scene.illumination_gradient * (2.0 * (np.arange(width) + 0.5) / width - 1.0)
        values *= gain[None, :] if values.ndim == 2 else gain[None, :, None]
    if scene.noise_sigma:
        generator = rng if rng is not None else np.random.default_rng(0)
        values += generator.normal(0.0, scene.noise_sigma, size=values.shape)
    return SyntheticPhoto(np.clip(np.rint(values), 0, 255).astype(np.uint8), corners)


def chessboard_corners(grid: tuple[int, int], square: float) -> FloatArray:
    """Inner corners of a board centred on the origin, row by row."""
    cols, rows = grid
    xs = (np.arange(cols) - (cols - 1) / 2.0) * square
    ys = (np.arange(rows) - (rows - 1) / 2.0) * square
    gx, gy = np.meshgrid(xs, ys)
    return np.column_stack([gx.ravel(), gy.ravel()])


def synthesize_chessboard_views(
    intrinsics: CameraIntrinsics,
    n_views: int = 5,
    noise: float = 0.2,
    rng: np.random.Generator | None = None,
    grid: tuple[int, int] = (9, 6),
    square: float = 20.0,
) -> list[ChessboardView]:
    """
    Chessboard observations from tilted viewpoints.

    Each view tilts the board 15-35 degrees about a random in-plane axis at
    450-550 mm from the camera. "Detected" corners are the projected true
    corners plus Gaussian pixel noise of standard deviation `noise`.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    world = chessboard_corners(grid, square)
    world3 = np.column_stack([world, np.zeros(len(world))])
    views = []
    for _ in range(n_views):
        axis_angle = rng.uniform(0.0, 2.0 * np.pi)
        tilt = np.radians(rng.uniform(15.0, 35.0))
        axis = np.array([np.cos(axis_angle), np.sin(axis_angle), 0.0])
        rotation = Rotation.from_rotvec(tilt * axis).as_matrix()
        shift = rng.uniform(-40.0, 40.0, size=2)
        pose = CameraPose.from_rt(rotation, np.array([shift[0], shift[1], rng.uniform(450.0, 550.0)]))
        pixels = project(intrinsics, pose, world3)
        if noise > 0:
            pixels = pixels + rng.normal(0.0, noise, size=pixels.shape)
        views.append(
            ChessboardView(
                world=[(float(x), float(y)) for x, y in world],
                pixels=[(float(u), float(v)) for u, v in pixels],
                grid=grid,
            )
        )
    log.debug(f"Synthesized {n_views} chessboard views, corner noise σ={noise} px")
    return views
