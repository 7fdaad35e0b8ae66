"""
Pinhole camera model, planar calibration and screen rectification.

Pixel coordinates follow `armbench.geometry`: continuous, origin at the
top-left image corner, pixel centres at half-integers. OpenCV places pixel
centres on integers, so every warp goes through `warp_perspective`, which
shifts by half a pixel on both sides.
"""

import json
import logging
import math
from collections.abc import Sequence
from typing import Any

import cv2
import numpy as np
import numpy.typing as npt
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.optimize import least_squares
from scipy.spatial.transform import Rotation

from armbench.errors import (
    BehindCameraError,
    DegenerateConfigurationError,
    DegeneratePointsError,
    DegenerateQuadError,
    InsufficientViewsError,
    QuadOutOfBoundsError,
)
from armbench.geometry import Point

log = logging.getLogger("armbench.camera")

FloatArray = npt.NDArray[np.float64]


class CameraIntrinsics(BaseModel):
    fx: float = Field(gt=0)
    fy: float = Field(gt=0)
    cx: float
    cy: float
    s: float = 0.0
    k1: float = 0.0

    model_config = ConfigDict(frozen=True)

    @property
    def matrix(self) -> FloatArray:
        return np.array(
            [[self.fx, self.s, self.cx], [0.0, self.fy, self.cy], [0.0, 0.0, 1.0]]
        )

    @classmethod
    def from_matrix(cls, k: FloatArray, k1: float = 0.0) -> "CameraIntrinsics":
        k = k / k[2, 2]
        return cls(
            fx=float(k[0, 0]),
            fy=float(k[1, 1]),
            cx=float(k[0, 2]),
            cy=float(k[1, 2]),
            s=float(k[0, 1]),
            k1=k1,
        )


class CameraPose(BaseModel):
    """World-to-camera transform: X_cam = R X_world + t."""

    rotation: tuple[tuple[float, float, float], ...] = (
        (1.0, 0.0, 0.0),
        (0.0, 1.0, 0.0),
        (0.0, 0.0, 1.0),
    )
    translation: tuple[float, float, float] = (0.0, 0.0, 0.0)

    model_config = ConfigDict(frozen=True)

    @field_validator("rotation")
    @classmethod
    def _check_rotation(cls, v: tuple[tuple[float, ...], ...]):
        r = np.asarray(v, dtype=float)
        if r.shape != (3, 3):
            raise ValueError(f"rotation must be 3x3, got shape {r.shape}")
        if not np.allclose(r @ r.T, np.eye(3), atol=1e-6) or np.linalg.det(r) < 0:
            raise ValueError("rotation must be a proper orthonormal matrix")
        return v

    @property
    def rotation_matrix(self) -> FloatArray:
        return np.asarray(self.rotation, dtype=float)

    @property
    def translation_vector(self) -> FloatArray:
        return np.asarray(self.translation, dtype=float)

    @classmethod
    def from_rt(cls, r: FloatArray, t: FloatArray) -> "CameraPose":
        return cls(
            rotation=tuple(tuple(float(v) for v in row) for row in r),
            translation=(float(t[0]), float(t[1]), float(t[2])),
        )

    @classmethod
    def from_rotvec(cls, rotvec: Sequence[float], t: Sequence[float]) -> "CameraPose":
        r = Rotation.from_rotvec(np.asarray(rotvec, dtype=float)).as_matrix()
        return cls.from_rt(r, np.asarray(t, dtype=float))

    @classmethod
    def look_down(cls, x: float, y: float, height: float) -> "CameraPose":
        """Camera `height` mm above the plane point (x, y), image axes along world X and Y."""
        return cls(translation=(-x, -y, height))


class Homography(BaseModel):
    matrix: np.ndarray

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_validator("matrix", mode="before")
    @classmethod
    def _normalize(cls, v: Any) -> FloatArray:
        m = np.array(v, dtype=float)
        if m.shape != (3, 3) or not np.all(np.isfinite(m)):
            raise DegeneratePointsError(f"Homography must be a finite 3x3 matrix, got {m.shape}")
        if abs(m[2, 2]) < 1e-12 * np.abs(m).max():
            raise DegeneratePointsError("Homography has a vanishing bottom-right entry")
        m = m / m[2, 2]
        if abs(np.linalg.det(m)) < 1e-12 * max(1.0, np.abs(m).max() ** 3):
            raise DegeneratePointsError("Homography is singular")
        return m

    @classmethod
    def identity(cls) -> "Homography":
        return cls(matrix=np.eye(3))

    def apply(self, points: npt.ArrayLike) -> FloatArray:
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        pts = np.atleast_2d(pts)
        homog = np.hstack([pts, np.ones((len(pts), 1))]) @ self.matrix.T
        out = homog[:, :2] / homog[:, 2:3]
        return out[0] if single else out

    def inverse(self) -> "Homography":
        return Homography(matrix=np.linalg.inv(self.matrix))

    def compose(self, first: "Homography") -> "Homography":
        """The map `self ∘ first`: apply `first`, then `self`."""
        return Homography(matrix=self.matrix @ first.matrix)


class ChessboardView(BaseModel):
    world: list[Point]
    pixels: list[Point]
    grid: tuple[int, int]

    @model_validator(mode="after")
    def _check(self):
        if len(self.world) != len(self.pixels):
            raise ValueError(
                f"ChessboardView has {len(self.world)} world points but {len(self.pixels)} pixels"
            )
        if len(self.world) < 4:
            raise ValueError(f"ChessboardView needs ≥ 4 correspondences, got {len(self.world)}")
        return self


class ScreenQuad(BaseModel):
    """
    A detected screen: four corners clockwise from top-left in photo pixels,
    plus the mapping from rectified screen pixels to the arm base frame
    (scale in mm per rectified pixel, deflection in radians, origin in mm).
    """

    corners: tuple[Point, Point, Point, Point]
    deflection_angle: float = 0.0
    scale: float = Field(default=1.0, gt=0)
    origin: Point = (0.0, 0.0)
    rectified_size: tuple[int, int] | None = None

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check_shape(self):
        pts = np.asarray(self.corners, dtype=float)
        edges = np.roll(pts, -1, axis=0) - pts
        nxt = np.roll(edges, -1, axis=0)
        cross = edges[:, 0] * nxt[:, 1] - edges[:, 1] * nxt[:, 0]
        if not (np.all(cross > 0) or np.all(cross < 0)):
            raise ValueError(f"Screen quad {self.corners} is not convex")
        if _polygon_area(pts) <= 0:
            raise ValueError(f"Screen quad {self.corners} has no positive area")
        if abs(self.deflection_angle) >= math.pi / 2:
            raise ValueError(
                f"Deflection {math.degrees(self.deflection_angle):.1f}° is outside (-90°, 90°)"
            )
        return self

    @property
    def corner_array(self) -> FloatArray:
        return np.asarray(self.corners, dtype=float)


class CalibrationResult(BaseModel):
    intrinsics: CameraIntrinsics
    reprojection_error: float
    views: int

    def to_json(self) -> str:
        doc = self.intrinsics.model_dump()
        doc["reprojection_error"] = self.reprojection_error
        doc["views"] = self.views
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "CalibrationResult":
        doc = json.loads(text)
        error = doc.pop("reprojection_error")
        views = doc.pop("views")
        return cls(intrinsics=CameraIntrinsics(**doc), reprojection_error=error, views=views)


def _polygon_area(pts: FloatArray) -> float:
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


# --- Projection ---


def distort_normalized(xy: FloatArray, k1: float) -> FloatArray:
    if k1 == 0.0:
        return xy
    r2 = np.sum(xy * xy, axis=-1, keepdims=True)
    return xy * (1.0 + k1 * r2)


def undistort_normalized(xy: FloatArray, k1: float, iterations: int = 20) -> FloatArray:
    if k1 == 0.0:
        return xy
    und = xy.copy()
    for _ in range(iterations):
        r2 = np.sum(und * und, axis=-1, keepdims=True)
        und = xy / (1.0 + k1 * r2)
    return und


def pixels_to_normalized(i: CameraIntrinsics, pixels: FloatArray) -> FloatArray:
    y = (pixels[..., 1] - i.cy) / i.fy
    x = (pixels[..., 0] - i.cx - i.s * y) / i.fx
    return np.stack([x, y], axis=-1)


def normalized_to_pixels(i: CameraIntrinsics, xy: FloatArray) -> FloatArray:
    u = i.fx * xy[..., 0] + i.s * xy[..., 1] + i.cx
    v = i.fy * xy[..., 1] + i.cy
    return np.stack([u, v], axis=-1)


def distort_pixels(i: CameraIntrinsics, pixels: npt.ArrayLike) -> FloatArray:
    """Ideal (distortion-free) pixels to where the lens actually images them."""
    pts = np.asarray(pixels, dtype=float)
    return normalized_to_pixels(i, distort_normalized(pixels_to_normalized(i, pts), i.k1))


def undistort_pixels(i: CameraIntrinsics, pixels: npt.ArrayLike) -> FloatArray:
    pts = np.asarray(pixels, dtype=float)
    return normalized_to_pixels(i, undistort_normalized(pixels_to_normalized(i, pts), i.k1))


def project(i: CameraIntrinsics, pose: CameraPose, p: npt.ArrayLike) -> FloatArray:
    """
    Project world points (shape (3,) or (N, 3)) to pixels.

    Raises:
        BehindCameraError: if any point has non-positive camera-frame depth.
    """
    pts = np.asarray(p, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    cam = pts @ pose.rotation_matrix.T + pose.translation_vector
    if np.any(cam[:, 2] <= 0):
        bad = pts[np.argmin(cam[:, 2])]
        raise BehindCameraError(f"World point {bad.tolist()} is behind the camera")
    xy = cam[:, :2] / cam[:, 2:3]
    pix = normalized_to_pixels(i, distort_normalized(xy, i.k1))
    return pix[0] if single else pix


def plane_homography(i: CameraIntrinsics, pose: CameraPose) -> Homography:
    """Map from the world plane Z = 0 (mm) to ideal, undistorted pixels."""
    r = pose.rotation_matrix
    m = i.matrix @ np.column_stack([r[:, 0], r[:, 1], pose.translation_vector])
    return Homography(matrix=m)


# --- Homography estimation ---


def _hartley_normalization(pts: FloatArray) -> FloatArray:
    centroid = pts.mean(axis=0)
    mean_dist = np.mean(np.linalg.norm(pts - centroid, axis=1))
    if mean_dist < 1e-12:
        raise DegeneratePointsError("All points coincide")
    k = math.sqrt(2.0) / mean_dist
    return np.array(
        [[k, 0.0, -k * centroid[0]], [0.0, k, -k * centroid[1]], [0.0, 0.0, 1.0]]
    )


def _has_collinear_triple(pts: FloatArray, tol: float = 1e-9) -> bool:
    n = len(pts)
    scale = max(1.0, float(np.ptp(pts, axis=0).max()))
    for a in range(n):
        for b in range(a + 1, n):
            for c in range(b + 1, n):
                d1 = pts[b] - pts[a]
                d2 = pts[c] - pts[a]
                if abs(d1[0] * d2[1] - d1[1] * d2[0]) <= tol * scale * scale:
                    return True
    return False


def estimate_homography(src: npt.ArrayLike, dst: npt.ArrayLike) -> Homography:
    """
    Normalized direct linear transform from ≥ 4 point pairs.

    Raises:
        DegeneratePointsError: fewer than 4 pairs, collinear source points, or a
            rank-deficient system.
    """
    s = np.asarray(src, dtype=float)
    d = np.asarray(dst, dtype=float)
    if s.shape != d.shape or s.ndim != 2 or s.shape[1] != 2:
        raise DegeneratePointsError(
            f"Point sets must both be (N, 2), got {s.shape} and {d.shape}"
        )
    if len(s) < 4:
        raise DegeneratePointsError(f"Need ≥ 4 point pairs, got {len(s)}")
    if len(s) == 4 and _has_collinear_triple(s):
        raise DegeneratePointsError("Three of the four source points are collinear")

    ts = _hartley_normalization(s)
    td = _hartley_normalization(d)
    sn = np.hstack([s, np.ones((len(s), 1))]) @ ts.T
    dn = np.hstack([d, np.ones((len(d), 1))]) @ td.T

    rows = []
    for (x, y, _), (u, v, _) in zip(sn, dn, strict=True):
        rows.append([-x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u])
        rows.append([0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v])
    a = np.asarray(rows)
    _, sv, vt = np.linalg.svd(a)
    if sv[7] < 1e-10 * sv[0]:
        raise DegeneratePointsError("Point configuration does not determine a homography")
    hn = vt[-1].reshape(3, 3)
    h = np.linalg.inv(td) @ hn @ ts
    return Homography(matrix=h)


# --- Calibration ---


def _v_ij(h: FloatArray, i: int, j: int) -> FloatArray:
    hi = h[:, i]
    hj = h[:, j]
    return np.array(
        [
            hi[0] * hj[0],
            hi[0] * hj[1] + hi[1] * hj[0],
            hi[1] * hj[1],
            hi[2] * hj[0] + hi[0] * hj[2],
            hi[2] * hj[1] + hi[1] * hj[2],
            hi[2] * hj[2],
        ]
    )


def _intrinsics_from_b(b: FloatArray) -> FloatArray:
    if b[0] < 0:
        b = -b
    b11, b12, b22, b13, b23, b33 = b
    den = b11 * b22 - b12 * b12
    if b11 <= 0 or den <= 0:
        raise DegenerateConfigurationError(
            "Views do not constrain the intrinsics (image of the absolute conic is not positive definite)"
        )
    v0 = (b12 * b13 - b11 * b23) / den
    lam = b33 - (b13 * b13 + v0 * (b12 * b13 - b11 * b23)) / b11
    if lam / b11 <= 0:
        raise DegenerateConfigurationError("Views do not constrain the focal lengths")
    alpha = math.sqrt(lam / b11)
    beta = math.sqrt(lam * b11 / den)
    gamma = -b12 * alpha * alpha * beta / lam
    u0 = gamma * v0 / beta - b13 * alpha * alpha / lam
    return np.array([[alpha, gamma, u0], [0.0, beta, v0], [0.0, 0.0, 1.0]])


def _extrinsics(k: FloatArray, h: FloatArray) -> tuple[FloatArray, FloatArray]:
    kinv = np.linalg.inv(k)
    lam = 1.0 / np.linalg.norm(kinv @ h[:, 0])
    r1 = lam * (kinv @ h[:, 0])
    r2 = lam * (kinv @ h[:, 1])
    t = lam * (kinv @ h[:, 2])
    if t[2] < 0:
        r1, r2, t = -r1, -r2, -t
    r = np.column_stack([r1, r2, np.cross(r1, r2)])
    u, _, vt = np.linalg.svd(r)
    r = u @ vt
    if np.linalg.det(r) < 0:
        u[:, -1] *= -1
        r = u @ vt
    return r, t


def _reprojection_residuals(
    params: FloatArray,
    worlds: list[FloatArray],
    pixels: list[FloatArray],
    estimate_k1: bool,
) -> FloatArray:
    fx, fy, cx, cy, s = params[:5]
    k1 = params[5] if estimate_k1 else 0.0
    offset = 6 if estimate_k1 else 5
    out = []
    for n, (w, p) in enumerate(zip(worlds, pixels, strict=True)):
        rv = params[offset + 6 * n : offset + 6 * n + 3]
        t = params[offset + 6 * n + 3 : offset + 6 * n + 6]
        r = Rotation.from_rotvec(rv).as_matrix()
        cam = w @ r.T + t
        xy = cam[:, :2] / cam[:, 2:3]
        r2 = np.sum(xy * xy, axis=1)
        xd = xy[:, 0] * (1.0 + k1 * r2)
        yd = xy[:, 1] * (1.0 + k1 * r2)
        u = fx * xd + s * yd + cx
        v = fy * yd + cy
        out.append(np.column_stack([u - p[:, 0], v - p[:, 1]]).ravel())
    return np.concatenate(out)


def _mean_reprojection_error(residuals: FloatArray) -> float:
    pairs = residuals.reshape(-1, 2)
    return float(np.mean(np.linalg.norm(pairs, axis=1)))


def calibrate(
    views: Sequence[ChessboardView],
    refine: bool = True,
    estimate_k1: bool = False,
    max_iterations: int = 20,
    step_tolerance: float = 1e-10,
) -> CalibrationResult:
    """
    Planar calibration from chessboard views.

    The closed-form solution comes from the per-view homographies; when `refine`
    is set it is polished by a Levenberg-Marquardt minimization of the
    reprojection error (capped at `max_iterations` Jacobian evaluations, step
    tolerance `step_tolerance`). The refined estimate is kept only if it lowers
    the mean reprojection error.

    Raises:
        InsufficientViewsError: fewer than 3 views.
        DegenerateConfigurationError: the views do not determine the intrinsics,
            e.g. they differ only by translation.
    """
    if len(views) < 3:
        raise InsufficientViewsError(
            f"Calibration needs at least 3 views for the 5-parameter model, got {len(views)}"
        )

    worlds2d = [np.asarray(v.world, dtype=float) for v in views]
    pixels = [np.asarray(v.pixels, dtype=float) for v in views]
    worlds = [np.hstack([w, np.zeros((len(w), 1))]) for w in worlds2d]

    norm = _hartley_normalization(np.vstack(pixels))
    homographies = []
    constraints = []
    for w, p in zip(worlds2d, pixels, strict=True):
        p_norm = np.hstack([p, np.ones((len(p), 1))]) @ norm.T
        hn = estimate_homography(w, p_norm[:, :2]).matrix
        hn = hn / np.linalg.norm(hn)
        constraints.append(_v_ij(hn, 0, 1))
        constraints.append(_v_ij(hn, 0, 0) - _v_ij(hn, 1, 1))
        homographies.append(np.linalg.inv(norm) @ hn)
    v = np.asarray(constraints)
    v = v / np.linalg.norm(v, axis=1, keepdims=True)
    _, sv, vt = np.linalg.svd(v)
    if len(sv) < 6 or sv[4] < 1e-9 * sv[0]:
        raise DegenerateConfigurationError(
            "Calibration views are degenerate (e.g. related by pure translation)"
        )
    k_norm = _intrinsics_from_b(vt[-1])
    k = np.linalg.inv(norm) @ k_norm
    k = k / k[2, 2]

    params = [k[0, 0], k[1, 1], k[0, 2], k[1, 2], k[0, 1]]
    if estimate_k1:
        params.append(0.0)
    for h in homographies:
        r, t = _extrinsics(k, h)
        params.extend(Rotation.from_matrix(r).as_rotvec().tolist())
        params.extend(t.tolist())
    p0 = np.asarray(params, dtype=float)

    best = p0
    best_error = _mean_reprojection_error(
        _reprojection_residuals(p0, worlds, pixels, estimate_k1)
    )
    log.debug(f"Closed-form calibration reprojection error {best_error:.6f} px")

    if refine:
        result = least_squares(
            _reprojection_residuals,
            p0,
            args=(worlds, pixels, estimate_k1),
            method="lm",
            x_scale="jac",
            xtol=step_tolerance,
            ftol=1e-12,
            gtol=1e-12,
            max_nfev=max_iterations * (len(p0) + 1),
        )
        refined_error = _mean_reprojection_error(result.fun)
        log.debug(
            f"Refined calibration reprojection error {refined_error:.6f} px after {result.nfev} evaluations"
        )
        if refined_error < best_error:
            best, best_error = result.x, refined_error

    intrinsics = CameraIntrinsics(
        fx=float(best[0]),
        fy=float(best[1]),
        cx=float(best[2]),
        cy=float(best[3]),
        s=float(best[4]),
        k1=float(best[5]) if estimate_k1 else 0.0,
    )
    return CalibrationResult(
        intrinsics=intrinsics, reprojection_error=best_error, views=len(views)
    )


# --- Warping and rectification ---


_HALF_PIXEL = np.array([[1.0, 0.0, 0.5], [0.0, 1.0, 0.5], [0.0, 0.0, 1.0]])
_HALF_PIXEL_INV = np.array([[1.0, 0.0, -0.5], [0.0, 1.0, -0.5], [0.0, 0.0, 1.0]])


def warp_perspective(
    image: npt.NDArray[np.uint8],
    h: Homography,
    out_size: tuple[int, int],
    background: int = 0,
) -> npt.NDArray[np.uint8]:
    """Warp `image` by `h` (source pixels → destination pixels) with bilinear sampling."""
    m = _HALF_PIXEL_INV @ h.matrix @ _HALF_PIXEL
    width, height = out_size
    border: Any = (background,) * 4 if image.ndim == 3 else background
    return cv2.warpPerspective(
        image,
        m,
        (int(width), int(height)),
        flags=cv2.INTER_LINEAR,
        borderMode=cv2.BORDER_CONSTANT,
        borderValue=border,
    )


def undistort_image(
    photo: npt.NDArray[np.uint8], i: CameraIntrinsics, background: int = 0
) -> npt.NDArray[np.uint8]:
    """First correction step: remove radial distortion. A copy when k1 = 0."""
    if i.k1 == 0.0:
        return photo.copy()
    h, w = photo.shape[:2]
    xs, ys = np.meshgrid(np.arange(w) + 0.5, np.arange(h) + 0.5)
    ideal = np.stack([xs, ys], axis=-1)
    src = distort_pixels(i, ideal) - 0.5
    map_x = src[..., 0].astype(np.float32)
    map_y = src[..., 1].astype(np.float32)
    return cv2.remap(
        photo,
        map_x,
        map_y,
        interpolation=cv2.INTER_LINEAR,
        borderMode=cv2.BORDER_CONSTANT,
        borderValue=background,
    )


def rectify_screen(
    photo: npt.NDArray[np.uint8],
    quad: ScreenQuad,
    out_size: tuple[int, int],
    background: int = 0,
) -> npt.NDArray[np.uint8]:
    """
    Second correction step: warp the quad to an upright `out_size` rectangle.

    Raises:
        QuadOutOfBoundsError: a corner lies outside the photo.
    """
    h, w = photo.shape[:2]
    corners = quad.corner_array
    tol = 0.5
    if (
        np.any(corners[:, 0] < -tol)
        or np.any(corners[:, 1] < -tol)
        or np.any(corners[:, 0] > w + tol)
        or np.any(corners[:, 1] > h + tol)
    ):
        raise QuadOutOfBoundsError(
            f"Screen quad {corners.round(2).tolist()} exceeds the {w}x{h} photo"
        )
    out_w, out_h = out_size
    target = np.array([[0.0, 0.0], [out_w, 0.0], [out_w, out_h], [0.0, out_h]])
    homography = estimate_homography(corners, target)
    return warp_perspective(photo, homography, (out_w, out_h), background)


def order_corners(points: npt.ArrayLike) -> FloatArray:
    """Order four corners clockwise (in image coordinates) starting at the top-left."""
    pts = np.asarray(points, dtype=float).reshape(4, 2)
    centroid = pts.mean(axis=0)
    angles = np.arctan2(pts[:, 1] - centroid[1], pts[:, 0] - centroid[0])
    pts = pts[np.argsort(angles)]
    edges = np.roll(pts, -1, axis=0) - pts
    lengths = np.linalg.norm(edges, axis=1)
    alignment = edges[:, 0] / np.maximum(lengths, 1e-12)
    start = int(np.argmax(alignment))
    return np.roll(pts, -start, axis=0)


def measure_deflection(
    corners: npt.ArrayLike,
    physical_screen_size: float | tuple[float, float],
    rectified_width: float | None = None,
) -> tuple[float, float]:
    """
    Deflection angle (radians) and scale (mm per pixel) of a screen quad.

    The angle is the mean signed angle of the top and bottom edges against the
    X axis. The scale divides the physical width by `rectified_width` when the
    screen is rectified to a known width, else by the mean top/bottom edge length.

    Raises:
        DegenerateQuadError: a zero-length edge.
    """
    pts = np.asarray(corners, dtype=float).reshape(4, 2)
    tl, tr, br, bl = pts
    edges = [tr - tl, br - tr, bl - br, tl - bl]
    if min(float(np.linalg.norm(e)) for e in edges) < 1e-9:
        raise DegenerateQuadError(f"Quad {pts.tolist()} has a zero-length edge")
    top = tr - tl
    bottom = br - bl
    angle = 0.5 * (math.atan2(top[1], top[0]) + math.atan2(bottom[1], bottom[0]))
    physical_width = (
        physical_screen_size[0]
        if isinstance(physical_screen_size, tuple)
        else physical_screen_size
    )
    width_px = (
        rectified_width
        if rectified_width is not None
        else 0.5 * (float(np.linalg.norm(top)) + float(np.linalg.norm(bottom)))
    )
    return angle, physical_width / width_px


def locate_quad(
    quad: ScreenQuad,
    intrinsics: CameraIntrinsics,
    pose: CameraPose,
    physical_screen_size: tuple[float, float],
    rectified_size: tuple[int, int],
) -> ScreenQuad:
    """
    Attach the arm-frame mapping to a detected quad.

    The corners are taken back to the world plane through the calibrated camera,
    so origin and deflection are in the arm base frame; the scale is mm per
    rectified pixel.
    """
    world = plane_homography(intrinsics, pose).inverse().apply(quad.corner_array)
    angle, scale = measure_deflection(world, physical_screen_size, rectified_size[0])
    return quad.model_copy(
        update={
            "deflection_angle": angle,
            "scale": scale,
            "origin": (float(world[0, 0]), float(world[0, 1])),
            "rectified_size": rectified_size,
        }
    )
