import json
import math

import numpy as np
import pytest
from scipy.spatial.transform import Rotation

from armbench.camera import (
    CalibrationResult,
    CameraIntrinsics,
    CameraPose,
    ChessboardView,
    Homography,
    ScreenQuad,
    calibrate,
    distort_pixels,
    estimate_homography,
    locate_quad,
    measure_deflection,
    order_corners,
    plane_homography,
    project,
    rectify_screen,
    undistort_image,
    undistort_pixels,
    warp_perspective,
)
from armbench.errors import (
    BehindCameraError,
    DegenerateConfigurationError,
    DegeneratePointsError,
    DegenerateQuadError,
    InsufficientViewsError,
    QuadOutOfBoundsError,
)

TRUE = CameraIntrinsics(fx=800, fy=820, cx=320, cy=240)
TILTS = [(20, 0, 0), (0, 20, 5), (-20, 10, 0), (15, -25, 10), (-10, -20, -5)]


def board_points(cols=9, rows=6, square=20.0):
    xs, ys = np.meshgrid(np.arange(cols) * square, np.arange(rows) * square)
    pts = np.column_stack([xs.ravel(), ys.ravel()])
    return pts - pts.mean(axis=0)


def make_views(intrinsics, tilts, noise=0.0, seed=0):
    rng = np.random.default_rng(seed)
    world = board_points()
    views = []
    for tilt in tilts:
        r = Rotation.from_euler("xyz", tilt, degrees=True).as_matrix()
        pose = CameraPose.from_rt(r, np.array([0.0, 0.0, 500.0]))
        pix = project(intrinsics, pose, np.column_stack([world, np.zeros(len(world))]))
        pix = pix + rng.normal(0.0, noise, size=pix.shape) if noise else pix
        views.append(
            ChessboardView(
                world=[tuple(p) for p in world], pixels=[tuple(p) for p in pix], grid=(9, 6)
            )
        )
    return views


def rect_quad(x0, y0, w, h, **kwargs):
    return ScreenQuad(corners=((x0, y0), (x0 + w, y0), (x0 + w, y0 + h), (x0, y0 + h)), **kwargs)


# --- project ---


def test_project_identity_intrinsics():
    i = CameraIntrinsics(fx=1, fy=1, cx=0, cy=0)
    assert project(i, CameraPose(), [1, 2, 1]) == pytest.approx([1, 2])


def test_project_principal_point():
    i = CameraIntrinsics(fx=500, fy=500, cx=320, cy=240)
    assert project(i, CameraPose(), [0, 0, 7]) == pytest.approx([320, 240])


def test_project_matrix_product():
    i = CameraIntrinsics(fx=800, fy=820, cx=320, cy=240, s=2)
    k = np.array([[800, 2, 320], [0, 820, 240], [0, 0, 1]], dtype=float)
    p = np.array([10.0, -5.0, 100.0])
    expected = k @ (p / p[2])
    assert project(i, CameraPose(), p) == pytest.approx(expected[:2])


def test_project_behind_camera():
    with pytest.raises(BehindCameraError):
        project(TRUE, CameraPose(), [0, 0, -1])


def test_project_is_affine_in_normalized_coordinates():
    offset = project(TRUE, CameraPose(), [3, 4, 10]) - np.array([TRUE.cx, TRUE.cy])
    doubled = project(TRUE, CameraPose(), [6, 8, 10]) - np.array([TRUE.cx, TRUE.cy])
    assert doubled == pytest.approx(2 * offset)


def test_plane_homography_matches_projection():
    i = CameraIntrinsics(fx=800, fy=800, cx=640, cy=360)
    pose = CameraPose.look_down(0, 150, 160)
    world = np.array([[-27.0, 96.0, 0.0], [27.0, 204.0, 0.0], [3.5, 150.0, 0.0]])
    expected = project(i, pose, world)
    assert plane_homography(i, pose).apply(world[:, :2]) == pytest.approx(expected)
    assert expected[2] == pytest.approx([640 + 5 * 3.5, 360])


# --- homography ---


def test_homography_identity():
    square = [(0, 0), (1, 0), (1, 1), (0, 1)]
    h = estimate_homography(square, square)
    assert h.matrix == pytest.approx(np.eye(3), abs=1e-9)


def test_homography_rotation():
    square = [(0, 0), (1, 0), (1, 1), (0, 1)]
    rotated = [(-y, x) for x, y in square]
    h = estimate_homography(square, rotated)
    assert h.matrix == pytest.approx(np.array([[0, -1, 0], [1, 0, 0], [0, 0, 1]]), abs=1e-9)
    assert h.matrix[2, 2] == 1.0


def test_homography_maps_random_pairs():
    rng = np.random.default_rng(5)
    base = np.array([[0, 0], [100, 0], [100, 100], [0, 100]], dtype=float)
    for _ in range(20):
        src = base + rng.uniform(-15, 15, size=(4, 2))
        dst = base * 2 + rng.uniform(-30, 30, size=(4, 2)) + 50
        h = estimate_homography(src, dst)
        assert np.abs(h.apply(src) - dst).max() < 1e-8


def test_homography_round_trip():
    src = [(0, 0), (200, 10), (190, 120), (-5, 100)]
    dst = [(10, 20), (300, 0), (320, 250), (0, 230)]
    h = estimate_homography(src, dst)
    pts = np.random.default_rng(1).uniform(20, 90, size=(50, 2))
    back = h.inverse().apply(h.apply(pts))
    assert np.abs(back - pts).max() < 1e-6


def test_homography_compose():
    shift = Homography(matrix=[[1, 0, 5], [0, 1, -2], [0, 0, 1]])
    scale = Homography(matrix=[[2, 0, 0], [0, 2, 0], [0, 0, 1]])
    assert shift.compose(scale).apply((1, 1)) == pytest.approx([7, 0])


def test_homography_degenerate_points():
    with pytest.raises(DegeneratePointsError, match="≥ 4"):
        estimate_homography([(0, 0), (1, 0), (1, 1)], [(0, 0), (1, 0), (1, 1)])
    with pytest.raises(DegeneratePointsError, match="collinear"):
        estimate_homography([(0, 0), (1, 0), (2, 0), (0, 1)], [(0, 0), (1, 0), (2, 1), (0, 1)])


def test_homography_normalized_bottom_right():
    h = Homography(matrix=[[2, 0, 2], [0, 2, 4], [0, 0, 2]])
    assert h.matrix[2, 2] == 1.0
    assert h.apply((0, 0)) == pytest.approx([1, 2])


# --- calibrate ---


def test_calibrate_noiseless():
    result = calibrate(make_views(TRUE, TILTS))
    got = result.intrinsics
    for name in ("fx", "fy", "cx", "cy"):
        assert getattr(got, name) == pytest.approx(getattr(TRUE, name), rel=1e-3)
    assert abs(got.s) < 1e-2
    assert result.reprojection_error < 1e-6
    assert result.views == 5


def test_calibrate_with_corner_noise():
    result = calibrate(make_views(TRUE, TILTS, noise=0.2, seed=42))
    got = result.intrinsics
    for name in ("fx", "fy", "cx", "cy"):
        assert getattr(got, name) == pytest.approx(getattr(TRUE, name), rel=0.01)
    assert abs(got.s) <= 2.0
    assert result.reprojection_error < 0.5


def test_calibrate_estimates_k1():
    distorted = TRUE.model_copy(update={"k1": -0.05})
    result = calibrate(make_views(distorted, TILTS), estimate_k1=True)
    assert result.intrinsics.k1 == pytest.approx(-0.05, abs=1e-2)
    assert result.intrinsics.fx == pytest.approx(800, rel=0.01)


def test_calibrate_closed_form_only():
    result = calibrate(make_views(TRUE, TILTS), refine=False)
    assert result.intrinsics.fx == pytest.approx(800, rel=1e-3)


def test_calibrate_insufficient_views():
    with pytest.raises(InsufficientViewsError, match="got 2"):
        calibrate(make_views(TRUE, TILTS[:2]))


def test_calibrate_pure_translation_is_degenerate():
    world = board_points()
    views = []
    for t in ([0, 0, 500], [30, -10, 520], [-25, 15, 480]):
        pose = CameraPose(translation=tuple(float(v) for v in t))
        pix = project(TRUE, pose, np.column_stack([world, np.zeros(len(world))]))
        views.append(
            ChessboardView(world=[tuple(p) for p in world], pixels=[tuple(p) for p in pix], grid=(9, 6))
        )
    with pytest.raises(DegenerateConfigurationError):
        calibrate(views)


def test_calibration_result_json_is_sorted_and_round_trips():
    result = CalibrationResult(intrinsics=TRUE, reprojection_error=0.12, views=5)
    text = result.to_json()
    doc = json.loads(text)
    assert list(doc) == sorted(doc)
    assert set(doc) == {"cx", "cy", "fx", "fy", "k1", "s", "reprojection_error", "views"}
    assert CalibrationResult.from_json(text) == result


# --- rectification and deflection ---


def test_rectify_axis_aligned_quad_is_exact_crop():
    photo = np.random.default_rng(0).integers(0, 256, size=(200, 300), dtype=np.uint8)
    quad = rect_quad(40, 30, 100, 80)
    out = rectify_screen(photo, quad, (100, 80))
    assert out.shape == (80, 100)
    assert np.array_equal(out, photo[30:110, 40:140])


def test_rectify_own_bounds_is_identity():
    image = np.random.default_rng(2).integers(0, 256, size=(60, 40), dtype=np.uint8)
    out = rectify_screen(image, rect_quad(0, 0, 40, 60), (40, 60))
    assert np.mean(np.abs(out.astype(int) - image.astype(int))) <= 1.0


def test_rectify_quad_out_of_bounds():
    photo = np.zeros((100, 100), dtype=np.uint8)
    with pytest.raises(QuadOutOfBoundsError):
        rectify_screen(photo, rect_quad(50, 50, 80, 20), (80, 20))


def test_measure_deflection_axis_aligned():
    angle, scale = measure_deflection(rect_quad(10, 10, 300, 600).corners, (60.0, 120.0))
    assert angle == pytest.approx(0.0)
    assert scale == pytest.approx(0.2)


def rotated_corners(degrees, w=300, h=600, center=(500, 400)):
    a = math.radians(degrees)
    r = np.array([[math.cos(a), -math.sin(a)], [math.sin(a), math.cos(a)]])
    local = np.array([[-w / 2, -h / 2], [w / 2, -h / 2], [w / 2, h / 2], [-w / 2, h / 2]])
    return local @ r.T + np.asarray(center)


def block_screen():
    screen = np.full((160, 100), 200, dtype=np.uint8)
    screen[20:60, 10:90] = 60
    screen[90:140, 30:70] = 120
    return screen


@pytest.mark.parametrize(
    "corners",
    [
        rotated_corners(10, w=100, h=160, center=(200, 200)),
        np.array([[150.0, 100.0], [262.0, 112.0], [270.0, 300.0], [138.0, 312.0]]),
    ],
    ids=["rotated", "perspective"],
)
def test_rectify_recovers_warped_screen(corners):
    screen = block_screen()
    outline = [(0, 0), (100, 0), (100, 160), (0, 160)]
    photo = warp_perspective(screen, estimate_homography(outline, corners), (400, 400), 200)
    quad = ScreenQuad(corners=tuple((float(x), float(y)) for x, y in corners))
    out = rectify_screen(photo, quad, (100, 160))
    diff = np.abs(out.astype(int) - screen.astype(int))
    assert diff.mean() <= 4.0
    assert diff[4:-4, 4:-4].mean() <= 3.0


def test_measure_deflection_rotated_and_odd():
    plus, _ = measure_deflection(rotated_corners(7), 60.0)
    minus, _ = measure_deflection(rotated_corners(-7), 60.0)
    assert math.degrees(plus) == pytest.approx(7.0, abs=0.5)
    assert minus == pytest.approx(-plus)


def test_measure_deflection_uses_rectified_width():
    _, scale = measure_deflection(rotated_corners(3, w=290), 60.0, rectified_width=300)
    assert scale == pytest.approx(0.2)


def test_measure_deflection_degenerate():
    with pytest.raises(DegenerateQuadError):
        measure_deflection([(0, 0), (0, 0), (10, 10), (0, 10)], 60.0)


def test_order_corners():
    corners = rotated_corners(10)
    shuffled = corners[[2, 0, 3, 1]]
    assert order_corners(shuffled) == pytest.approx(corners)


def test_screen_quad_rejects_concave_and_large_deflection():
    with pytest.raises(ValueError, match="convex"):
        ScreenQuad(corners=((0, 0), (10, 0), (2, 2), (0, 10)))
    with pytest.raises(ValueError, match="Deflection"):
        rect_quad(0, 0, 10, 10, deflection_angle=math.pi / 2)


def test_locate_quad_recovers_placement():
    i = CameraIntrinsics(fx=800, fy=800, cx=640, cy=360)
    pose = CameraPose.look_down(0, 150, 160)
    h = plane_homography(i, pose)
    world = [(-27, 96), (27, 96), (27, 204), (-27, 204)]
    pixels = h.apply(world)
    quad = ScreenQuad(corners=tuple(tuple(p) for p in pixels))
    located = locate_quad(quad, i, pose, (54.0, 108.0), (270, 540))
    assert located.origin == pytest.approx((-27, 96))
    assert located.deflection_angle == pytest.approx(0.0, abs=1e-9)
    assert located.scale == pytest.approx(0.2)
    assert located.rectified_size == (270, 540)


# --- distortion ---


def test_undistort_image_without_k1_is_a_copy():
    photo = np.arange(100, dtype=np.uint8).reshape(10, 10)
    out = undistort_image(photo, TRUE)
    assert np.array_equal(out, photo)
    assert out is not photo


def test_distortion_round_trip():
    i = TRUE.model_copy(update={"k1": 0.08})
    pts = np.array([[100.0, 50.0], [320.0, 240.0], [600.0, 400.0]])
    assert undistort_pixels(i, distort_pixels(i, pts)) == pytest.approx(pts, abs=1e-6)
    assert distort_pixels(i, [[320.0, 240.0]]) == pytest.approx([[320.0, 240.0]])
