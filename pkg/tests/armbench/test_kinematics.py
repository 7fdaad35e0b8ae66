import math
import time

import numpy as np
import pytest
from pydantic import ValidationError

from armbench.camera import ScreenQuad
from armbench.errors import (
    DegenerateTargetError,
    OutOfScreenError,
    TargetOutOfBoundsError,
    UnknownCharacterError,
    UnreachableError,
)
from armbench.kinematics import (
    ArmConfig,
    ArmKind,
    AtomicMove,
    CompoundGesture,
    Direction,
    GestureKind,
    JointState,
    LinkLengths,
    PlanarPose,
    TipPosition,
    apply_moves,
    decompose_to_atomics,
    forward_kinematics,
    inverse_kinematics,
    path_length,
    screen_to_world,
    synthesize_gesture,
    world_to_screen,
)

SHORT = LinkLengths(l1=100, l2=100, l3=50)


def quad_at(origin, size=(50, 50), scale=1.0, deflection=0.0):
    w, h = size
    return ScreenQuad(
        corners=((0, 0), (w, 0), (w, h), (0, h)),
        deflection_angle=deflection,
        scale=scale,
        origin=origin,
        rectified_size=size,
    )


def summary(moves):
    return [(m.direction.value, pytest.approx(m.distance)) for m in moves]


# --- Forward and inverse kinematics ---


def test_forward_kinematics_fully_extended():
    pose = forward_kinematics(JointState(theta1=0, theta2=0, theta3=0), SHORT)
    assert pose.x == pytest.approx(250)
    assert pose.y == pytest.approx(0, abs=1e-12)
    assert pose.alpha == pytest.approx(0)


def test_forward_kinematics_rotated():
    pose = forward_kinematics(JointState(theta1=math.pi / 2, theta2=0, theta3=0), SHORT)
    assert pose.x == pytest.approx(0, abs=1e-9)
    assert pose.y == pytest.approx(250)
    assert pose.alpha == pytest.approx(math.pi / 2)


def test_forward_kinematics_hand_evaluation():
    links = LinkLengths(l1=120, l2=100, l3=60)
    t1, t2, t3 = 0.5236, 0.7854, -0.2618
    pose = forward_kinematics(JointState(theta1=t1, theta2=t2, theta3=t3), links)
    x = 120 * math.cos(t1) + 100 * math.cos(t1 + t2) + 60 * math.cos(t1 + t2 + t3)
    y = 120 * math.sin(t1) + 100 * math.sin(t1 + t2) + 60 * math.sin(t1 + t2 + t3)
    assert pose.x == pytest.approx(x, abs=1e-12)
    assert pose.y == pytest.approx(y, abs=1e-12)
    assert pose.alpha == pytest.approx(t1 + t2 + t3)


def test_inverse_kinematics_fully_extended():
    joints = inverse_kinematics(PlanarPose(x=250, y=0, alpha=0), SHORT)
    assert joints.theta1 == pytest.approx(0, abs=1e-9)
    assert joints.theta2 == pytest.approx(0, abs=1e-6)
    assert joints.theta3 == pytest.approx(0, abs=1e-6)


def test_inverse_kinematics_unreachable():
    with pytest.raises(UnreachableError, match="out of reach"):
        inverse_kinematics(PlanarPose(x=1000, y=0, alpha=0), SHORT)


def test_inverse_kinematics_degenerate():
    with pytest.raises(DegenerateTargetError):
        inverse_kinematics(PlanarPose(x=50, y=0, alpha=0), SHORT)


def test_fk_ik_round_trip_random_targets():
    links = LinkLengths(l1=120, l2=100, l3=60)
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(10_000):
        t1, t3 = rng.uniform(-math.pi, math.pi, size=2)
        t2 = rng.uniform(0, math.pi)
        target = forward_kinematics(JointState(theta1=t1, theta2=t2, theta3=t3), links)
        joints = inverse_kinematics(target, links)
        assert 0.0 <= joints.theta2 <= math.pi
        back = forward_kinematics(joints, links)
        worst = max(worst, abs(back.x - target.x), abs(back.y - target.y))
    assert worst < 1e-6


@pytest.mark.benchmark
def test_fk_ik_round_trip_is_fast():
    links = LinkLengths(l1=120, l2=100, l3=60)
    rng = np.random.default_rng(8)
    targets = [
        forward_kinematics(JointState(theta1=t1, theta2=t2, theta3=t3), links)
        for t1, t2, t3 in zip(
            rng.uniform(-math.pi, math.pi, 10_000),
            rng.uniform(0, math.pi, 10_000),
            rng.uniform(-math.pi, math.pi, 10_000),
            strict=True,
        )
    ]
    start = time.perf_counter()
    for target in targets:
        forward_kinematics(inverse_kinematics(target, links), links)
    assert time.perf_counter() - start < 1.0


def test_inverse_kinematics_is_deterministic():
    target = PlanarPose(x=30, y=180, alpha=math.pi / 2)
    links = LinkLengths()
    assert inverse_kinematics(target, links) == inverse_kinematics(target, links)


def test_link_lengths_reject_non_positive():
    with pytest.raises(ValidationError, match="strictly positive"):
        LinkLengths(l1=0, l2=100, l3=50)


def test_link_lengths_accept_quantities():
    links = LinkLengths.model_validate({"l1": "12 cm", "l2": 100, "l3": "0.05 m"})
    assert links.l1 == pytest.approx(120)
    assert links.l3 == pytest.approx(50)
    assert links.reach == pytest.approx(270)


# --- Atomic decomposition ---


def test_decompose_axis_split():
    moves = decompose_to_atomics(
        PlanarPose(x=0, y=0, alpha=0), 10, PlanarPose(x=30, y=40, alpha=0), 10, SHORT, 10
    )
    assert summary(moves) == [("right", 30), ("forward", 40)]


def test_decompose_single_axis():
    moves = decompose_to_atomics(
        PlanarPose(x=0, y=0, alpha=0), 10, PlanarPose(x=0, y=0, alpha=0), 0, SHORT, 10
    )
    assert summary(moves) == [("down", 10)]


def test_decompose_lifts_between_pen_down_points():
    moves = decompose_to_atomics(
        PlanarPose(x=10, y=0, alpha=0), 0, PlanarPose(x=40, y=0, alpha=0), 0, SHORT, 10
    )
    assert summary(moves) == [("up", 10), ("right", 30), ("down", 10)]


def test_decompose_orders_z_by_direction():
    start = PlanarPose(x=0, y=0, alpha=0)
    end = PlanarPose(x=-20, y=30, alpha=0)
    descending = decompose_to_atomics(start, 10, end, 0, SHORT, 10)
    assert [m.direction for m in descending] == [Direction.left, Direction.forward, Direction.down]
    ascending = decompose_to_atomics(start, 0, end, 10, SHORT, 10)
    assert [m.direction for m in ascending] == [Direction.up, Direction.left, Direction.forward]


def test_decompose_vector_sum_matches_displacement():
    rng = np.random.default_rng(3)
    links = LinkLengths()
    for _ in range(200):
        x0, x1 = rng.uniform(-60, 60, size=2)
        y0, y1 = rng.uniform(110, 200, size=2)
        z0, z1 = rng.choice([0.0, 5.0, 10.0], size=2)
        start = PlanarPose(x=x0, y=y0)
        end = PlanarPose(x=x1, y=y1)
        moves = decompose_to_atomics(start, z0, end, z1, links, 10)
        end_tip = apply_moves(TipPosition(x0, y0, z0), moves)
        final = end_tip[-1] if end_tip else TipPosition(x0, y0, z0)
        assert final.x == pytest.approx(x1, abs=1e-9)
        assert final.y == pytest.approx(y1, abs=1e-9)
        assert final.z == pytest.approx(z1, abs=1e-9)


def test_decompose_propagates_unreachable():
    with pytest.raises(UnreachableError):
        decompose_to_atomics(
            PlanarPose(x=0, y=0, alpha=0), 10, PlanarPose(x=900, y=0, alpha=0), 10, SHORT, 10
        )


def test_atomic_move_rejects_negative_and_infinite():
    with pytest.raises(ValidationError):
        AtomicMove(direction=Direction.up, distance=-1)
    with pytest.raises(ValidationError):
        AtomicMove(direction=Direction.up, distance=math.inf)


# --- Path length ---


def test_path_length():
    assert path_length([(0, 0), (30, 40)]) == pytest.approx(50.0)
    assert path_length([]) == 0.0
    assert path_length([(5, 5, 0)]) == 0.0


def test_path_length_ignores_z_and_is_additive():
    a = [(0, 0, 10), (0, 0, 0), (3, 4, 0)]
    b = [(3, 4, 0), (3, 10, 10)]
    assert path_length(a) == pytest.approx(5.0)
    assert path_length(a + b[1:]) == pytest.approx(path_length(a) + path_length(b))


# --- Screen mapping ---


def test_screen_to_world_identity():
    pose = screen_to_world((10, 20), quad_at((0, 0), size=(100, 100)))
    assert (pose.x, pose.y) == pytest.approx((10, 20))


def test_screen_to_world_pure_rotation():
    # a right-angle deflection is outside what a detected quad may carry
    quad = quad_at((0, 0), size=(100, 100)).model_copy(update={"deflection_angle": math.pi / 2})
    pose = screen_to_world((10, 0), quad)
    assert (pose.x, pose.y) == pytest.approx((0, 10), abs=1e-9)


def test_screen_to_world_composed_transform():
    angle = math.radians(10)
    quad = quad_at((5, 7), size=(270, 540), scale=0.2, deflection=angle)
    for px, py in [(0, 0), (100, 50), (270, 540), (13.5, 400.25)]:
        pose = screen_to_world((px, py), quad)
        sx, sy = 0.2 * px, 0.2 * py
        assert pose.x == pytest.approx(5 + math.cos(angle) * sx - math.sin(angle) * sy)
        assert pose.y == pytest.approx(7 + math.sin(angle) * sx + math.cos(angle) * sy)


def test_screen_world_round_trip():
    quad = quad_at((-40, 120), size=(270, 540), scale=0.2, deflection=math.radians(-7))
    rng = np.random.default_rng(11)
    for px, py in rng.uniform([1, 1], [269, 539], size=(100, 2)):
        pose = screen_to_world((px, py), quad)
        back = world_to_screen((pose.x, pose.y), quad)
        assert math.dist(back, (px, py)) * 0.2 < 0.1


def test_screen_to_world_out_of_screen():
    with pytest.raises(OutOfScreenError):
        screen_to_world((60, 10), quad_at((0, 0)))
    with pytest.raises(OutOfScreenError):
        world_to_screen((-1, 10), quad_at((0, 0)))


# --- Gestures ---


@pytest.fixture
def arm():
    return ArmConfig()


def test_click_plan(arm):
    plan = synthesize_gesture(
        CompoundGesture(kind=GestureKind.click, targets=((0, 0),)),
        TipPosition(100, 150, 10),
        quad_at((100, 200)),
        arm,
    )
    assert summary(plan.moves) == [("forward", 50), ("down", 10), ("up", 10)]
    assert plan.moves[1].dwell == pytest.approx(arm.tap_dwell)
    assert plan.end == TipPosition(100, 200, 10)
    assert plan.xy_distance == pytest.approx(50)
    assert plan.seconds == pytest.approx(50 / arm.speed + arm.tap_dwell + arm.gesture_overhead)


def test_double_click_plan(arm):
    plan = synthesize_gesture(
        CompoundGesture(kind=GestureKind.double_click, targets=((10, 10),)),
        TipPosition(10, 160, 10),
        quad_at((0, 150)),
        arm,
    )
    directions = [m.direction.value for m in plan.moves]
    assert directions == ["down", "up", "down", "up"]
    assert plan.moves[1].dwell < arm.double_tap_window


def test_long_click_dwell(arm):
    plan = synthesize_gesture(
        CompoundGesture(kind=GestureKind.long_click, targets=((20, 20),)),
        TipPosition(0, 150, 10),
        quad_at((0, 150)),
        arm,
    )
    downs = [m for m in plan.moves if m.direction == Direction.down]
    assert len(downs) == 1
    assert downs[0].dwell >= arm.long_press


def test_slide_pen_down_distance_is_widget_width(arm):
    plan = synthesize_gesture(
        CompoundGesture(kind=GestureKind.slide, targets=((5, 20), (45, 20))),
        TipPosition(0, 150, 10),
        quad_at((-20, 150)),
        arm,
    )
    down_at = [i for i, m in enumerate(plan.moves) if m.direction == Direction.down][0]
    lateral = plan.moves[down_at + 1]
    assert lateral.direction == Direction.right
    assert lateral.distance == pytest.approx(40)
    assert plan.moves[-1].direction == Direction.up


def test_scroll_sweeps_bottom_to_top(arm):
    quad = quad_at((-25, 120), size=(50, 100))
    start = TipPosition(0, 170, 10)
    plan = synthesize_gesture(CompoundGesture(kind=GestureKind.scroll), start, quad, arm)
    down_at = [i for i, m in enumerate(plan.moves) if m.direction == Direction.down][0]
    assert plan.moves[down_at + 1].direction == Direction.backward
    assert plan.moves[down_at + 1].distance == pytest.approx(50)
    reverse = synthesize_gesture(
        CompoundGesture(kind=GestureKind.scroll, reverse=True), start, quad, arm
    )
    down_at = [i for i, m in enumerate(reverse.moves) if m.direction == Direction.down][0]
    assert reverse.moves[down_at + 1].direction == Direction.forward


def test_input_clicks_once_per_character(arm):
    keys = {"a": (5, 40), "b": (20, 40)}
    plan = synthesize_gesture(
        CompoundGesture(kind=GestureKind.input, targets=((25, 10),), payload="ab"),
        TipPosition(0, 150, 10),
        quad_at((-25, 150)),
        arm,
        keyboard=keys,
    )
    downs = [m for m in plan.moves if m.direction == Direction.down]
    assert len(downs) == 3


def test_input_unknown_character(arm):
    with pytest.raises(UnknownCharacterError, match="not on the soft keyboard"):
        synthesize_gesture(
            CompoundGesture(kind=GestureKind.input, targets=((25, 10),), payload="a?"),
            TipPosition(0, 150, 10),
            quad_at((-25, 150)),
            arm,
            keyboard={"a": (5, 40)},
        )


def test_gesture_target_out_of_bounds(arm):
    with pytest.raises(TargetOutOfBoundsError):
        synthesize_gesture(
            CompoundGesture(kind=GestureKind.click, targets=((60, 10),)),
            TipPosition(0, 150, 10),
            quad_at((0, 150)),
            arm,
        )


def test_gestures_start_and_end_pen_up(arm):
    quad = quad_at((-25, 130), size=(50, 80))
    start = TipPosition(0, 170, 10)
    gestures = [
        CompoundGesture(kind=GestureKind.click, targets=((10, 10),)),
        CompoundGesture(kind=GestureKind.double_click, targets=((40, 70),)),
        CompoundGesture(kind=GestureKind.long_click, targets=((25, 40),)),
        CompoundGesture(kind=GestureKind.slide, targets=((5, 5), (45, 5))),
        CompoundGesture(kind=GestureKind.scroll),
    ]
    for g in gestures:
        plan = synthesize_gesture(g, start, quad, arm)
        assert plan.tip_path[0] == start
        assert plan.end.z == pytest.approx(arm.hover_height)
        if g.kind in (GestureKind.click, GestureKind.double_click, GestureKind.long_click):
            pen_down = [
                m for m in plan.moves if m.direction not in (Direction.up, Direction.down)
            ]
            # every lateral move happens before the first press
            first_press = [m.direction for m in plan.moves].index(Direction.down)
            assert all(plan.moves.index(m) < first_press for m in pen_down)


def test_gantry_travels_farther_than_four_dof():
    quad = quad_at((0, 150))
    gesture = CompoundGesture(kind=GestureKind.click, targets=((30, 40),))
    start = TipPosition(0, 150, 10)
    joint = synthesize_gesture(gesture, start, quad, ArmConfig())
    gantry = synthesize_gesture(gesture, start, quad, ArmConfig(kind=ArmKind.xy_plane))
    assert joint.xy_distance == pytest.approx(50)
    assert gantry.xy_distance == pytest.approx(70)
    assert joint.moves == gantry.moves


def test_compound_gesture_target_counts():
    with pytest.raises(ValidationError, match="exactly 1 target"):
        CompoundGesture(kind=GestureKind.click, targets=((1, 1), (2, 2)))
    with pytest.raises(ValidationError, match="exactly 0 target"):
        CompoundGesture(kind=GestureKind.scroll, targets=((1, 1),))
    with pytest.raises(ValidationError, match="text payload"):
        CompoundGesture(kind=GestureKind.input, targets=((1, 1),))


def test_arm_config_units_and_limits():
    arm = ArmConfig.model_validate({"long_press": "800 ms", "speed": "5 cm/s", "pen_alpha": "90 deg"})
    assert arm.long_press == pytest.approx(0.8)
    assert arm.speed == pytest.approx(50)
    assert arm.pen_alpha == pytest.approx(math.pi / 2)
    with pytest.raises(ValidationError, match="double-tap window"):
        ArmConfig(double_tap_gap=0.4)
    with pytest.raises(ValidationError, match="Physical type mismatch"):
        ArmConfig.model_validate({"hover_height": "10 s"})
