"""
Planar kinematics of the 4-DOF pen arm.

Three rotary joints move the pen in the device plane; the fourth axis lifts
and lowers it. Everything here is a pure function over frozen value types.

Frames: the arm base frame is the device plane in millimeters, with +x to the
right, +y forward (away from the base, the screen's downward direction when
the device lies undeflected) and +z up from the glass.
"""

import math
from collections.abc import Mapping, Sequence
from enum import StrEnum
from typing import NamedTuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from armbench.camera import ScreenQuad
from armbench.documents import BenchBaseModel
from armbench.errors import (
    DegenerateTargetError,
    OutOfScreenError,
    TargetOutOfBoundsError,
    UnknownCharacterError,
    UnreachableError,
)
from armbench.geometry import Point
from armbench.units import Millimeters, MillimetersPerSecond, Radians, Seconds

DEFAULT_PEN_ALPHA = math.pi / 2
_ARCCOS_SLACK = 1e-12


class ArmKind(StrEnum):
    four_dof = "four_dof"
    xy_plane = "xy_plane"


class Direction(StrEnum):
    forward = "forward"
    backward = "backward"
    up = "up"
    down = "down"
    left = "left"
    right = "right"

    @property
    def unit(self) -> tuple[float, float, float]:
        return _DIRECTION_UNITS[self]


_DIRECTION_UNITS: dict[Direction, tuple[float, float, float]] = {
    Direction.right: (1.0, 0.0, 0.0),
    Direction.left: (-1.0, 0.0, 0.0),
    Direction.forward: (0.0, 1.0, 0.0),
    Direction.backward: (0.0, -1.0, 0.0),
    Direction.up: (0.0, 0.0, 1.0),
    Direction.down: (0.0, 0.0, -1.0),
}


class GestureKind(StrEnum):
    click = "click"
    double_click = "double_click"
    long_click = "long_click"
    slide = "slide"
    scroll = "scroll"
    input = "input"


WIDGET_GESTURES = (
    GestureKind.click,
    GestureKind.double_click,
    GestureKind.long_click,
    GestureKind.slide,
)


class LinkLengths(BenchBaseModel):
    l1: Millimeters = 120.0
    l2: Millimeters = 100.0
    l3: Millimeters = 60.0

    @field_validator("l1", "l2", "l3")
    @classmethod
    def _positive(cls, v: float) -> float:
        if not v > 0:
            raise ValueError(f"Link length must be strictly positive, got {v}")
        return v

    @property
    def reach(self) -> float:
        return self.l1 + self.l2 + self.l3


class ArmConfig(BenchBaseModel):
    """Arm geometry and timing, as read from the benchmark config."""

    kind: ArmKind = ArmKind.four_dof
    links: LinkLengths = Field(default_factory=LinkLengths)
    pen_alpha: Radians = DEFAULT_PEN_ALPHA
    hover_height: Millimeters = Field(default=10.0, gt=0)
    speed: MillimetersPerSecond = Field(default=50.0, gt=0)
    long_press: Seconds = Field(default=0.8, gt=0)
    double_tap_window: Seconds = Field(default=0.3, gt=0)
    double_tap_gap: Seconds = Field(default=0.1, ge=0)
    tap_dwell: Seconds = Field(default=0.1, ge=0)
    gesture_overhead: Seconds = Field(default=0.5, ge=0)
    scroll_extent: float = Field(default=0.5, gt=0, le=1)

    @model_validator(mode="after")
    def _check_double_tap(self):
        if self.double_tap_gap >= self.double_tap_window:
            raise ValueError(
                f"double_tap_gap {self.double_tap_gap} s must be shorter than the double-tap window {self.double_tap_window} s"
            )
        return self


class JointState(BaseModel):
    theta1: float
    theta2: float = Field(ge=0.0, le=math.pi)
    theta3: float
    z: float = Field(default=0.0, ge=0.0)

    model_config = ConfigDict(frozen=True)


class PlanarPose(BaseModel):
    x: float
    y: float
    alpha: float = DEFAULT_PEN_ALPHA

    model_config = ConfigDict(frozen=True)


class TipPosition(NamedTuple):
    x: float
    y: float
    z: float


class AtomicMove(BaseModel):
    direction: Direction
    distance: float = Field(ge=0.0, allow_inf_nan=False)
    dwell: float = Field(default=0.0, ge=0.0)

    model_config = ConfigDict(frozen=True)

    @property
    def vector(self) -> tuple[float, float, float]:
        ux, uy, uz = self.direction.unit
        return (ux * self.distance, uy * self.distance, uz * self.distance)


class CompoundGesture(BaseModel):
    kind: GestureKind
    targets: tuple[Point, ...] = ()
    payload: str | None = None
    reverse: bool = False

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _check_targets(self):
        expected = {
            GestureKind.slide: 2,
            GestureKind.scroll: 0,
        }.get(self.kind, 1)
        if len(self.targets) != expected:
            raise ValueError(
                f"{self.kind} takes exactly {expected} target(s), got {len(self.targets)}"
            )
        if self.kind == GestureKind.input and self.payload is None:
            raise ValueError("input gestures need a text payload")
        if self.kind != GestureKind.input and self.payload is not None:
            raise ValueError(f"{self.kind} gestures take no payload")
        return self


class GesturePlan(BaseModel):
    gesture: CompoundGesture
    moves: tuple[AtomicMove, ...]
    tip_path: tuple[TipPosition, ...]
    xy_distance: float
    dwell: float
    seconds: float

    model_config = ConfigDict(frozen=True)

    @property
    def end(self) -> TipPosition:
        return self.tip_path[-1]


# --- Kinematics ---


def forward_kinematics(joints: JointState, links: LinkLengths) -> PlanarPose:
    a1 = joints.theta1
    a2 = a1 + joints.theta2
    a3 = a2 + joints.theta3
    x = links.l1 * math.cos(a1) + links.l2 * math.cos(a2) + links.l3 * math.cos(a3)
    y = links.l1 * math.sin(a1) + links.l2 * math.sin(a2) + links.l3 * math.sin(a3)
    return PlanarPose(x=x, y=y, alpha=a3)


def inverse_kinematics(target: PlanarPose, links: LinkLengths, z: float = 0.0) -> JointState:
    """
    Elbow-down solution (theta2 in [0, π]) placing the pen at `target`.

    Raises:
        UnreachableError: the wrist point is outside the annulus reachable by l1 and l2.
        DegenerateTargetError: the wrist point coincides with the base axis.
    """
    u = target.x - links.l3 * math.cos(target.alpha)
    v = target.y - links.l3 * math.sin(target.alpha)
    r2 = u * u + v * v
    if r2 <= 1e-18 * links.reach * links.reach:
        raise DegenerateTargetError(
            f"Target ({target.x}, {target.y}) puts the wrist on the base axis"
        )
    c2 = (r2 - links.l1**2 - links.l2**2) / (2.0 * links.l1 * links.l2)
    if abs(c2) > 1.0 + _ARCCOS_SLACK:
        raise UnreachableError(
            f"Target ({target.x:.3f}, {target.y:.3f}) α={target.alpha:.3f} is out of reach of links "
            f"({links.l1}, {links.l2}, {links.l3})"
        )
    theta2 = math.acos(min(1.0, max(-1.0, c2)))
    # atan2 form of arccos((r²+l1²-l2²)/(2·l1·r)); stable near full extension
    theta1 = math.atan2(v, u) - math.atan2(
        links.l2 * math.sin(theta2), links.l1 + links.l2 * math.cos(theta2)
    )
    theta3 = target.alpha - theta1 - theta2
    return JointState(theta1=theta1, theta2=theta2, theta3=theta3, z=z)


def is_reachable(target: PlanarPose, links: LinkLengths) -> bool:
    try:
        inverse_kinematics(target, links)
    except (UnreachableError, DegenerateTargetError):
        return False
    return True


# --- Atomic movements ---


def _axis_moves(dx: float, dy: float) -> list[AtomicMove]:
    moves = []
    if dx != 0.0:
        moves.append(
            AtomicMove(direction=Direction.right if dx > 0 else Direction.left, distance=abs(dx))
        )
    if dy != 0.0:
        moves.append(
            AtomicMove(
                direction=Direction.forward if dy > 0 else Direction.backward, distance=abs(dy)
            )
        )
    return moves


def _z_move(dz: float, dwell: float = 0.0) -> AtomicMove:
    return AtomicMove(
        direction=Direction.up if dz > 0 else Direction.down, distance=abs(dz), dwell=dwell
    )


def decompose_to_atomics(
    start: PlanarPose,
    start_z: float,
    end: PlanarPose,
    end_z: float,
    links: LinkLengths,
    hover_height: float,
) -> list[AtomicMove]:
    """
    Split a displacement into single-axis moves that never drag the pen.

    XY moves come before the Z move when descending and after it when
    ascending. Travelling between two pen-down points lifts to `hover_height`
    first and lowers at the end.

    Raises:
        UnreachableError: either end is out of reach.
    """
    inverse_kinematics(start, links)
    inverse_kinematics(end, links)

    xy = _axis_moves(end.x - start.x, end.y - start.y)
    dz = end_z - start_z
    if not xy:
        return [_z_move(dz)] if dz != 0.0 else []
    if start_z == 0.0 and end_z == 0.0:
        return [_z_move(hover_height), *xy, _z_move(-hover_height)]
    if dz < 0:
        return [*xy, _z_move(dz)]
    if dz > 0:
        return [_z_move(dz), *xy]
    return xy


def apply_moves(start: TipPosition, moves: Sequence[AtomicMove]) -> list[TipPosition]:
    """Tip positions after each move."""
    x, y, z = start
    out = []
    for m in moves:
        dx, dy, dz = m.vector
        x, y, z = x + dx, y + dy, z + dz
        out.append(TipPosition(x, y, z))
    return out


def path_length(trace: Sequence[Sequence[float]]) -> float:
    """XY length of a tip path; Z strokes do not count."""
    total = 0.0
    for a, b in zip(trace, trace[1:], strict=False):
        total += math.hypot(b[0] - a[0], b[1] - a[1])
    return total


# --- Screen mapping ---


def _in_rectified_bounds(p: Point, quad: ScreenQuad, tol: float = 1e-9) -> bool:
    if quad.rectified_size is None:
        return True
    w, h = quad.rectified_size
    return -tol <= p[0] <= w + tol and -tol <= p[1] <= h + tol


def screen_to_world(
    p: Point, quad: ScreenQuad, alpha: float = DEFAULT_PEN_ALPHA
) -> PlanarPose:
    """
    Rectified screen pixel to arm base frame: scale, rotate by the deflection,
    then translate by the quad origin.

    Raises:
        OutOfScreenError: `p` lies outside the rectified screen.
    """
    if not _in_rectified_bounds(p, quad):
        raise OutOfScreenError(f"Point {p} lies outside the rectified screen {quad.rectified_size}")
    c = math.cos(quad.deflection_angle)
    s = math.sin(quad.deflection_angle)
    sx = quad.scale * p[0]
    sy = quad.scale * p[1]
    return PlanarPose(
        x=quad.origin[0] + c * sx - s * sy,
        y=quad.origin[1] + s * sx + c * sy,
        alpha=alpha,
    )


def world_to_screen(point: Point, quad: ScreenQuad) -> Point:
    """
    Inverse of `screen_to_world`.

    Raises:
        OutOfScreenError: the point maps outside the rectified screen.
    """
    c = math.cos(quad.deflection_angle)
    s = math.sin(quad.deflection_angle)
    dx = point[0] - quad.origin[0]
    dy = point[1] - quad.origin[1]
    p = ((c * dx + s * dy) / quad.scale, (-s * dx + c * dy) / quad.scale)
    if not _in_rectified_bounds(p, quad):
        raise OutOfScreenError(
            f"World point {point} maps to {p}, outside the rectified screen {quad.rectified_size}"
        )
    return p


# --- Gesture synthesis ---


class _PlanBuilder:
    def __init__(self, start: TipPosition, arm: ArmConfig):
        self.arm = arm
        self.position = start
        self.moves: list[AtomicMove] = []
        self.tip_path: list[TipPosition] = [start]

    def _pose(self, x: float, y: float) -> PlanarPose:
        return PlanarPose(x=x, y=y, alpha=self.arm.pen_alpha)

    def _record(self, moves: list[AtomicMove]) -> None:
        positions = apply_moves(self.position, moves)
        for i, (move, pos) in enumerate(zip(moves, positions, strict=True)):
            is_xy = move.direction not in (Direction.up, Direction.down)
            next_is_xy = i + 1 < len(moves) and moves[i + 1].direction not in (
                Direction.up,
                Direction.down,
            )
            # a 4-DOF arm moves its joints together: one straight XY segment
            if self.arm.kind == ArmKind.four_dof and is_xy and next_is_xy:
                continue
            self.tip_path.append(pos)
        self.moves.extend(moves)
        if positions:
            self.position = positions[-1]

    def travel(self, target: PlanarPose, z: float) -> None:
        start = self._pose(self.position.x, self.position.y)
        moves = decompose_to_atomics(
            start, self.position.z, target, z, self.arm.links, self.arm.hover_height
        )
        self._record(moves)

    def press(self, dwell: float) -> None:
        self._record([_z_move(-self.position.z, dwell=dwell)])

    def lift(self, dwell: float = 0.0) -> None:
        self._record([_z_move(self.arm.hover_height - self.position.z, dwell=dwell)])

    def drag(self, target: PlanarPose) -> None:
        inverse_kinematics(target, self.arm.links)
        self._record(_axis_moves(target.x - self.position.x, target.y - self.position.y))

    def tap(self, target: PlanarPose, dwell: float) -> None:
        self.travel(target, self.arm.hover_height)
        self.press(dwell)
        self.lift()


def _target_pose(p: Point, quad: ScreenQuad, arm: ArmConfig) -> PlanarPose:
    try:
        pose = screen_to_world(p, quad, arm.pen_alpha)
    except OutOfScreenError as e:
        raise TargetOutOfBoundsError(f"Gesture target {p} is off screen: {e}") from e
    inverse_kinematics(pose, arm.links)
    return pose


def synthesize_gesture(
    g: CompoundGesture,
    start: TipPosition,
    quad: ScreenQuad,
    arm: ArmConfig,
    keyboard: Mapping[str, Point] | None = None,
) -> GesturePlan:
    """
    Expand a compound gesture into atomic moves starting from `start`.

    Every gesture starts and ends with the pen at hover height. `keyboard` maps
    characters to key centres in screen pixels and is only used by input.

    Raises:
        TargetOutOfBoundsError: a target lies off the rectified screen.
        UnknownCharacterError: an input character has no key.
        UnreachableError: a target is out of the arm's reach.
    """
    if quad.rectified_size is None:
        raise ValueError("Gesture synthesis needs a screen quad with a rectified size")
    b = _PlanBuilder(start, arm)
    if start.z != arm.hover_height:
        b.travel(b._pose(start.x, start.y), arm.hover_height)

    match g.kind:
        case GestureKind.click:
            b.tap(_target_pose(g.targets[0], quad, arm), arm.tap_dwell)
        case GestureKind.double_click:
            target = _target_pose(g.targets[0], quad, arm)
            b.travel(target, arm.hover_height)
            b.press(arm.tap_dwell)
            b.lift(dwell=arm.double_tap_gap)
            b.press(arm.tap_dwell)
            b.lift()
        case GestureKind.long_click:
            b.tap(_target_pose(g.targets[0], quad, arm), arm.long_press)
        case GestureKind.slide:
            p1 = _target_pose(g.targets[0], quad, arm)
            p2 = _target_pose(g.targets[1], quad, arm)
            b.travel(p1, arm.hover_height)
            b.press(0.0)
            b.drag(p2)
            b.lift()
        case GestureKind.scroll:
            w, h = quad.rectified_size
            e = arm.scroll_extent
            bottom = (w / 2.0, h * (0.5 + e / 2.0))
            top = (w / 2.0, h * (0.5 - e / 2.0))
            first, second = (top, bottom) if g.reverse else (bottom, top)
            b.travel(_target_pose(first, quad, arm), arm.hover_height)
            b.press(0.0)
            b.drag(_target_pose(second, quad, arm))
            b.lift()
        case GestureKind.input:
            keys = keyboard or {}
            payload = g.payload or ""
            missing = sorted({ch for ch in payload if ch not in keys})
            if missing:
                raise UnknownCharacterError(
                    f"Characters {missing} of '{payload}' are not on the soft keyboard"
                )
            b.tap(_target_pose(g.targets[0], quad, arm), arm.tap_dwell)
            for ch in payload:
                b.tap(_target_pose(keys[ch], quad, arm), arm.tap_dwell)

    tip_path = tuple(b.tip_path)
    xy_distance = path_length(tip_path)
    dwell = sum(m.dwell for m in b.moves)
    seconds = xy_distance / arm.speed + dwell + arm.gesture_overhead
    return GesturePlan(
        gesture=g,
        moves=tuple(b.moves),
        tip_path=tip_path,
        xy_distance=xy_distance,
        dwell=dwell,
        seconds=seconds,
    )
