"""
Axis-aligned rectangles and point helpers shared across the bench.

Pixel coordinates are continuous with the origin at the top-left corner of the
image; pixel (i, j) covers [i, i+1) x [j, j+1). A `Rect` of width w starting at
x therefore covers columns x .. x+w-1.
"""

import math
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, model_validator

Point = tuple[float, float]


class Rect(BaseModel):
    x: int
    y: int
    width: int = Field(ge=1)
    height: int = Field(ge=1)

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="before")
    @classmethod
    def _from_sequence(cls, data: Any) -> Any:
        # documents may write a rectangle as [x, y, width, height]
        if isinstance(data, list | tuple):
            if len(data) != 4:
                raise ValueError(f"A rectangle needs [x, y, width, height], got {list(data)}")
            x, y, w, h = data
            return {"x": x, "y": y, "width": w, "height": h}
        return data

    @classmethod
    def from_bounds(cls, x0: int, y0: int, x1: int, y1: int) -> "Rect":
        return cls(x=x0, y=y0, width=x1 - x0, height=y1 - y0)

    @classmethod
    def from_list(cls, values: list[int] | tuple[int, int, int, int]) -> "Rect":
        x, y, w, h = values
        return cls(x=int(x), y=int(y), width=int(w), height=int(h))

    @property
    def x1(self) -> int:
        return self.x + self.width

    @property
    def y1(self) -> int:
        return self.y + self.height

    @property
    def area(self) -> int:
        return self.width * self.height

    @property
    def center(self) -> Point:
        return (self.x + self.width / 2.0, self.y + self.height / 2.0)

    def as_list(self) -> list[int]:
        return [self.x, self.y, self.width, self.height]

    def contains_point(self, p: Point) -> bool:
        return self.x <= p[0] < self.x1 and self.y <= p[1] < self.y1

    def intersection_area(self, other: "Rect") -> int:
        w = min(self.x1, other.x1) - max(self.x, other.x)
        h = min(self.y1, other.y1) - max(self.y, other.y)
        if w <= 0 or h <= 0:
            return 0
        return w * h

    def iou(self, other: "Rect") -> float:
        inter = self.intersection_area(other)
        if inter == 0:
            return 0.0
        return inter / float(self.area + other.area - inter)

    def containment_in(self, other: "Rect") -> float:
        """Fraction of this rectangle's area lying inside `other`."""
        return self.intersection_area(other) / float(self.area)

    def expanded(self, margin: int) -> "Rect":
        return Rect(
            x=self.x - margin,
            y=self.y - margin,
            width=self.width + 2 * margin,
            height=self.height + 2 * margin,
        )

    def within(self, width: int, height: int) -> bool:
        return self.x >= 0 and self.y >= 0 and self.x1 <= width and self.y1 <= height


def distance(a: Point, b: Point) -> float:
    return math.hypot(b[0] - a[0], b[1] - a[1])
