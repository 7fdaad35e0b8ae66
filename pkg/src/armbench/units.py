"""
Physical quantities for armbench documents.

Documents may state a length as ``12.5`` (already millimeters) or as
``"1.25 cm"``; both validate to the float ``12.5``. Each quantity type fixes a
physical type and the canonical unit the rest of the code computes in.
"""

from collections.abc import Callable
from typing import Annotated, Any

import astropy.units as u
from pydantic import BeforeValidator


def to_canonical(value: Any, target_physical_type: str, canonical_unit: u.UnitBase) -> float:
    """
    Convert a number or a quantity string to a float in `canonical_unit`.

    Plain numbers (and dimensionless strings such as ``"5"``) are taken to be in
    the canonical unit already.

    Raises:
        ValueError: if the value does not parse or has the wrong physical type.
    """
    if isinstance(value, bool):
        raise ValueError(f"Expected a {target_physical_type} quantity, got a boolean")
    if isinstance(value, int | float):
        return float(value)
    if isinstance(value, u.Quantity):
        q = value
    elif isinstance(value, str):
        try:
            q = u.Quantity(value)
        except Exception as e:
            raise ValueError(f"Invalid quantity '{value}': {e}") from e
    else:
        raise ValueError(
            f"Expected a number or a quantity string for {target_physical_type}, got {type(value).__name__}"
        )

    assert q.unit is not None, "Quantity unit cannot be None"
    if q.unit.physical_type == u.get_physical_type("dimensionless"):
        return float(q.value)
    target_pt = u.get_physical_type(target_physical_type)
    if q.unit.physical_type != target_pt:
        raise ValueError(
            f"Physical type mismatch: expected '{target_physical_type}' ({target_pt}), got '{q.unit.physical_type}'"
        )
    return float(q.to_value(canonical_unit))


def quantity_validator(
    name: str, target_physical_type: str, canonical_unit: u.UnitBase
) -> Callable[[Any], float]:
    def validate(v: Any) -> float:
        try:
            return to_canonical(v, target_physical_type, canonical_unit)
        except ValueError as e:
            raise ValueError(f"Invalid quantity for type '{name}': {e}") from e

    validate.__name__ = f"validate_{name.lower()}"
    return validate


Millimeters = Annotated[
    float, BeforeValidator(quantity_validator("Millimeters", "length", u.mm))
]
Seconds = Annotated[float, BeforeValidator(quantity_validator("Seconds", "time", u.s))]
Radians = Annotated[
    float, BeforeValidator(quantity_validator("Radians", "angle", u.rad))
]
MillimetersPerSecond = Annotated[
    float,
    BeforeValidator(quantity_validator("MillimetersPerSecond", "speed", u.mm / u.s)),
]
