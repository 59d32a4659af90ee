"""
File: validators.py
Path: trajsim/validators.py
Purpose: Input validation utilities for scenario data and parameter objects
Author: dnoice
Version: 1.0.0
Created: 2026-10-17
Updated: 2026-10-17
"""

import math
from numbers import Real
from typing import Any, Sequence, Tuple


def _is_number(value: Any) -> bool:
    return isinstance(value, Real) and not isinstance(value, bool)


def validate_finite(value: Any, name: str) -> Tuple[bool, str]:
    """
    Validate that a value is a finite real number.

    Args:
        value: Value to check
        name: Field name used in the error message

    Returns:
        Tuple of (is_valid, error_message)
    """
    if not _is_number(value):
        return False, f"{name} must be a number"
    if not math.isfinite(value):
        return False, f"{name} must be finite"
    return True, ""


def validate_positive(value: Any, name: str) -> Tuple[bool, str]:
    """
    Validate that a value is a finite number strictly greater than zero.

    Args:
        value: Value to check
        name: Field name used in the error message

    Returns:
        Tuple of (is_valid, error_message)
    """
    is_valid, error = validate_finite(value, name)
    if not is_valid:
        return is_valid, error
    if value <= 0:
        return False, f"{name} must be greater than zero"
    return True, ""


def validate_non_negative(value: Any, name: str) -> Tuple[bool, str]:
    """
    Validate that a value is a finite number greater than or equal to zero.

    Args:
        value: Value to check
        name: Field name used in the error message

    Returns:
        Tuple of (is_valid, error_message)
    """
    is_valid, error = validate_finite(value, name)
    if not is_valid:
        return is_valid, error
    if value < 0:
        return False, f"{name} must not be negative"
    return True, ""


def validate_positive_int(value: Any, name: str, minimum: int = 1) -> Tuple[bool, str]:
    """
    Validate an integer count.

    Args:
        value: Value to check
        name: Field name used in the error message
        minimum: Smallest accepted value

    Returns:
        Tuple of (is_valid, error_message)
    """
    if isinstance(value, bool) or not isinstance(value, int):
        return False, f"{name} must be an integer"
    if value < minimum:
        return False, f"{name} must be at least {minimum}"
    return True, ""


def validate_point(point: Any, name: str) -> Tuple[bool, str]:
    """
    Validate an (x, y) pair of finite coordinates.

    Args:
        point: Sequence expected to hold two numbers
        name: Field name used in the error message

    Returns:
        Tuple of (is_valid, error_message)
    """
    if not isinstance(point, (list, tuple)) or len(point) != 2:
        return False, f"{name} must be an [x, y] pair"
    for axis, value in zip(('x', 'y'), point):
        is_valid, error = validate_finite(value, f"{name}.{axis}")
        if not is_valid:
            return is_valid, error
    return True, ""


def validate_state_row(row: Any, name: str) -> Tuple[bool, str]:
    """
    Validate an [x, y, vx, vy] state row.

    Args:
        row: Sequence expected to hold four numbers
        name: Field name used in the error message

    Returns:
        Tuple of (is_valid, error_message)
    """
    if not isinstance(row, (list, tuple)) or len(row) != 4:
        return False, f"{name} must be an [x, y, vx, vy] row"
    for component, value in zip(('x', 'y', 'vx', 'vy'), row):
        is_valid, error = validate_finite(value, f"{name}.{component}")
        if not is_valid:
            return is_valid, error
    return True, ""


def validate_geometry(length: Any, width: Any) -> Tuple[bool, str]:
    """
    Validate agent extents: length >= width > 0.

    Args:
        length: Box length in meters
        width: Box width in meters

    Returns:
        Tuple of (is_valid, error_message)
    """
    for value, name in ((length, 'length'), (width, 'width')):
        is_valid, error = validate_positive(value, name)
        if not is_valid:
            return is_valid, error
    if length < width:
        return False, "length must be greater than or equal to width"
    return True, ""


def validate_polyline(points: Sequence, name: str) -> Tuple[bool, str]:
    """
    Validate a polyline: at least two finite points.

    Args:
        points: Sequence of [x, y] pairs
        name: Field name used in the error message

    Returns:
        Tuple of (is_valid, error_message)
    """
    if not isinstance(points, (list, tuple)):
        return False, f"{name} must be a list of points"
    if len(points) < 2:
        return False, f"{name} must have at least 2 points"
    for index, point in enumerate(points):
        is_valid, error = validate_point(point, f"{name}[{index}]")
        if not is_valid:
            return is_valid, error
    return True, ""


def validate_choice(value: Any, name: str, choices: Sequence[str]) -> Tuple[bool, str]:
    """
    Validate that a value is one of a fixed set of strings.

    Args:
        value: Value to check
        name: Field name used in the error message
        choices: Accepted values

    Returns:
        Tuple of (is_valid, error_message)
    """
    if value not in choices:
        return False, f"{name} must be one of: {', '.join(choices)}"
    return True, ""
