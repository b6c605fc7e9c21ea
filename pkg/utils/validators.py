"""
Input validation utilities for config values and numeric parameters.
Every validator returns (is_valid, value, error_message).
"""
import math
import os
import re
from typing import Iterable, Optional, Tuple, Union

Number = Union[int, float]

_TRUE_WORDS = {"true", "yes", "on", "1"}
_FALSE_WORDS = {"false", "no", "off", "0"}


def validate_float(raw, name: str, min_value: Optional[float] = None, max_value: Optional[float] = None,
                   exclusive_min: bool = False) -> Tuple[bool, Optional[float], Optional[str]]:
    """
    Validate a finite real number, given as text or as a number.
    Returns (is_valid, value, error_message)
    """
    if raw is None or (isinstance(raw, str) and not raw.strip()):
        return False, None, f"{name} is required"

    if isinstance(raw, bool):
        return False, None, f"{name} must be a number"

    try:
        value = float(raw.strip()) if isinstance(raw, str) else float(raw)
    except (ValueError, TypeError):
        return False, None, f"{name} must be a valid number"

    if not math.isfinite(value):
        return False, None, f"{name} must be finite"

    if min_value is not None:
        if exclusive_min and value <= min_value:
            return False, None, f"{name} must be greater than {min_value!r}"
        if not exclusive_min and value < min_value:
            return False, None, f"{name} must be at least {min_value!r}"

    if max_value is not None and value > max_value:
        return False, None, f"{name} cannot exceed {max_value!r}"

    return True, value, None


def validate_count(raw, name: str, min_value: int = 0,
                   max_value: Optional[int] = None) -> Tuple[bool, Optional[int], Optional[str]]:
    """
    Validate a whole-number count. Accepts "2500", "1e5" or 2500.0 when integral.
    Returns (is_valid, count_value, error_message)
    """
    if raw is None or (isinstance(raw, str) and not raw.strip()):
        return False, None, f"{name} is required"

    if isinstance(raw, bool):
        return False, None, f"{name} must be a whole number"

    try:
        if isinstance(raw, str):
            text = raw.strip()
            value = int(text) if re.fullmatch(r"[+-]?\d+", text) else float(text)
        else:
            value = raw
        if isinstance(value, float):
            if not value.is_integer():
                return False, None, f"{name} must be a whole number"
            value = int(value)
        value = int(value)
    except (ValueError, TypeError, OverflowError):
        return False, None, f"{name} must be a valid whole number"

    if value < min_value:
        return False, None, f"{name} must be at least {min_value}"
    if max_value is not None and value > max_value:
        return False, None, f"{name} cannot exceed {max_value}"

    return True, value, None


def validate_choice(raw, name: str, choices: Iterable[str]) -> Tuple[bool, Optional[str], Optional[str]]:
    """
    Validate a case-insensitive keyword against a fixed set.
    Returns (is_valid, normalized_choice, error_message)
    """
    allowed = tuple(choices)
    if raw is None or not str(raw).strip():
        return False, None, f"{name} is required"

    value = str(raw).strip().lower()
    if value not in allowed:
        return False, None, f"{name} must be one of: {', '.join(allowed)}"

    return True, value, None


def validate_bool(raw, name: str) -> Tuple[bool, Optional[bool], Optional[str]]:
    """
    Validate a boolean flag written as true/false, yes/no, on/off or 1/0.
    Returns (is_valid, flag_value, error_message)
    """
    if isinstance(raw, bool):
        return True, raw, None
    if raw is None:
        return False, None, f"{name} is required"

    value = str(raw).strip().lower()
    if value in _TRUE_WORDS:
        return True, True, None
    if value in _FALSE_WORDS:
        return True, False, None

    return False, None, f"{name} must be true or false"


def validate_run_name(name: str) -> Tuple[bool, Optional[str]]:
    """
    Validate the name of a run directory served by the results API.
    Returns (is_valid, error_message)
    """
    if not name or not name.strip():
        return False, "Run name is required"

    if len(name) > 255:
        return False, "Run name is too long (maximum 255 characters)"

    if os.path.basename(name) != name or name in {".", ".."}:
        return False, "Run name must not contain path components"

    if not re.fullmatch(r"[A-Za-z0-9._-]+", name):
        return False, "Run name contains invalid characters"

    return True, None
