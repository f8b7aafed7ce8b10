"""
Input validation utilities

This module provides validation functions for counts, SNR values and arrays
so that every public operation rejects bad input with a structured error.
"""

import math

import numpy as np

from .exceptions import (
    ConfigurationException,
    InputValidationException,
    ShapeMismatchException,
)


def validate_positive_int(value: int, name: str, exc=ConfigurationException) -> int:
    """
    Validate a strictly positive integer.

    Args:
        value: Value to check
        name: Parameter name for the error message
        exc: Exception class raised on failure

    Returns:
        The value as int

    Raises:
        exc: If the value is not a positive integer
    """
    if isinstance(value, bool) or int(value) != value or value <= 0:
        raise exc(
            f"{name} must be a positive integer, got {value}",
            details={name: value}
        )
    return int(value)


def validate_snr_db(snr_db: float) -> float:
    """
    Validate an SNR in decibels.

    +inf is the noiseless sentinel and is accepted; NaN and -inf are not.
    """
    if math.isnan(snr_db) or snr_db == -math.inf:
        raise InputValidationException(
            f"Invalid SNR: {snr_db} dB",
            details={"snr_db": snr_db}
        )
    return float(snr_db)


def validate_finite(array: np.ndarray, name: str, exc=InputValidationException) -> np.ndarray:
    """
    Validate that every entry of an array is finite.

    Raises:
        exc: If any entry is NaN or infinite
    """
    array = np.asarray(array)
    if not np.all(np.isfinite(array)):
        raise exc(
            f"{name} contains non-finite values",
            details={"name": name, "non_finite": int(np.count_nonzero(~np.isfinite(array)))}
        )
    return array


def validate_same_shape(a: np.ndarray, b: np.ndarray, name_a: str, name_b: str) -> None:
    """Validate that two arrays share one shape."""
    if np.shape(a) != np.shape(b):
        raise ShapeMismatchException(
            f"{name_a} {np.shape(a)} and {name_b} {np.shape(b)} differ in shape",
            details={name_a: list(np.shape(a)), name_b: list(np.shape(b))}
        )


def validate_pilot_count(num_subcarriers: int, num_pilots: int) -> int:
    """
    Validate a comb pilot count against the number of subcarriers.

    Raises:
        ConfigurationException: If pilots do not evenly divide the subcarriers
    """
    validate_positive_int(num_pilots, "pilots")
    if num_pilots > num_subcarriers or num_subcarriers % num_pilots != 0:
        raise ConfigurationException(
            f"{num_pilots} pilots do not divide {num_subcarriers} subcarriers",
            details={"pilots": num_pilots, "num_subcarriers": num_subcarriers}
        )
    return num_pilots
