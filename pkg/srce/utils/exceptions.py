"""
Custom exceptions for the channel estimation toolkit

This module defines a hierarchy of exceptions used throughout the simulator,
estimators, network engine and experiment harness so that every failure
carries a readable message plus structured context.
"""


class SrceException(Exception):
    """Base exception class for all toolkit exceptions."""

    def __init__(self, message: str, details: dict = None):
        """
        Initialize the exception.

        Args:
            message: Human-readable error message
            details: Optional dictionary with additional error context
        """
        super().__init__(message)
        self.message = message
        self.details = details or {}


class ConfigurationException(SrceException):
    """Raised when channel, network or experiment parameters are invalid."""
    pass


class InputValidationException(SrceException):
    """Raised when an operation receives arguments it cannot process."""
    pass


class ShapeMismatchException(InputValidationException):
    """Raised when array or tensor dimensions do not agree."""
    pass


class NumericalException(SrceException):
    """Raised for singular solves and non-finite values."""
    pass


class TrainingDivergedException(NumericalException):
    """Raised when the training loss becomes non-finite."""
    pass


class DatasetFormatException(SrceException):
    """Raised when a dataset or checkpoint file is malformed."""
    pass


class StorageException(SrceException):
    """Raised when reading or writing a file fails."""

    def __init__(self, message: str, path=None, details: dict = None):
        details = dict(details or {})
        if path is not None:
            details["path"] = str(path)
        super().__init__(message, details)
        self.path = path


class ReportException(SrceException):
    """Raised when a report is missing cells or holds duplicates."""
    pass
