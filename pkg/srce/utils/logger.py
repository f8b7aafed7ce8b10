"""
Logging configuration and utilities for experiments.

Provides structured logging with JSON format for long unattended runs
and human-readable format for interactive use.
"""

import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

# Experiment context fields copied from `extra` into JSON records
CONTEXT_FIELDS = (
    "epoch",
    "batch",
    "snr_db",
    "estimator",
    "condition",
    "elapsed_s",
    "memory_mb",
)


class JSONFormatter(logging.Formatter):
    """
    Custom JSON formatter for structured logging.

    Converts log records to JSON format with additional context fields.
    """

    def format(self, record: logging.LogRecord) -> str:
        """Format log record as JSON string."""
        log_data = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
        }

        for name in CONTEXT_FIELDS:
            value = getattr(record, name, None)
            if value is not None:
                log_data[name] = value

        if record.exc_info:
            log_data["exception"] = self.formatException(record.exc_info)

        return json.dumps(log_data, default=str)


def _plain_formatter() -> logging.Formatter:
    return logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )


class ExperimentLogger:
    """
    Centralized logger for training, evaluation and sweeps.

    Console output is always enabled; when a log directory is given the
    application, training and error streams are also written to files.
    """

    def __init__(
        self,
        name: str = "srce",
        log_level: str = "INFO",
        log_dir: Optional[Path] = None,
        use_json: bool = False,
    ):
        """
        Initialize the experiment logger.

        Args:
            name: Logger name
            log_level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
            log_dir: Directory for log files (None for console only)
            use_json: Use JSON formatting
        """
        self.logger = logging.getLogger(name)
        self.logger.setLevel(getattr(logging, log_level.upper()))
        self.logger.handlers.clear()

        console_handler = logging.StreamHandler(sys.stdout)
        console_handler.setLevel(logging.DEBUG)
        console_handler.setFormatter(JSONFormatter() if use_json else _plain_formatter())
        self.logger.addHandler(console_handler)

        self.training_logger = logging.getLogger(f"{name}.training")
        self.training_logger.handlers.clear()

        if log_dir:
            log_dir = Path(log_dir)
            log_dir.mkdir(parents=True, exist_ok=True)

            self.logger.addHandler(
                self._create_file_handler(log_dir / "application.log", use_json)
            )

            self.training_logger.setLevel(logging.INFO)
            self.training_logger.addHandler(
                self._create_file_handler(log_dir / "training.log", use_json)
            )

            error_handler = self._create_file_handler(log_dir / "errors.log", use_json)
            error_handler.setLevel(logging.ERROR)
            self.logger.addHandler(error_handler)

    def _create_file_handler(self, filepath: Path, use_json: bool) -> logging.FileHandler:
        """Create a file handler with appropriate formatter."""
        handler = logging.FileHandler(filepath)
        handler.setFormatter(JSONFormatter() if use_json else _plain_formatter())
        return handler

    def log_epoch(
        self,
        epoch: int,
        train_loss: float,
        val_loss: Optional[float],
        learning_rate: float,
        elapsed_s: Optional[float] = None,
        memory_mb: Optional[float] = None,
        condition: Optional[str] = None,
    ):
        """Log the losses of one finished epoch."""
        extra = {
            "epoch": epoch,
            "elapsed_s": elapsed_s,
            "memory_mb": memory_mb,
            "condition": condition,
        }
        val_str = f"{val_loss:.6g}" if val_loss is not None else "n/a"
        msg = (
            f"Epoch {epoch}: train_loss={train_loss:.6g} val_loss={val_str} "
            f"lr={learning_rate:.3g}"
        )
        self.training_logger.info(msg, extra=extra)

    def log_evaluation(self, estimator: str, snr_db: float, mse: float, samples: int):
        """Log one evaluated (estimator, SNR) cell."""
        extra = {"estimator": estimator, "snr_db": snr_db}
        self.logger.info(
            f"Evaluated {estimator} @ {snr_db} dB: mse={mse:.6g} over {samples} frames",
            extra=extra,
        )

    def log_condition(self, condition: str, message: str):
        """Log progress of a sweep condition."""
        self.logger.info(f"[{condition}] {message}", extra={"condition": condition})

    def log_error(
        self,
        message: str,
        exception: Optional[Exception] = None,
        **kwargs
    ):
        """Log error with optional exception."""
        if exception:
            self.logger.error(message, exc_info=exception, extra=kwargs)
        else:
            self.logger.error(message, extra=kwargs)

    def debug(self, message: str, **kwargs):
        """Log debug message."""
        self.logger.debug(message, extra=kwargs)

    def info(self, message: str, **kwargs):
        """Log info message."""
        self.logger.info(message, extra=kwargs)

    def warning(self, message: str, **kwargs):
        """Log warning message."""
        self.logger.warning(message, extra=kwargs)

    def error(self, message: str, **kwargs):
        """Log error message."""
        self.logger.error(message, extra=kwargs)


# Global logger instance
_logger: Optional[ExperimentLogger] = None


def get_logger(
    name: str = "srce",
    log_level: str = "INFO",
    log_dir: Optional[Path] = None,
    use_json: bool = False,
) -> ExperimentLogger:
    """
    Get or create the global logger instance.

    Args:
        name: Logger name
        log_level: Logging level
        log_dir: Directory for log files
        use_json: Use JSON formatting

    Returns:
        ExperimentLogger instance
    """
    global _logger

    if _logger is None:
        _logger = ExperimentLogger(name, log_level, log_dir, use_json)

    return _logger


def configure_logger(
    log_level: str = "INFO",
    log_dir: Optional[Path] = None,
    use_json: bool = False,
) -> ExperimentLogger:
    """Replace the global logger, used once by the CLI at startup."""
    global _logger
    _logger = ExperimentLogger("srce", log_level, log_dir, use_json)
    return _logger
