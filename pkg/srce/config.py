"""
Configuration management using Pydantic

Process-level settings come from the environment (prefix SRCE_, optional
.env file). Experiment parameters come from a YAML file validated into
ExperimentConfig and may be overridden with dotted "section.key=value"
assignments.
"""

import copy
import math
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from srce.core.channel import ChannelParams
from srce.core.constellation import ConstellationKind
from srce.core.estimators import Interpolation
from srce.core.sr_models import ArchitectureKind, ArchitectureSpec
from srce.utils.exceptions import ConfigurationException, InputValidationException, StorageException
from srce.utils.validators import validate_snr_db


class Settings(BaseSettings):
    """
    Process configuration settings.

    All settings can be overridden using environment variables.
    For example, SRCE_OUTPUT_DIR will override output_dir.
    """

    output_dir: str = Field(default="runs", description="Directory for datasets, checkpoints and reports")
    config_path: str = Field(default="config.yaml", description="Experiment configuration file")

    # Logging Configuration
    log_level: str = Field(
        default="INFO",
        description="Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)"
    )
    log_dir: Optional[str] = Field(default=None, description="Directory for log files")
    log_json: bool = Field(default=False, description="Emit JSON log records")

    # Sweep execution
    workers: int = Field(default=1, ge=1, description="Sweep conditions run in parallel")

    model_config = SettingsConfigDict(
        env_prefix="SRCE_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    @field_validator("log_level")
    @classmethod
    def _known_level(cls, value: str) -> str:
        value = value.upper()
        if value not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            raise ValueError(f"Unknown log level: {value}")
        return value


def get_settings() -> Settings:
    """
    Build settings from the current environment.

    Returns:
        Settings instance
    """
    load_dotenv(override=False)
    return Settings()


def _snr(value: float) -> float:
    try:
        return validate_snr_db(value)
    except InputValidationException as e:
        raise ValueError(e.message)


class _Section(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class ChannelConfig(_Section):
    carrier_freq: float = 2.6e9
    mobile_velocity: float = 15.0
    num_taps: int = 16
    num_subcarriers: int = 64
    symbols_per_frame: int = 20
    pdp_decay: Optional[float] = None
    num_sinusoids: int = 16
    sample_rate: float = 1.0e6
    cyclic_prefix: int = 16

    def to_params(self) -> ChannelParams:
        return ChannelParams(**self.model_dump())


class ArchitectureConfig(_Section):
    kind: ArchitectureKind = ArchitectureKind.FSRCNN
    mapping_layers: int = Field(default=4, ge=1)

    @field_validator("kind", mode="before")
    @classmethod
    def _upper_kind(cls, value):
        return value.upper() if isinstance(value, str) else value


class TrainSchedule(_Section):
    """
    Mini-batch Adam schedule.

    lr(epoch) = initial_lr / decay_factor ** (epoch // decay_every)
    """

    batch_size: int = Field(default=100, ge=1, description="Frames per batch")
    epochs: int = Field(default=100, ge=1)
    initial_lr: float = Field(default=1e-3, gt=0)
    decay_factor: float = Field(default=5.0, gt=0)
    decay_every: int = Field(default=25, ge=1)
    validate_every: int = Field(default=1, ge=1)

    def learning_rate(self, epoch: int) -> float:
        if epoch < 0:
            raise InputValidationException(f"Epoch must be non-negative, got {epoch}")
        return self.initial_lr / self.decay_factor ** (epoch // self.decay_every)

    @classmethod
    def full_scale(cls, **overrides) -> "TrainSchedule":
        """800 epochs with five-fold decay every 200."""
        values = {"epochs": 800, "decay_every": 200, "initial_lr": 1e-3, "decay_factor": 5.0, "batch_size": 100}
        values.update(overrides)
        return cls(**values)


class DatasetSizes(_Section):
    train: int = Field(default=4000, ge=0)
    val: int = Field(default=500, ge=0)
    test: int = Field(default=1000, ge=0)
    autocorrelation_channels: int = Field(default=2000, ge=1)


class Seeds(_Section):
    channel: int = 1
    noise: int = 2
    init: int = 3
    shuffle: int = 4


class ExperimentConfig(_Section):
    """Every knob of one experiment condition."""

    channel: ChannelConfig = Field(default_factory=ChannelConfig)
    pilots: int = Field(default=8, ge=1)
    modulation: ConstellationKind = ConstellationKind.QPSK
    train_snr_db: float = 20.0
    test_snr_grid: List[float] = Field(default_factory=lambda: [0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0])
    architecture: ArchitectureConfig = Field(default_factory=ArchitectureConfig)
    schedule: TrainSchedule = Field(default_factory=TrainSchedule)
    dataset: DatasetSizes = Field(default_factory=DatasetSizes)
    seeds: Seeds = Field(default_factory=Seeds)
    interpolation: Interpolation = Interpolation.SPLINE
    input_mode: str = Field(default="planes", pattern="^(planes|two_channel)$")

    @field_validator("modulation", mode="before")
    @classmethod
    def _modulation_alias(cls, value):
        if isinstance(value, str):
            value = value.upper().replace("-", "")
            return {"16QAM": "QAM16"}.get(value, value)
        return value

    @field_validator("interpolation", mode="before")
    @classmethod
    def _lower_interpolation(cls, value):
        return value.lower() if isinstance(value, str) else value

    @field_validator("train_snr_db")
    @classmethod
    def _check_train_snr(cls, value: float) -> float:
        return _snr(value)

    @field_validator("test_snr_grid")
    @classmethod
    def _check_grid(cls, value: List[float]) -> List[float]:
        if not value:
            raise ValueError("test_snr_grid must not be empty")
        return [_snr(v) for v in value]

    @model_validator(mode="after")
    def _check_pilots(self):
        n = self.channel.num_subcarriers
        if self.pilots > n or n % self.pilots != 0:
            raise ValueError(f"pilots ({self.pilots}) must divide num_subcarriers ({n})")
        return self

    @property
    def channel_params(self) -> ChannelParams:
        return self.channel.to_params()

    @property
    def channels(self) -> int:
        return 2 if self.input_mode == "two_channel" else 1

    @property
    def architecture_spec(self) -> ArchitectureSpec:
        return ArchitectureSpec(
            kind=self.architecture.kind,
            mapping_layers=self.architecture.mapping_layers,
            channels=self.channels,
        )

    def condition_name(self) -> str:
        """Identifier of one trained-model condition."""
        snr = "inf" if math.isinf(self.train_snr_db) else f"{self.train_snr_db:g}"
        return (
            f"{self.architecture_spec.estimator_name}_{self.modulation.value}"
            f"_p{self.pilots}_train{snr}dB"
        )

    def updated(self, changes: Dict[str, Any]) -> "ExperimentConfig":
        """Validated copy with dotted-path changes applied."""
        data = self.model_dump()
        for key, value in changes.items():
            _assign(data, key, value)
        return build_config(data)


def _assign(data: Dict[str, Any], dotted: str, value: Any) -> None:
    keys = dotted.split(".")
    target = data
    for key in keys[:-1]:
        if not isinstance(target.get(key), dict):
            raise ConfigurationException(f"Unknown configuration section: {dotted}", details={"key": dotted})
        target = target[key]
    target[keys[-1]] = value


def build_config(data: Dict[str, Any]) -> ExperimentConfig:
    """
    Validate a raw mapping into an ExperimentConfig.

    Raises:
        ConfigurationException: With the pydantic error list in details
    """
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as e:
        errors = [
            {"field": ".".join(str(p) for p in err["loc"]), "message": err["msg"]}
            for err in e.errors()
        ]
        raise ConfigurationException(
            f"Invalid experiment configuration: {errors[0]['field']}: {errors[0]['message']}",
            details={"errors": errors}
        )


def parse_overrides(assignments: Iterable[str]) -> Dict[str, Any]:
    """Parse "section.key=value" strings; values are read as YAML scalars."""
    changes = {}
    for assignment in assignments or []:
        key, sep, raw = assignment.partition("=")
        if not sep or not key.strip():
            raise ConfigurationException(
                f"Override must look like section.key=value, got {assignment!r}",
                details={"override": assignment}
            )
        changes[key.strip()] = yaml.safe_load(raw)
    return changes


def load_config(
    path: Optional[Union[str, Path]] = None,
    overrides: Iterable[str] = (),
    full_scale: bool = False,
) -> ExperimentConfig:
    """
    Load the experiment configuration.

    Args:
        path: YAML file; None or a missing default file gives the defaults
        overrides: "section.key=value" assignments applied after the file
        full_scale: Use the 800-epoch schedule, overrides still win

    Raises:
        ConfigurationException: If the file or an override is invalid
        StorageException: If the file exists but cannot be read
    """
    data: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if path.exists():
            try:
                with open(path, "r", encoding="utf-8") as handle:
                    data = yaml.safe_load(handle) or {}
            except OSError as e:
                raise StorageException(f"Failed to read config: {e}", path=path)
            except yaml.YAMLError as e:
                raise ConfigurationException(f"Malformed YAML in {path}: {e}", details={"path": str(path)})
            if not isinstance(data, dict):
                raise ConfigurationException("Configuration root must be a mapping", details={"path": str(path)})

    data = copy.deepcopy(data)
    if full_scale:
        data["schedule"] = {**data.get("schedule", {}), **TrainSchedule.full_scale().model_dump()}
    data.setdefault("schedule", {})
    data.setdefault("channel", {})
    data.setdefault("architecture", {})
    data.setdefault("dataset", {})
    data.setdefault("seeds", {})
    for key, value in parse_overrides(overrides).items():
        _assign(data, key, value)
    return build_config(data)
