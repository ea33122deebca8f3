"""
Pydantic Settings Configuration
Type-safe run settings loaded from YAML, with range-checked CLI overrides
"""

from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Type, Union

import yaml
from pydantic import Field
from pydantic_settings import BaseSettings, PydanticBaseSettingsSource, SettingsConfigDict

from .constants import (
    CancellationConfig,
    LoggingConfig,
    SolverConfig,
    SynergyConfig,
    ValidationLimits,
)


class _FileOnlySettings(BaseSettings):
    """Settings populated from init kwargs only (no environment lookup)"""

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: Type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> Tuple[PydanticBaseSettingsSource, ...]:
        return (init_settings,)


class SolverSettings(_FileOnlySettings):
    """Quasi-static solver tolerances"""
    slack_tolerance: float = Field(default=SolverConfig.SLACK_TOLERANCE_MM, gt=0.0)
    kkt_tolerance: float = Field(default=SolverConfig.KKT_TOLERANCE, gt=0.0)

    model_config = SettingsConfigDict(extra="forbid")


class CancellationSettings(_FileOnlySettings):
    """Torque profile and spring search configuration"""
    samples: int = Field(
        default=CancellationConfig.PROFILE_SAMPLES,
        ge=ValidationLimits.MIN_SAMPLES,
        le=ValidationLimits.MAX_SAMPLES
    )
    preload_grid: float = Field(
        default=CancellationConfig.PRELOAD_GRID_RAD,
        ge=ValidationLimits.MIN_PRELOAD_GRID,
        le=ValidationLimits.MAX_PRELOAD_GRID
    )
    stiction: Optional[float] = Field(
        default=None,
        ge=ValidationLimits.MIN_STICTION,
        le=ValidationLimits.MAX_STICTION
    )
    max_workers: int = Field(
        default=CancellationConfig.MAX_WORKERS,
        ge=ValidationLimits.MIN_WORKERS,
        le=ValidationLimits.MAX_WORKERS
    )

    model_config = SettingsConfigDict(extra="forbid")


class SynergySettings(_FileOnlySettings):
    """Synergy fitting configuration"""
    seed: int = Field(default=SynergyConfig.SEED, ge=0)
    budget: int = Field(
        default=SynergyConfig.BUDGET,
        ge=ValidationLimits.MIN_BUDGET,
        le=ValidationLimits.MAX_BUDGET
    )
    restarts: int = Field(
        default=SynergyConfig.RESTARTS,
        ge=ValidationLimits.MIN_RESTARTS,
        le=ValidationLimits.MAX_RESTARTS
    )
    max_workers: int = Field(
        default=1,
        ge=ValidationLimits.MIN_WORKERS,
        le=ValidationLimits.MAX_WORKERS
    )

    model_config = SettingsConfigDict(extra="forbid")


class LoggingSettings(_FileOnlySettings):
    """Logging configuration"""
    level: str = Field(default=LoggingConfig.DEFAULT_LEVEL)
    file_enabled: bool = Field(default=False)
    file_path: str = Field(default=LoggingConfig.DEFAULT_FILE_PATH)
    max_file_size: int = Field(default=LoggingConfig.MAX_FILE_SIZE_MB, ge=1)
    backup_count: int = Field(default=LoggingConfig.BACKUP_COUNT, ge=1)

    model_config = SettingsConfigDict(extra="forbid")


class OutputSettings(_FileOnlySettings):
    """Run artifact configuration"""
    directory: str = Field(default="out")

    model_config = SettingsConfigDict(extra="forbid")


class AppSettings(_FileOnlySettings):
    """Main application settings"""
    solver: SolverSettings = Field(default_factory=SolverSettings)
    cancellation: CancellationSettings = Field(default_factory=CancellationSettings)
    synergy: SynergySettings = Field(default_factory=SynergySettings)
    logging: LoggingSettings = Field(default_factory=LoggingSettings)
    output: OutputSettings = Field(default_factory=OutputSettings)

    model_config = SettingsConfigDict(extra="forbid")

    def with_overrides(self, **overrides: Any) -> 'AppSettings':
        """
        Apply CLI overrides and re-validate ranges

        Args:
            overrides: samples, seed, budget, restarts, stiction, workers,
                preload_grid; None values are ignored

        Returns:
            New AppSettings instance
        """
        data = self.to_dict()
        routing = {
            'samples': ('cancellation', 'samples'),
            'preload_grid': ('cancellation', 'preload_grid'),
            'stiction': ('cancellation', 'stiction'),
            'seed': ('synergy', 'seed'),
            'budget': ('synergy', 'budget'),
            'restarts': ('synergy', 'restarts'),
        }
        for key, value in overrides.items():
            if value is None:
                continue
            if key == 'workers':
                data['cancellation']['max_workers'] = value
                data['synergy']['max_workers'] = value
                continue
            if key not in routing:
                raise KeyError(f"Unknown override: {key}")
            section, field = routing[key]
            data[section][field] = value
        return AppSettings(**data)

    def to_dict(self) -> Dict[str, Any]:
        """Convert settings to a plain nested dictionary"""
        return {
            'solver': self.solver.model_dump(),
            'cancellation': self.cancellation.model_dump(),
            'synergy': self.synergy.model_dump(),
            'logging': self.logging.model_dump(),
            'output': self.output.model_dump(),
        }


def load_settings(path: Optional[Union[str, Path]] = None) -> AppSettings:
    """
    Load settings from a YAML file

    Args:
        path: YAML settings file; None or a missing default gives built-in defaults

    Returns:
        Validated AppSettings
    """
    if path is None:
        return AppSettings()

    config_path = Path(path)
    with open(config_path, 'r', encoding='utf-8') as f:
        data = yaml.safe_load(f) or {}
    return AppSettings(**data)
