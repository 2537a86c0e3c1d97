"""
Configuration management for the semzk toolkit.
Numerical defaults and tolerances shared by the solver and the verification harness.
"""

from typing import Any, Dict, Tuple, Type

from pydantic import Field
from pydantic_settings import BaseSettings, PydanticBaseSettingsSource, SettingsConfigDict


class Settings(BaseSettings):
    """Toolkit settings. Values come from code or a run config, never from the environment."""

    # Application settings
    app_name: str = Field(default="semzk", description="Logger namespace and report producer")
    app_version: str = Field(default="1.0.0", description="Toolkit version recorded in reports")

    # Logging Configuration
    log_level: str = Field(default="INFO", description="Root level for the semzk loggers")
    log_format: str = Field(default="standard", description="Console format: standard or json")

    # FFT Configuration
    fft_workers: int = Field(default=1, ge=1, description="Worker threads passed to scipy.fft")

    # Numerical guards
    exponent_cap: float = Field(default=700.0, gt=0, description="Largest exponent evaluated by exp()")
    decay_floor: float = Field(default=1e-12, gt=0, description="Relative boundary magnitude for torus-representable fields")
    boundary_band: int = Field(default=2, ge=1, description="Cells in the outer band of the boundary certificate")

    # Weighted-bound regularisation
    ap_epsilon: float = Field(default=1e-3, gt=0, description="Additive regularisation of the interior cutoff")
    ap_delta: float = Field(default=1e-3, gt=0, description="Additive regularisation of the half-plane cutoff")

    # Tolerances
    norm_slack: float = Field(default=0.05, ge=0, description="Discretisation slack for sharp-constant comparisons")
    conservation_tolerance: float = Field(default=1e-8, gt=0, description="Relative mass/L2 drift allowed in strict runs")
    hamiltonian_tolerance: float = Field(default=1e-6, gt=0, description="Relative Hamiltonian drift allowed in strict runs")
    commutator_tolerance: float = Field(default=1e-8, gt=0, description="Relative tolerance of the commutator lower bound")
    slow_operation_seconds: float = Field(default=30.0, gt=0, description="Threshold for slow-operation warnings")

    model_config = SettingsConfigDict(case_sensitive=False, extra="forbid", validate_assignment=True)

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: Type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> Tuple[PydanticBaseSettingsSource, ...]:
        # All state flows through flags and config files.
        return (init_settings,)

    def validate_configuration(self) -> Dict[str, Any]:
        """Validate settings and return status."""
        validation_results = {
            'valid': True,
            'warnings': [],
            'errors': [],
            'info': []
        }

        if self.log_format not in ("standard", "json"):
            validation_results['errors'].append(f"log_format must be 'standard' or 'json', got {self.log_format!r}")
            validation_results['valid'] = False

        if self.exponent_cap > 709.0:
            validation_results['errors'].append("exponent_cap above 709 overflows double precision")
            validation_results['valid'] = False

        if self.norm_slack > 0.2:
            validation_results['warnings'].append(f"norm_slack is {self.norm_slack} - sharp-constant checks are loose")

        if self.conservation_tolerance > 1e-6:
            validation_results['warnings'].append("conservation_tolerance above 1e-6 hides integrator drift")

        validation_results['info'].extend([
            f"App: {self.app_name} v{self.app_version}",
            f"FFT workers: {self.fft_workers}",
            f"Exponent cap: {self.exponent_cap}",
        ])

        return validation_results


# Global settings instance
settings = Settings()


def get_settings() -> Settings:
    """Get toolkit settings instance."""
    return settings


def configure(**overrides: Any) -> Settings:
    """Replace the global settings with defaults updated by ``overrides``."""
    global settings
    settings = Settings(**overrides)
    return settings


def reset_settings() -> Settings:
    """Restore default settings."""
    return configure()
