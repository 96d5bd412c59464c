"""Configuration settings for spdgeo."""

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Numerical defaults and runtime settings with environment variable support."""

    model_config = SettingsConfigDict(
        env_prefix="SPDGEO_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=False,
        extra="ignore",
    )

    # Logging settings
    log_level: str = "WARNING"
    log_format: str = "text"  # "text" or "json"

    # Parallelism (0 = one worker per CPU)
    threads: int = Field(default=0, ge=0)

    # Spectral calculus
    hermitian_atol: float = 1e-12
    cluster_tol: float = 1e-8
    dd_switch: float = 1e-6

    # Mean branch switching
    branch_tol: float = 1e-5
    alpha_log_cutoff: float = 1e-6

    # Comparison grids and positive-definiteness checks
    grid_size: int = 64
    grid_min: float = 1e-4
    grid_max: float = 1e4
    pd_tol: float = 1e-10
    domination_slack: float = 1e-12

    # Quadrature
    closed_form_quadrature: int = 64
    polyline_quadrature: int = 8

    # Path search
    spd_floor: float = 1e-10


# Global settings instance
settings = Settings()


class NumericsConfig:
    """Fixed numerical constants."""

    # Gauss-Legendre panel size for composite quadrature
    GAUSS_PANEL_POINTS: int = 8

    # f(0) probe for custom standard functions
    ZERO_PROBE: float = 1e-12
    REGULARITY_FLOOR: float = 1e-9

    # Stolarsky expansion in theta around 0
    THETA_SERIES_RADIUS: float = 1e-5

    # Multi-matrix means
    ALM_MAX_ITERATIONS: int = 1_000_000
    KARCHER_TOL: float = 1e-12
    KARCHER_MAX_ITERATIONS: int = 200

    # Path search trust region
    TRUST_RADIUS_INITIAL: float = 0.05
    TRUST_SHRINK: float = 0.5
    TRUST_GROW: float = 1.2
    GRADIENT_STEP: float = 1e-6

    # Default tangent scale for seeded samples
    SAMPLE_LOG_SPREAD: float = 2.0
    COMMUTATOR_FLOOR: float = 1e-3


numerics = NumericsConfig()
