"""Configuration for anosov-forge.

Environment-based configuration using pydantic-settings.
"""

import os
from typing import Literal

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    """Application settings loaded from environment."""

    model_config = SettingsConfigDict(
        env_prefix="ANOSOV_FORGE_",
        env_file=".env",
        env_file_encoding="utf-8",
    )

    # Enumeration
    max_length: int = 6
    enumeration_cap: int = 10**7
    workers: int = 0  # 0 = machine parallelism
    seed: int = 0

    # Tolerances
    tolerance: float = 1e-9
    residual_tol: float = 1e-6
    incidence_tol: float = 1e-12
    rational_tol: float = 1e-12

    # Ping-pong certificates
    net_resolution: float = 0.004
    epsilon0: float = 0.05
    epsilon_halvings: int = 6
    arc_radius: float = 0.1
    expansion: float = 2.0
    power_max: int = 64

    # Perturbations
    amplitude: float = 0.25
    bisection_max_steps: int = 60
    p_max: int = 16
    approach_tol: float = 1e-6
    genericity_eta: float = 0.05

    # Suspensions
    tau_max_iter: int = 100
    tau_p_cap: int = 10**6
    balance_bound: float = 4.0
    balance_max: int = 32
    cs_tol: float = 1e-8

    # Flag dynamics
    coverage_eta: float = 0.05
    coverage_delta: float = 0.1
    dedup_resolution: float = 1e-6

    # Output
    output_format: Literal["json", "tsv"] = "json"

    # Logging
    log_level: str = "INFO"

    def worker_count(self) -> int:
        """Resolve the worker pool size."""
        if self.workers > 0:
            return self.workers
        return os.cpu_count() or 1


# Global settings instance
settings = Settings()
