"""
Configuration
=============

Engine defaults, read from the environment (and a local ``.env`` file) once at import.

Every value can be overridden per run; the CLI writes the effective values into the
run report.

Usage:
    from qsoliton.config import settings

    settings.samples            # 256 unless QSOLITON_SAMPLES is set
    settings.model_copy(update={"samples": 64})
"""

import logging
import os

from dotenv import load_dotenv
from pydantic import BaseModel, Field

load_dotenv()


class Settings(BaseModel):
    """Numeric defaults for sampling, tolerances, quadrature and integration."""

    samples: int = Field(default=256, gt=0, description="Sample points per check")
    seed: int = Field(default=20240917, ge=0, description="Low-discrepancy scrambling seed")
    tolerance_exact: float = Field(default=1e-7, gt=0, description="Exact-jet charts")
    tolerance_fd: float = Field(default=1e-3, gt=0, description="Finite-difference charts")
    ball_samples: int = Field(default=512, gt=0, description="Points of B(x0, 1)")
    growth_samples: int = Field(default=512, gt=0, description="Points for growth bounds")
    mc_points: int = Field(default=8192, gt=0, description="Monte Carlo volume points")
    quadrature_nodes: int = Field(default=24, gt=1, description="Compact quadrature budget")
    workers: int = Field(default=1, ge=1, description="Threads for per-sample evaluation")
    geodesic_step: float = Field(default=5e-3, gt=0, description="RK4 step size")
    geodesic_length: float = Field(default=20.0, gt=0, description="Probe geodesic length")
    probe_geodesics: int = Field(default=8, gt=0, description="Geodesics per lower-bound probe")
    generic_cap: float = Field(default=4.0, gt=0, description="s0 cap without injectivity data")
    log_level: str = Field(default="WARNING")

    @classmethod
    def from_env(cls) -> "Settings":
        return cls(
            samples=int(os.getenv("QSOLITON_SAMPLES", 256)),
            seed=int(os.getenv("QSOLITON_SEED", 20240917)),
            tolerance_exact=float(os.getenv("QSOLITON_TOLERANCE_EXACT", 1e-7)),
            tolerance_fd=float(os.getenv("QSOLITON_TOLERANCE_FD", 1e-3)),
            ball_samples=int(os.getenv("QSOLITON_BALL_SAMPLES", 512)),
            growth_samples=int(os.getenv("QSOLITON_GROWTH_SAMPLES", 512)),
            mc_points=int(os.getenv("QSOLITON_MC_POINTS", 8192)),
            quadrature_nodes=int(os.getenv("QSOLITON_QUADRATURE_NODES", 24)),
            workers=int(os.getenv("QSOLITON_WORKERS", 1)),
            geodesic_step=float(os.getenv("QSOLITON_GEODESIC_STEP", 5e-3)),
            geodesic_length=float(os.getenv("QSOLITON_GEODESIC_LENGTH", 20.0)),
            probe_geodesics=int(os.getenv("QSOLITON_PROBE_GEODESICS", 8)),
            generic_cap=float(os.getenv("QSOLITON_GENERIC_CAP", 4.0)),
            log_level=os.getenv("QSOLITON_LOG_LEVEL", "WARNING"),
        )

    def tolerance(self, exact: bool) -> float:
        return self.tolerance_exact if exact else self.tolerance_fd


settings = Settings.from_env()


def configure_logging(level: str | None = None) -> None:
    """Configure the root logger once for the CLI and the server."""
    logging.basicConfig(
        level=(level or settings.log_level).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
