"""
Configuration models.

Environment values are read once through python-dotenv; every tunable of the
library lives in a frozen pydantic model so that a run's effective settings can
be dumped verbatim into its manifest.
"""
import os
from typing import Literal, Optional, Tuple

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

load_dotenv()

DEFAULT_RIDGE_SCHEDULE = (0.0, 1e-10, 1e-8, 1e-6, 1e-4, 1e-2)


def default_threads() -> int:
    value = os.getenv("SRGG_THREADS")
    if value:
        return max(1, int(value))
    return os.cpu_count() or 1


def default_out_dir() -> str:
    return os.getenv("SRGG_OUT_DIR", "out")


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class RidgeConfig(_Frozen):
    schedule: Tuple[float, ...] = DEFAULT_RIDGE_SCHEDULE
    pivot_floor: float = 1e-12
    symmetry_tol: float = 1e-12

    @field_validator("schedule")
    @classmethod
    def _ascending(cls, v):
        if not v:
            raise ValueError("ridge schedule must not be empty")
        if any(b < a for a, b in zip(v, v[1:])) or v[0] < 0:
            raise ValueError("ridge schedule must be non-negative and ascending")
        return v


class IngestConfig(_Frozen):
    delimiter: str = ","
    # None means detect: a first row with no numeric cell is a header
    header: Optional[bool] = None


MissingPolicy = Literal["zero", "bottom"]


class MarginalPosteriorConfig(_Frozen):
    use_normalization: bool = False
    replicate_count: int = Field(default=100, ge=0)
    replicate_rows: int = Field(default=10, ge=2)
    seed: int = 0
    convention: Literal["printed", "textbook"] = "printed"
    noise_sd: Optional[Tuple[float, ...]] = None

    @model_validator(mode="after")
    def _replicates(self):
        if self.use_normalization and self.replicate_count < 1:
            raise ValueError("replicate_count must be >= 1 when normalization is used")
        if self.noise_sd is not None and any(s < 0 for s in self.noise_sd):
            raise ValueError("noise_sd entries must be non-negative")
        return self


class McmcConfig(_Frozen):
    n_iter: int = Field(default=10000, ge=1)
    n_burnin: int = Field(default=5000, ge=0)
    proposal_sd_corr: float = Field(default=0.05, gt=0)
    proposal_sd_var: float = Field(default=0.05, gt=0)
    tau: float = Field(default=0.05, ge=0)
    seed: int = 0
    normalization: MarginalPosteriorConfig = MarginalPosteriorConfig()
    hastings: Literal["full", "truncation", "none"] = "truncation"
    graph_update: Literal["pairwise", "joint"] = "pairwise"
    corr_target: Literal["auto", "marginalized", "row_independent"] = "auto"
    ridge: RidgeConfig = RidgeConfig()

    @model_validator(mode="after")
    def _burnin(self):
        if self.n_burnin >= self.n_iter:
            raise ValueError(f"n_burnin ({self.n_burnin}) must be < n_iter ({self.n_iter})")
        return self


ScaleMode = Literal["shift", "divide", "verbatim"]


class DistanceConfig(_Frozen):
    n_burnin: int = Field(default=0, ge=0)
    scale_mode: ScaleMode = "shift"
    truncate_min: bool = False


class NetworkConfig(_Frozen):
    tau: float = Field(default=0.1, ge=0)
    dense_limit: int = Field(default=2000, ge=0)
    tile_rows: int = Field(default=512, ge=1)
    threads: int = Field(default_factory=default_threads, ge=1)
    missing_policy: MissingPolicy = "zero"
