import os
from functools import lru_cache
from typing import List

from dotenv import load_dotenv
from pydantic import BaseModel, Field

load_dotenv()


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    return int(raw)


class Settings(BaseModel):
    """Runtime configuration; environment first, command-line flags override."""

    default_seed: int = Field(default=0, ge=0, lt=2**64, description="Seed used when --seed is absent")
    log_level: str = Field(default="WARNING", description="Root logging level")
    kink_tol: float = Field(default=0.0, ge=0.0, description="|x_k| <= kink_tol counts as a tie")
    max_branch_nodes: int = Field(default=20, ge=1, description="Piece enumeration bound")
    max_poly_terms: int = Field(default=100_000, ge=1, description="Symbolic term cap")
    hull_tol: float = Field(default=1e-6, gt=0.0)
    dedup_tol: float = Field(default=1e-8, gt=0.0)
    fd_steps: List[float] = Field(default_factory=lambda: [10.0**-k for k in range(3, 9)])
    cq_samples: int = Field(default=64, ge=0, description="Registration-time CQ sample count")


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings(
        default_seed=_env_int("SUBGRAD_SEED", 0),
        log_level=os.getenv("SUBGRAD_LOG_LEVEL", "WARNING"),
    )
