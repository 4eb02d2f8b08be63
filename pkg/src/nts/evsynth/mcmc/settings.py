"""Sampler settings"""

from typing import Optional
import os

from pydantic import BaseModel, ConfigDict, Field, model_validator

THREADS_ENV = "EVSYNTH_THREADS"


class SamplerError(ValueError):
    """Sampler precondition failed or the start is not finite"""


def default_threads() -> int:
    """Chains run in parallel, from EVSYNTH_THREADS, 1 if unset"""
    value = os.environ.get(THREADS_ENV, "")
    try:
        return max(1, int(value))
    except ValueError:
        return 1


class SamplerSettings(BaseModel):
    """Chains, iterations, burn-in, thinning, seed and step-size adaptation"""

    model_config = ConfigDict(extra="forbid")

    n_chains: int = Field(default=2, ge=1)
    n_iterations: int = Field(default=100000, ge=1)
    burn_in: int = Field(default=40000, ge=0)
    thin: int = Field(default=1, ge=1)
    seed: int = Field(default=20240101, ge=0)
    adaptation_window: int = Field(default=50, ge=1)
    target_acceptance: float = Field(default=0.44, gt=0.0, lt=1.0)
    initial_step: float = Field(default=0.1, gt=0.0)
    n_threads: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _burn_in_before_end(self) -> "SamplerSettings":
        if not self.burn_in < self.n_iterations:
            raise ValueError("burn_in must be smaller than n_iterations")
        return self

    @property
    def n_retained(self) -> int:
        """Retained draws per chain"""
        return (self.n_iterations - self.burn_in) // self.thin

    @property
    def threads(self) -> int:
        """Worker threads for chains"""
        return self.n_threads if self.n_threads is not None else default_threads()

    def is_retained(self, iteration: int) -> bool:
        """True when 0-based iteration is kept"""
        return iteration >= self.burn_in and (iteration - self.burn_in + 1) % self.thin == 0
