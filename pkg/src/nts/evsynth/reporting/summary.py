"""Posterior medians and equal-tailed credible intervals"""

from typing import Optional, Sequence
import math

import numpy as np
from pydantic import BaseModel, field_validator

from ..mcmc.samples import PosteriorSamples
from ..mcmc.diagnostics import diagnose

# numpy "linear": h = (n - 1) q, interpolate between order statistics floor(h) and ceil(h)
QUANTILE_METHOD = "linear"


class IntervalSummary(BaseModel):
    """Median and equal-tailed interval of a scalar"""

    median: float
    lower: float
    upper: float


class ParameterSummary(IntervalSummary):
    """Posterior summary of one parameter"""

    name: str
    mean: float
    sd: float
    rhat: float = math.nan
    ess: float = math.nan

    @field_validator("rhat", "ess", mode="before")
    @classmethod
    def _missing_is_nan(cls, v):
        # JSON stores NaN as null
        return math.nan if v is None else v


def check_level(level: float) -> float:
    """Credible level in (0, 1)"""
    if not 0.0 < level < 1.0:
        raise ValueError(f"credible level must lie in (0, 1), got {level}")
    return float(level)


def interval(draws: np.ndarray, level: float = 0.95) -> IntervalSummary:
    """Median and (1 - level)/2, (1 + level)/2 quantiles"""
    draws = np.asarray(draws, dtype=float).reshape(-1)
    if draws.size == 0:
        raise ValueError("no draws to summarize")
    alpha = (1.0 - check_level(level)) / 2.0
    lower, median, upper = np.quantile(draws, [alpha, 0.5, 1.0 - alpha], method=QUANTILE_METHOD)
    return IntervalSummary(median=float(median), lower=float(lower), upper=float(upper))


def summarize(
    samples: PosteriorSamples,
    level: float = 0.95,
    names: Optional[Sequence[str]] = None,
    diagnostics: bool = True,
) -> list[ParameterSummary]:
    """Per parameter mean, sd, median, CrI and, when computable, R-hat and ESS"""
    if samples.n_draws == 0 or samples.n_chains == 0:
        raise ValueError("no retained draws to summarize")
    names = list(names) if names is not None else list(samples.names)
    checks = diagnose(samples, names) if diagnostics else {}
    out = []
    for name in names:
        draws = samples.pooled(name).astype(float)
        ci = interval(draws, level)
        rhat, ess = checks.get(name, (math.nan, math.nan))
        out.append(
            ParameterSummary(
                name=name,
                mean=float(np.mean(draws)),
                sd=float(np.std(draws, ddof=1)) if draws.size > 1 else 0.0,
                median=ci.median,
                lower=ci.lower,
                upper=ci.upper,
                rhat=rhat,
                ess=ess,
            )
        )
    return out


def max_rhat(summaries: Sequence[ParameterSummary]) -> float:
    """Largest computable R-hat, NaN when none is computable"""
    values = [s.rhat for s in summaries if not math.isnan(s.rhat)]
    return max(values) if values else math.nan
