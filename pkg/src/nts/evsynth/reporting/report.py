"""Fit report assembly"""

from typing import Optional, Sequence
import math

from pydantic import BaseModel, field_validator

from .. import get_logger
from ..evidence.types import EvidenceNetwork
from ..model.config import ModelConfig
from ..mcmc.samples import PosteriorSamples
from .summary import ParameterSummary, summarize, max_rhat, check_level
from .tables import (
    Scale,
    LeagueTable,
    ForestRow,
    RegressionCurve,
    BiasReport,
    league_table,
    forest_rows,
    regression_curve,
    bias_report,
)

RHAT_THRESHOLD = 1.05


class FitReport(BaseModel):
    """Everything reported about one fit"""

    approach: str
    level: float
    reference: str
    n_chains: int
    n_draws: int
    seed: Optional[int] = None
    centers: dict[str, float] = {}
    parameters: list[ParameterSummary]
    league_table: LeagueTable
    forest: list[ForestRow]
    bias: Optional[BiasReport] = None
    curves: list[RegressionCurve] = []
    max_rhat: float = math.nan
    converged: bool = True
    warnings: list[str] = []

    @field_validator("max_rhat", mode="before")
    @classmethod
    def _missing_is_nan(cls, v):
        return math.nan if v is None else v

    def parameter(self, name: str) -> ParameterSummary:
        """Summary by parameter name"""
        for p in self.parameters:
            if p.name == name:
                return p
        raise KeyError(f"no summary for parameter {name}")


def build_report(
    samples: PosteriorSamples,
    net: EvidenceNetwork,
    cfg: ModelConfig,
    level: float = 0.95,
    curve_grid: Optional[Sequence[float]] = None,
    label: str = "REPORT",
    **kwargs,
) -> FitReport:
    """
    Summaries, league table and forest rows of the fit. Bias summaries are
    added for bias models and regression curves of every treatment versus
    the reference when a covariate grid is given.
    """
    logger = get_logger(label, int(kwargs.pop("log_level")) if "log_level" in kwargs else None)
    check_level(level)
    parameters = summarize(samples, level)
    continuous = parameters[: samples.n_continuous]
    worst = max_rhat(continuous)
    warnings = []
    converged = True
    if not math.isnan(worst) and worst >= RHAT_THRESHOLD:
        converged = False
        slow = [p.name for p in continuous if not math.isnan(p.rhat) and p.rhat >= RHAT_THRESHOLD]
        message = f"R-hat >= {RHAT_THRESHOLD} for {', '.join(slow)}"
        logger.warning(message)
        warnings.append(message)
    curves = []
    if curve_grid is not None and cfg.regression is not None:
        for k in net.treatment_ids:
            if k != net.reference_treatment:
                curves.append(regression_curve(samples, net, cfg, k, curve_grid, level=level))
    centers = dict(zip(net.covariate_names, net.covariate_centers))
    if cfg.regression is not None and cfg.regression.center is not None:
        centers[cfg.regression.covariate] = cfg.regression.center
    report = FitReport(
        approach=cfg.approach.value,
        level=level,
        reference=net.label(net.reference_treatment),
        n_chains=samples.n_chains,
        n_draws=samples.n_draws,
        seed=samples.seed,
        centers=centers,
        parameters=parameters,
        league_table=league_table(samples, net, Scale.LOG_OR, level),
        forest=forest_rows(samples, net, Scale.OR, level),
        bias=bias_report(samples, cfg, level) if cfg.bias is not None else None,
        curves=curves,
        max_rhat=worst,
        converged=converged,
        warnings=warnings,
    )
    logger.info("%s: %d parameters summarized, max R-hat %.4f", label, len(parameters), worst)
    return report
