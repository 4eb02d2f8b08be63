"""League tables, forest rows, regression curves and bias summaries"""

from typing import Optional, Sequence
from enum import Enum

import numpy as np
from pydantic import BaseModel

from ..evidence.types import EvidenceNetwork
from ..model.config import ModelConfig, ConfigurationError
from ..mcmc.samples import PosteriorSamples
from .summary import IntervalSummary, ParameterSummary, interval, summarize


class Scale(Enum):
    """Scale of reported contrasts"""

    LOG_OR = "logOR"
    OR = "OR"


def _on_scale(summary: IntervalSummary, scale: Scale) -> IntervalSummary:
    if scale is Scale.LOG_OR:
        return summary
    return IntervalSummary(
        median=float(np.exp(summary.median)),
        lower=float(np.exp(summary.lower)),
        upper=float(np.exp(summary.upper)),
    )


def basic_draws(samples: PosteriorSamples, net: EvidenceNetwork, k: int) -> np.ndarray:
    """Pooled draws of d[k], zeros for the network reference"""
    if k == net.reference_treatment:
        return np.zeros(samples.n_chains * samples.n_draws)
    return samples.pooled(f"d[{k}]").astype(float)


def contrast_draws(samples: PosteriorSamples, net: EvidenceNetwork, a: int, b: int) -> np.ndarray:
    """Per-draw log odds ratio of b versus a, d[b] - d[a]"""
    return basic_draws(samples, net, b) - basic_draws(samples, net, a)


class LeagueTable(BaseModel):
    """Pairwise contrasts, entry (a, b) summarizes treatment b versus a"""

    labels: list[str]
    treatment_ids: list[int]
    scale: Scale
    level: float
    median: list[list[float]]
    lower: list[list[float]]
    upper: list[list[float]]

    def entry(self, a: int, b: int) -> IntervalSummary:
        """Summary of b versus a by treatment id"""
        i, j = self.treatment_ids.index(a), self.treatment_ids.index(b)
        return IntervalSummary(
            median=self.median[i][j], lower=self.lower[i][j], upper=self.upper[i][j]
        )


def league_table(
    samples: PosteriorSamples,
    net: EvidenceNetwork,
    scale: Scale = Scale.LOG_OR,
    level: float = 0.95,
) -> LeagueTable:
    """All pairwise contrasts computed draw by draw through the basic parameters"""
    ids = list(net.treatment_ids)
    n = len(ids)
    median = [[0.0] * n for _ in range(n)]
    lower = [[0.0] * n for _ in range(n)]
    upper = [[0.0] * n for _ in range(n)]
    for i, a in enumerate(ids):
        for j, b in enumerate(ids):
            s = _on_scale(interval(contrast_draws(samples, net, a, b), level), scale)
            median[i][j], lower[i][j], upper[i][j] = s.median, s.lower, s.upper
    return LeagueTable(
        labels=[net.label(k) for k in ids],
        treatment_ids=ids,
        scale=scale,
        level=level,
        median=median,
        lower=lower,
        upper=upper,
    )


class ForestRow(IntervalSummary):
    """One treatment versus the network reference"""

    contrast: str
    treatment: str
    reference: str


def forest_rows(
    samples: PosteriorSamples,
    net: EvidenceNetwork,
    scale: Scale = Scale.OR,
    level: float = 0.95,
) -> list[ForestRow]:
    """One row per treatment versus the reference"""
    ref = net.reference_treatment
    rows = []
    for k in net.treatment_ids:
        if k == ref:
            continue
        s = _on_scale(interval(contrast_draws(samples, net, ref, k), level), scale)
        rows.append(
            ForestRow(
                contrast=f"{net.label(k)} vs {net.label(ref)}",
                treatment=net.label(k),
                reference=net.label(ref),
                median=s.median,
                lower=s.lower,
                upper=s.upper,
            )
        )
    return rows


class RegressionCurve(BaseModel):
    """Odds ratio of one contrast over a grid of raw covariate values"""

    contrast: str
    covariate: str
    center: float
    slope: str
    scale: Scale
    x: list[float]
    median: list[float]
    lower: list[float]
    upper: list[float]


def _slope_draws(samples: PosteriorSamples, net: EvidenceNetwork, k: int) -> tuple[np.ndarray, str]:
    if k == net.reference_treatment:
        return np.zeros(samples.n_chains * samples.n_draws), ""
    for prefix in ("B_W", "B_B"):
        name = f"{prefix}[{k}]"
        if name in samples:
            return samples.pooled(name).astype(float), prefix
    raise ConfigurationError(f"no covariate interaction draws for treatment {net.label(k)}")


def regression_curve(
    samples: PosteriorSamples,
    net: EvidenceNetwork,
    cfg: ModelConfig,
    treatment: int,
    grid: Sequence[float],
    versus: Optional[int] = None,
    center: Optional[float] = None,
    scale: Scale = Scale.OR,
    level: float = 0.95,
) -> RegressionCurve:
    """
    Per draw exp(d + B (x_raw - center)) of treatment versus the reference
    (or versus another treatment), B is the within-study interaction when
    it is a separate parameter.
    """
    if cfg.regression is None:
        raise ConfigurationError("regression curves need a meta-regression fit")
    versus = versus if versus is not None else net.reference_treatment
    covariate = cfg.regression.covariate
    if center is None:
        center = (
            cfg.regression.center
            if cfg.regression.center is not None
            else net.covariate_centers[net.covariate_index(covariate)]
        )
    d = contrast_draws(samples, net, versus, treatment)
    b_k, prefix_k = _slope_draws(samples, net, treatment)
    b_a, prefix_a = _slope_draws(samples, net, versus)
    slope = b_k - b_a
    median, lower, upper = [], [], []
    for x in grid:
        s = _on_scale(interval(d + slope * (float(x) - center), level), scale)
        median.append(s.median)
        lower.append(s.lower)
        upper.append(s.upper)
    return RegressionCurve(
        contrast=f"{net.label(treatment)} vs {net.label(versus)}",
        covariate=covariate,
        center=float(center),
        slope=prefix_k or prefix_a,
        scale=scale,
        x=[float(x) for x in grid],
        median=median,
        lower=lower,
        upper=upper,
    )


class BiasReport(BaseModel):
    """Exponentiated mean bias, bias heterogeneity and per-study P(R = 1)"""

    mean_bias: list[ParameterSummary] = []
    heterogeneity: list[ParameterSummary] = []
    other: list[ParameterSummary] = []
    bias_probability: dict[str, float] = {}


def _exponentiated(summary: ParameterSummary, draws: np.ndarray) -> ParameterSummary:
    ratio = np.exp(draws)
    return ParameterSummary(
        name=f"exp({summary.name})",
        mean=float(np.mean(ratio)),
        sd=float(np.std(ratio, ddof=1)) if ratio.size > 1 else 0.0,
        median=float(np.exp(summary.median)),
        lower=float(np.exp(summary.lower)),
        upper=float(np.exp(summary.upper)),
        rhat=summary.rhat,
        ess=summary.ess,
    )


def bias_report(
    samples: PosteriorSamples, cfg: ModelConfig, level: float = 0.95
) -> BiasReport:
    """
    exp(g) and exp(g_act) summaries, tau_gamma, logistic, weight and
    direction parameters, and the posterior mean of every R[j].
    """
    if cfg.bias is None:
        raise ConfigurationError("no bias model configured")
    names = samples.names
    means = [n for n in names if n.startswith("g") and not n.startswith("gamma")]
    taus = [n for n in names if n.startswith("tau_gamma")]
    other = [
        n
        for n in names
        if n in ("e", "p_dir") or n.startswith(("f[", "q[", "pi["))
    ]
    summaries = {s.name: s for s in summarize(samples, level, means + taus + other)}
    probability = {
        n[2:-1]: float(np.mean(samples.pooled(n))) for n in names if n.startswith("R[")
    }
    return BiasReport(
        mean_bias=[_exponentiated(summaries[n], samples.pooled(n).astype(float)) for n in means],
        heterogeneity=[summaries[n] for n in taus],
        other=[summaries[n] for n in other],
        bias_probability=probability,
    )
