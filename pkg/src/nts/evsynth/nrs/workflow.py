"""Two-step synthesis: NRS posteriors become priors of the RCT model"""

from typing import Union, Optional
from dataclasses import dataclass
from pathlib import Path
import math

import numpy as np
import pandas as pd
from pydantic import BaseModel
from scipy.stats import skew

from .. import get_logger
from ..evidence.errors import EvidenceError
from ..evidence.types import EvidenceNetwork, Design
from ..evidence.transform import reroot_network, select_studies
from ..evidence.validation import validate_network
from ..model.config import ModelConfig, Approach, NormalPrior, ConfigurationError
from ..mcmc.settings import SamplerSettings
from ..mcmc.samples import PosteriorSamples
from ..mcmc.engine import run_chains

SKEWNESS_WARNING = 0.5


class NrsContrastSummary(BaseModel):
    """Normal summary of one basic parameter of the NRS fit"""

    treatment_id: int
    label: str
    mean: float
    variance: float
    observed: bool
    skewness: float = 0.0

    @property
    def parameter(self) -> str:
        """Basic parameter name"""
        return f"d[{self.treatment_id}]"


class NrsPosteriorSummary(BaseModel):
    """Per basic parameter posterior mean and variance from NRS-only data"""

    reference_id: int
    reference_label: str
    contrasts: list[NrsContrastSummary] = []
    warnings: list[str] = []

    def get(self, treatment_id: int) -> NrsContrastSummary:
        """Summary of d[treatment_id]"""
        for c in self.contrasts:
            if c.treatment_id == treatment_id:
                return c
        raise KeyError(f"no NRS summary for treatment {treatment_id}")

    @property
    def observed(self) -> list[int]:
        """Treatments with an NRS-informed contrast"""
        return [c.treatment_id for c in self.contrasts if c.observed]

    def to_csv(self, path: Union[str, Path]) -> Path:
        """parameter, label, mean, variance, observed, skewness per row"""
        path = Path(path)
        df = pd.DataFrame(
            [
                {
                    "parameter": c.parameter,
                    "label": c.label,
                    "reference": self.reference_label,
                    "mean": repr(c.mean),
                    "variance": repr(c.variance),
                    "observed": "true" if c.observed else "false",
                    "skewness": repr(c.skewness),
                }
                for c in self.contrasts
            ],
            columns=["parameter", "label", "reference", "mean", "variance", "observed", "skewness"],
        )
        df.to_csv(path, index=False, lineterminator="\n")
        return path

    @classmethod
    def from_csv(
        cls, path: Union[str, Path], net: Optional[EvidenceNetwork] = None
    ) -> "NrsPosteriorSummary":
        """
        Read a summary file. Only parameter, mean and variance are required,
        labels are taken from net when given.
        """
        df = pd.read_csv(path, dtype=str, keep_default_na=False)
        for column in ("parameter", "mean", "variance"):
            if column not in df.columns:
                raise EvidenceError(f"missing column '{column}'", file=str(path))
        contrasts = []
        reference_label = ""
        for row_number, row in enumerate(df.to_dict("records"), start=1):
            name = row["parameter"].strip()
            if not (name.startswith("d[") and name.endswith("]")):
                raise EvidenceError(f"parameter '{name}' is not a basic parameter", str(path), row_number)
            try:
                k = int(name[2:-1])
                mean = float(row["mean"])
                variance = float(row["variance"])
            except ValueError as e:
                raise EvidenceError(f"malformed value ({e})", str(path), row_number) from e
            if not variance > 0:
                raise EvidenceError("variance must be positive", str(path), row_number)
            observed = row.get("observed", "true").strip().lower() not in ("false", "0", "no")
            label = row.get("label", "") or (net.label(k) if net is not None else name)
            reference_label = row.get("reference", "") or reference_label
            contrasts.append(
                NrsContrastSummary(
                    treatment_id=k,
                    label=label,
                    mean=mean,
                    variance=variance,
                    observed=observed,
                    skewness=float(row.get("skewness", "") or 0.0),
                )
            )
        reference_id = 0
        if net is not None:
            if reference_label:
                reference_id = net.treatment_by_label(reference_label).id
            else:
                reference_id = net.reference_treatment
                reference_label = net.label(reference_id)
        return cls(
            reference_id=reference_id, reference_label=reference_label, contrasts=contrasts
        )


@dataclass
class TwoStepFit:
    """Both steps of the NRS-prior approach"""

    summary: NrsPosteriorSummary
    priors: dict[int, NormalPrior]
    rct_network: EvidenceNetwork
    rct_config: ModelConfig
    rct_samples: PosteriorSamples
    nrs_network: Optional[EvidenceNetwork] = None
    nrs_samples: Optional[PosteriorSamples] = None


def nrs_reference(net: EvidenceNetwork, cfg: ModelConfig) -> int:
    """Configured label, else the network reference if NRS-observed, else the lowest NRS-observed id"""
    nrs = select_studies(net, design=Design.NRS)
    observed = nrs.observed_treatments()
    if cfg.nrs is not None and cfg.nrs.reference:
        try:
            return net.treatment_by_label(cfg.nrs.reference).id
        except KeyError as e:
            raise ConfigurationError(f"NRS reference {cfg.nrs.reference} is not a treatment") from e
    if net.reference_treatment in observed or not observed:
        return net.reference_treatment
    return observed[0]


def _step_config(cfg: ModelConfig, approach: Approach, overrides: dict[int, NormalPrior]) -> ModelConfig:
    document = cfg.model_dump()
    document["approach"] = approach
    document["bias"] = None
    document["nrs"] = cfg.nrs.model_dump() if approach is Approach.NRS_PRIOR and cfg.nrs else None
    document["priors"]["basic_overrides"] = {k: p.model_dump() for k, p in overrides.items()}
    return ModelConfig(**document)


def _fit_nrs(
    net: EvidenceNetwork, cfg: ModelConfig, settings: SamplerSettings, label: str, **kwargs
) -> tuple[NrsPosteriorSummary, PosteriorSamples, EvidenceNetwork]:
    logger = get_logger(label, kwargs.get("log_level"))
    nrs = select_studies(net, design=Design.NRS)
    if not nrs.studies:
        raise EvidenceError("the network has no non-randomised studies")
    nrs = reroot_network(nrs, nrs_reference(net, cfg))
    validate_network(nrs, require_all_treatments=False)
    observed = set(nrs.observed_treatments())
    if nrs.reference_treatment not in observed:
        raise EvidenceError(
            f"NRS reference {nrs.label(nrs.reference_treatment)} is not observed in any NRS"
        )
    step_cfg = _step_config(cfg, Approach.UNADJUSTED, {})
    logger.info(
        "%s: fitting %d NRS against %s", label, len(nrs.studies), nrs.label(nrs.reference_treatment)
    )
    samples = run_chains(nrs, step_cfg, settings, label=label, **kwargs)
    contrasts = []
    warnings = []
    for k in nrs.treatment_ids:
        if k == nrs.reference_treatment:
            continue
        draws = samples.pooled(f"d[{k}]")
        skewness = float(skew(draws)) if np.ptp(draws) > 0 else 0.0
        is_observed = k in observed
        if is_observed and abs(skewness) > SKEWNESS_WARNING:
            message = f"NRS posterior of {nrs.label(k)} is skewed ({skewness:.2f})"
            logger.warning(message)
            warnings.append(message)
        contrasts.append(
            NrsContrastSummary(
                treatment_id=k,
                label=nrs.label(k),
                mean=float(np.mean(draws)),
                variance=max(float(np.var(draws, ddof=1)), np.finfo(float).tiny),
                observed=is_observed,
                skewness=skewness,
            )
        )
    summary = NrsPosteriorSummary(
        reference_id=nrs.reference_treatment,
        reference_label=nrs.label(nrs.reference_treatment),
        contrasts=contrasts,
        warnings=warnings,
    )
    return summary, samples, nrs


def fit_nrs_posterior(
    net: EvidenceNetwork, cfg: ModelConfig, settings: SamplerSettings, label: str = "NRS", **kwargs
) -> NrsPosteriorSummary:
    """Normal summaries of the basic parameters from NRS-only data"""
    return _fit_nrs(net, cfg, settings, label, **kwargs)[0]


def make_informative_priors(
    summary: NrsPosteriorSummary,
    zeta: float = 0.0,
    w: float = 1.0,
    vague: Optional[NormalPrior] = None,
) -> dict[int, NormalPrior]:
    """N(mean + zeta, variance / w) for observed contrasts, vague for the rest"""
    if not 0.0 < w <= 1.0:
        raise ConfigurationError(f"inflation factor w must lie in (0, 1], got {w}")
    if not math.isfinite(zeta):
        raise ConfigurationError(f"shift zeta must be finite, got {zeta}")
    vague = vague if vague is not None else NormalPrior()
    priors: dict[int, NormalPrior] = {}
    for c in summary.contrasts:
        if c.observed:
            priors[c.treatment_id] = NormalPrior(mean=c.mean + zeta, variance=c.variance / w)
        else:
            priors[c.treatment_id] = NormalPrior(mean=vague.mean, variance=vague.variance)
    return priors


def run_two_step(
    net: EvidenceNetwork,
    cfg: ModelConfig,
    settings: SamplerSettings,
    zeta: Optional[float] = None,
    w: Optional[float] = None,
    label: str = "TWO-STEP",
    **kwargs,
) -> TwoStepFit:
    """
    Step 1 fits the NRS, step 2 the RCT with the NRS contrasts as priors.
    Both steps share the NRS reference treatment. Without NRS, step 2 runs
    with vague priors only.
    """
    logger = get_logger(label, kwargs.get("log_level"))
    nrs_settings = cfg.nrs
    zeta = zeta if zeta is not None else (nrs_settings.zeta if nrs_settings else 0.0)
    w = w if w is not None else (nrs_settings.w if nrs_settings else 1.0)
    rct = select_studies(net, design=Design.RCT)
    if not rct.studies:
        raise EvidenceError("the network has no randomised studies")
    nrs_samples: Optional[PosteriorSamples] = None
    nrs_net: Optional[EvidenceNetwork] = None
    if select_studies(net, design=Design.NRS).studies:
        summary, nrs_samples, nrs_net = _fit_nrs(net, cfg, settings, f"{label}-NRS", **kwargs)
        rct = reroot_network(rct, summary.reference_id)
        priors = make_informative_priors(summary, zeta, w, cfg.priors.vague)
    else:
        logger.warning("%s: no NRS in the network, RCT step uses vague priors", label)
        summary = NrsPosteriorSummary(
            reference_id=net.reference_treatment,
            reference_label=net.label(net.reference_treatment),
        )
        priors = {}
    rct_cfg = _step_config(cfg, Approach.NRS_PRIOR, priors)
    logger.info("%s: fitting %d RCT with zeta=%g, w=%g", label, len(rct.studies), zeta, w)
    rct_samples = run_chains(rct, rct_cfg, settings, label=f"{label}-RCT", **kwargs)
    return TwoStepFit(
        summary=summary,
        priors=priors,
        rct_network=rct,
        rct_config=rct_cfg,
        rct_samples=rct_samples,
        nrs_network=nrs_net,
        nrs_samples=nrs_samples,
    )
