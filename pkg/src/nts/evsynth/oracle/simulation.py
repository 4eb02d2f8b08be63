"""Synthetic networks with injected bias and their truth records"""

from typing import Union, Optional
from pathlib import Path
import math

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.special import expit
from scipy.stats import ttest_ind

from ..evidence.types import (
    AdArm,
    DataFormat,
    Design,
    Direction,
    EvidenceNetwork,
    IpdRecord,
    RiskOfBias,
    Study,
    Treatment,
)
from ..kernel.densities import multiarm_covariance

PRESETS = ("rrms-shape", "tiny", "nrs-dominant")
COVARIATE_NAME = "x1"


class SimulatedTreatment(BaseModel):
    """Treatment with its true basic parameter versus the reference"""

    label: str
    is_active: bool = True
    effect: float = 0.0
    interaction: float = 0.0


class SimulatedStudy(BaseModel):
    """Study shape, the reference arm is its lowest treatment id"""

    id: str
    treatments: list[str] = Field(min_length=2)
    n_per_arm: int = Field(default=100, ge=1)
    design: Design = Design.RCT
    data_format: DataFormat = DataFormat.AD
    rob: RiskOfBias = RiskOfBias.LOW


class CovariateSpec(BaseModel):
    """Participant covariate distribution and the true prognostic slope"""

    mean: float = 0.0
    sd: float = Field(default=1.0, gt=0.0)
    study_sd: float = Field(default=0.0, ge=0.0)
    center: float = 0.0
    beta0: float = 0.0


class BiasTruth(BaseModel):
    """Additive bias generated in studies with R = 1"""

    g: float = 0.0
    g_act: float = 0.0
    tau_gamma: float = Field(default=0.0, ge=0.0)
    pi_low: float = Field(default=0.0, ge=0.0, le=1.0)
    pi_high: float = Field(default=1.0, ge=0.0, le=1.0)
    pi_unclear: float = Field(default=0.5, ge=0.0, le=1.0)
    record_directions: bool = True

    def pi(self, rob: RiskOfBias) -> float:
        """Bias probability of a RoB class"""
        return {
            RiskOfBias.LOW: self.pi_low,
            RiskOfBias.HIGH: self.pi_high,
            RiskOfBias.UNCLEAR: self.pi_unclear,
        }[rob]


class SimulationSpec(BaseModel):
    """True parameter values, network shape and seed"""

    model_config = ConfigDict(extra="forbid")

    treatments: list[SimulatedTreatment] = Field(min_length=2)
    studies: list[SimulatedStudy] = Field(min_length=1)
    reference: Optional[str] = None
    tau: float = Field(default=0.0, ge=0.0)
    baseline_mean: float = 0.0
    baseline_sd: float = Field(default=0.5, ge=0.0)
    covariate: Optional[CovariateSpec] = None
    bias: BiasTruth = BiasTruth()
    seed: int = Field(default=1, ge=0)

    @model_validator(mode="after")
    def _consistent(self) -> "SimulationSpec":
        labels = [t.label for t in self.treatments]
        if len(set(labels)) != len(labels):
            raise ValueError("treatment labels must be unique")
        if self.reference is not None and self.reference not in labels:
            raise ValueError(f"reference '{self.reference}' is not a treatment")
        ids = [s.id for s in self.studies]
        if len(set(ids)) != len(ids):
            raise ValueError("study ids must be unique")
        for s in self.studies:
            unknown = [t for t in s.treatments if t not in labels]
            if unknown:
                raise ValueError(f"study {s.id}: unknown treatments {', '.join(unknown)}")
            if len(set(s.treatments)) != len(s.treatments):
                raise ValueError(f"study {s.id}: repeated treatment")
        return self

    def treatment_id(self, label: str) -> int:
        """1-based id in declaration order"""
        return [t.label for t in self.treatments].index(label) + 1

    @property
    def reference_id(self) -> int:
        """Network reference treatment id"""
        return self.treatment_id(self.reference) if self.reference is not None else 1

    def basic(self, k: int) -> float:
        """True d[k] relative to the network reference"""
        return self.treatments[k - 1].effect - self.treatments[self.reference_id - 1].effect

    def interaction(self, k: int) -> float:
        """True interaction of k relative to the network reference"""
        return (
            self.treatments[k - 1].interaction
            - self.treatments[self.reference_id - 1].interaction
        )


class TruthRecord(BaseModel):
    """Generating values by parameter name"""

    values: dict[str, float]

    def to_csv(self, path: Union[str, Path]) -> Path:
        """parameter, value rows"""
        path = Path(path)
        df = pd.DataFrame(
            {"parameter": list(self.values), "value": [repr(v) for v in self.values.values()]}
        )
        df.to_csv(path, index=False, lineterminator="\n")
        return path

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "TruthRecord":
        """Read a record written by to_csv"""
        df = pd.read_csv(path, dtype={"parameter": str, "value": float})
        return cls(values=dict(zip(df["parameter"], df["value"].astype(float))))


def _mean_bias(spec: SimulationSpec, b: int, k: int, direction: int) -> float:
    b_active = spec.treatments[b - 1].is_active
    k_active = spec.treatments[k - 1].is_active
    if not b_active and k_active:
        return spec.bias.g
    if b_active and not k_active:
        return -spec.bias.g
    if b_active and k_active:
        return -spec.bias.g_act if direction else spec.bias.g_act
    return 0.0


def simulate_network(spec: SimulationSpec) -> tuple[EvidenceNetwork, TruthRecord]:
    """
    Draw a network from the generative model: arm-based logits with
    multi-arm normal random effects, additive bias N(g_bk, tau_gamma^2) in
    studies with R = 1, Bernoulli IPD rows and binomial AD arms.
    """
    # pylint: disable=too-many-locals
    rng = np.random.default_rng(spec.seed)
    cov = spec.covariate
    truth: dict[str, float] = {}
    for k in range(1, len(spec.treatments) + 1):
        if k != spec.reference_id:
            truth[f"d[{k}]"] = spec.basic(k)
            if cov is not None:
                truth[f"B_B[{k}]"] = spec.interaction(k)
    truth["tau"] = spec.tau
    truth["g"] = spec.bias.g
    truth["g_act"] = spec.bias.g_act
    truth["tau_gamma"] = spec.bias.tau_gamma
    if cov is not None:
        truth["beta0"] = cov.beta0

    studies = []
    for s in spec.studies:
        arms = sorted(spec.treatment_id(t) for t in s.treatments)
        b, others = arms[0], arms[1:]
        u = rng.normal(spec.baseline_mean, spec.baseline_sd) if spec.baseline_sd > 0 else spec.baseline_mean
        mean = np.asarray([spec.basic(k) - spec.basic(b) for k in others])
        if spec.tau > 0:
            effects = rng.multivariate_normal(mean, multiarm_covariance(len(others), spec.tau))
        else:
            effects = mean.copy()
        r_j = int(rng.random() < spec.bias.pi(s.rob))
        directions: dict[int, Direction] = {}
        for a, k in enumerate(others):
            dir_bk = int(rng.random() < 0.5)
            if spec.treatments[b - 1].is_active and spec.treatments[k - 1].is_active:
                if spec.bias.record_directions:
                    directions[k] = Direction.FAVOURS_K if dir_bk else Direction.FAVOURS_B
            if r_j:
                g_bk = _mean_bias(spec, b, k, dir_bk)
                effects[a] += rng.normal(g_bk, spec.bias.tau_gamma) if spec.bias.tau_gamma > 0 else g_bk
        truth[f"u[{s.id}]"] = float(u)
        truth[f"R[{s.id}]"] = float(r_j)
        center = cov.center if cov is not None else 0.0
        study_mean = (
            float(rng.normal(cov.mean, cov.study_sd)) if cov is not None and cov.study_sd > 0
            else (cov.mean if cov is not None else 0.0)
        )
        slope = {k: spec.interaction(k) - spec.interaction(b) for k in others}
        eff = dict(zip(others, effects))
        ipd: list[IpdRecord] = []
        ad: list[AdArm] = []
        for k in arms:
            if s.data_format is DataFormat.IPD:
                if cov is not None:
                    x = rng.normal(study_mean, cov.sd, size=s.n_per_arm)
                else:
                    x = np.zeros(s.n_per_arm)
                xc = x - center
                eta = u + (cov.beta0 if cov is not None else 0.0) * xc
                if k != b:
                    eta = eta + eff[k] + slope[k] * xc
                y = rng.random(s.n_per_arm) < expit(eta)
                for xi, yi in zip(x, y):
                    ipd.append(
                        IpdRecord(s.id, k, int(yi), (float(xi),) if cov is not None else ())
                    )
            else:
                eta = u
                if k != b:
                    eta = eta + eff[k] + slope[k] * (study_mean - center)
                r = int(rng.binomial(s.n_per_arm, float(expit(eta))))
                ad.append(
                    AdArm(s.id, k, r, s.n_per_arm, (study_mean,) if cov is not None else ())
                )
        studies.append(
            Study(
                id=s.id,
                design=s.design,
                data_format=s.data_format,
                reference_arm=b,
                arms=tuple(arms),
                rob_level=s.rob,
                ipd=tuple(ipd),
                ad=tuple(ad),
                bias_direction=directions,
            )
        )
    for rob in RiskOfBias:
        truth[f"pi_{rob.value}"] = spec.bias.pi(rob)
    net = EvidenceNetwork(
        treatments=tuple(
            Treatment(i + 1, t.label, t.is_active) for i, t in enumerate(spec.treatments)
        ),
        studies=tuple(studies),
        reference_treatment=spec.reference_id,
        covariate_names=(COVARIATE_NAME,) if cov is not None else (),
    )
    return net, TruthRecord(values=truth)


def preset(name: str, seed: int = 1) -> SimulationSpec:
    """Named simulation shapes"""
    if name == "rrms-shape":
        return SimulationSpec(
            treatments=[
                SimulatedTreatment(label="placebo", is_active=False),
                SimulatedTreatment(label="DF", effect=-0.6, interaction=0.016),
                SimulatedTreatment(label="GA", effect=-0.35, interaction=0.016),
                SimulatedTreatment(label="N", effect=-0.9, interaction=0.016),
            ],
            studies=[
                SimulatedStudy(id="AFFIRM", treatments=["N", "placebo"], n_per_arm=470,
                               data_format=DataFormat.IPD),
                SimulatedStudy(id="CONFIRM", treatments=["DF", "GA", "placebo"], n_per_arm=472,
                               data_format=DataFormat.IPD),
                SimulatedStudy(id="DEFINE", treatments=["DF", "placebo"], n_per_arm=617,
                               data_format=DataFormat.IPD),
                SimulatedStudy(id="SMSC", treatments=["DF", "GA", "N"], n_per_arm=69,
                               design=Design.NRS, data_format=DataFormat.IPD,
                               rob=RiskOfBias.HIGH),
                SimulatedStudy(id="Bornstein", treatments=["GA", "placebo"], n_per_arm=25,
                               rob=RiskOfBias.HIGH),
                SimulatedStudy(id="Johnson", treatments=["GA", "placebo"], n_per_arm=125,
                               rob=RiskOfBias.HIGH),
            ],
            baseline_mean=-0.4,
            baseline_sd=0.3,
            covariate=CovariateSpec(mean=38.0, sd=9.0, study_sd=4.0, center=38.0),
            bias=BiasTruth(g=-0.35, pi_low=0.01, pi_high=0.99),
            seed=seed,
        )
    if name == "tiny":
        return SimulationSpec(
            treatments=[
                SimulatedTreatment(label="A", is_active=False),
                SimulatedTreatment(label="B", effect=0.5),
            ],
            studies=[SimulatedStudy(id="S1", treatments=["A", "B"], n_per_arm=10)],
            baseline_mean=0.0,
            baseline_sd=0.5,
            seed=seed,
        )
    if name == "nrs-dominant":
        return SimulationSpec(
            treatments=[
                SimulatedTreatment(label="placebo", is_active=False),
                SimulatedTreatment(label="X", effect=-0.5),
                SimulatedTreatment(label="Y", effect=-0.2),
            ],
            studies=[
                SimulatedStudy(id="RCT1", treatments=["placebo", "X"], n_per_arm=60),
                SimulatedStudy(id="RCT2", treatments=["placebo", "Y"], n_per_arm=60),
                SimulatedStudy(id="RCT3", treatments=["X", "Y"], n_per_arm=60),
                SimulatedStudy(id="NRS1", treatments=["placebo", "X", "Y"], n_per_arm=3000,
                               design=Design.NRS, rob=RiskOfBias.HIGH),
            ],
            baseline_mean=-0.4,
            baseline_sd=0.3,
            bias=BiasTruth(g=-0.4, pi_high=1.0),
            seed=seed,
        )
    raise ValueError(f"unknown preset '{name}', choose one of {', '.join(PRESETS)}")


def exchangeability_pvalue(net: EvidenceNetwork, truth: TruthRecord) -> float:
    """
    Welch test p-value comparing empirical arm log odds ratios of studies
    generated with and without bias.
    """
    groups: dict[int, list[float]] = {0: [], 1: []}
    for s in net.studies:
        if s.is_ipd:
            continue
        ref = s.ad_arm(s.reference_arm)
        for k in s.non_reference_arms:
            arm = s.ad_arm(k)
            log_or = math.log((arm.r + 0.5) / (arm.n - arm.r + 0.5)) - math.log(
                (ref.r + 0.5) / (ref.n - ref.r + 0.5)
            )
            groups[int(truth.values[f"R[{s.id}]"])].append(log_or)
    if len(groups[0]) < 2 or len(groups[1]) < 2:
        raise ValueError("both groups need at least two contrasts")
    return float(ttest_ind(groups[0], groups[1], equal_var=False).pvalue)
