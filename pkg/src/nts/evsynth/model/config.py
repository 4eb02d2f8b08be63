"""Synthesis model configuration"""

from typing import Union, Optional, Any
from pathlib import Path
from enum import Enum
import math

import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.special import betaln

from ..evidence.types import RiskOfBias, EvidenceNetwork
from ..evidence.transform import center_covariates


class ConfigurationError(ValueError):
    """Configuration is inconsistent with itself or with the network"""


class Approach(Enum):
    """Synthesis approach"""

    UNADJUSTED = "unadjusted"
    NRS_PRIOR = "nrs_prior"
    BIAS_MODEL_1 = "bias_model_1"
    BIAS_MODEL_2 = "bias_model_2"


class Effect(Enum):
    """Combination of study-specific parameters across studies"""

    RANDOM = "random"
    COMMON = "common"


class BaselineBeta0(Enum):
    """Prognostic covariate effect combination"""

    INDEPENDENT = "independent"
    RANDOM = "random"


class WithinBetween(Enum):
    """Relation of patient-level and study-level interactions"""

    SEPARATE = "separate"
    EQUAL = "equal"


class BiasForm(Enum):
    """How the bias term enters the relative effect"""

    ADDITIVE = "additive"
    MULTIPLICATIVE = "multiplicative"
    BOTH = "both"


class BiasMeanStructure(Enum):
    """Mean bias for active vs active comparisons"""

    ZERO_ACTIVE_ACTIVE = "zero_active_active"
    SIGNED_ACTIVE_ACTIVE = "signed_active_active"


class BiasProbabilityModel(Enum):
    """Prior model of the bias probability"""

    PER_STUDY_BETA = "per_study_beta"
    LOGISTIC_ON_Z = "logistic_on_z"


class Heterogeneity(Enum):
    """Bias heterogeneity parametrisation"""

    TAU_GAMMA_PRIOR = "tau_gamma_prior"
    ROB_WEIGHT = "rob_weight"


LOG_2PI = math.log(2.0 * math.pi)


class NormalPrior(BaseModel):
    """Normal prior given by mean and variance"""

    model_config = ConfigDict(frozen=True)

    mean: float = 0.0
    variance: float = 100.0

    @field_validator("variance")
    @classmethod
    def _positive_variance(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("variance must be positive")
        return v

    @property
    def sd(self) -> float:
        """Standard deviation"""
        return math.sqrt(self.variance)

    def logpdf(self, x: float) -> float:
        """Log density"""
        return -0.5 * (LOG_2PI + math.log(self.variance)) - 0.5 * (
            x - self.mean
        ) ** 2 / self.variance


class UniformPrior(BaseModel):
    """Uniform prior on (lower, upper)"""

    model_config = ConfigDict(frozen=True)

    lower: float = 0.0
    upper: float = 2.0

    @model_validator(mode="after")
    def _ordered(self) -> "UniformPrior":
        if not self.upper > self.lower:
            raise ValueError("upper bound must exceed lower bound")
        return self

    @property
    def mean(self) -> float:
        """Prior mean"""
        return 0.5 * (self.lower + self.upper)

    def logpdf(self, x: float) -> float:
        """Log density, -inf outside the open interval"""
        if self.lower < x < self.upper:
            return -math.log(self.upper - self.lower)
        return -math.inf


class BetaPrior(BaseModel):
    """Beta(a, b) prior"""

    model_config = ConfigDict(frozen=True)

    a: float = 1.0
    b: float = 1.0

    @field_validator("a", "b")
    @classmethod
    def _positive(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("beta parameters must be positive")
        return v

    @model_validator(mode="before")
    @classmethod
    def _from_pair(cls, data: Any) -> Any:
        if isinstance(data, (list, tuple)) and len(data) == 2:
            return {"a": data[0], "b": data[1]}
        if isinstance(data, str) and "," in data:
            a, b = data.split(",")
            return {"a": float(a), "b": float(b)}
        return data

    @property
    def mean(self) -> float:
        """Prior mean a/(a+b)"""
        return self.a / (self.a + self.b)

    def logpdf(self, x: float) -> float:
        """Log density, -inf outside (0, 1)"""
        if not 0.0 < x < 1.0:
            return -math.inf
        return (
            (self.a - 1.0) * math.log(x)
            + (self.b - 1.0) * math.log1p(-x)
            - float(betaln(self.a, self.b))
        )


Prior = Union[NormalPrior, UniformPrior, BetaPrior]


class RegressionSettings(BaseModel):
    """Meta-regression on a single effect modifier"""

    model_config = ConfigDict(extra="forbid")

    covariate: str = "x1"
    center: Optional[float] = None  # raw value subtracted before fitting
    baseline_beta0: BaselineBeta0 = BaselineBeta0.INDEPENDENT
    within_between: WithinBetween = WithinBetween.SEPARATE


class RobWeightSettings(BaseModel):
    """RoB weights q_j: fixed values or Beta(v, 1) priors"""

    model_config = ConfigDict(extra="forbid")

    v: float = 1.0
    v_by_rob: dict[RiskOfBias, float] = {}
    fixed_q_by_rob: dict[RiskOfBias, float] = {}
    fixed_q: dict[str, float] = {}

    @field_validator("v")
    @classmethod
    def _positive_v(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("v must be positive")
        return v

    @field_validator("v_by_rob")
    @classmethod
    def _positive_v_map(cls, v: dict) -> dict:
        for value in v.values():
            if not value > 0:
                raise ValueError("v must be positive")
        return v

    @field_validator("fixed_q_by_rob", "fixed_q")
    @classmethod
    def _unit_weights(cls, v: dict) -> dict:
        for value in v.values():
            if not 0.0 < value <= 1.0:
                raise ValueError("fixed RoB weights must lie in (0, 1]")
        return v

    @field_validator("v_by_rob", "fixed_q_by_rob", mode="before")
    @classmethod
    def _rob_keys(cls, v: Any) -> Any:
        if isinstance(v, dict):
            return {
                (RiskOfBias.parse(k) if isinstance(k, str) else k): val
                for k, val in v.items()
            }
        return v

    def fixed_weight(self, study_id: str, rob: Optional[RiskOfBias]) -> Optional[float]:
        """Fixed q of the study, None when q is estimated"""
        if study_id in self.fixed_q:
            return self.fixed_q[study_id]
        if rob is not None and rob in self.fixed_q_by_rob:
            return self.fixed_q_by_rob[rob]
        return None

    def weight_prior(self, rob: Optional[RiskOfBias]) -> BetaPrior:
        """Beta(v, 1) prior of an estimated weight"""
        v = self.v_by_rob.get(rob, self.v) if rob is not None else self.v
        return BetaPrior(a=v, b=1.0)


class BiasSettings(BaseModel):
    """Bias-adjustment settings of bias models 1 and 2"""

    # pylint: disable=too-many-instance-attributes

    model_config = ConfigDict(extra="forbid")

    form: BiasForm = BiasForm.ADDITIVE
    effect: Effect = Effect.RANDOM
    mean_structure: BiasMeanStructure = BiasMeanStructure.ZERO_ACTIVE_ACTIVE
    probability_model: BiasProbabilityModel = BiasProbabilityModel.PER_STUDY_BETA
    heterogeneity: Heterogeneity = Heterogeneity.TAU_GAMMA_PRIOR
    pi_low: BetaPrior = BetaPrior(a=1.0, b=100.0)
    pi_high: BetaPrior = BetaPrior(a=100.0, b=1.0)
    pi_unclear: BetaPrior = BetaPrior(a=1.0, b=1.0)
    direction_prior: BetaPrior = BetaPrior(a=1.0, b=1.0)
    logistic_prior: NormalPrior = NormalPrior()
    rob_weight: RobWeightSettings = RobWeightSettings()

    @model_validator(mode="after")
    def _rob_weight_form(self) -> "BiasSettings":
        if self.heterogeneity is Heterogeneity.ROB_WEIGHT:
            if self.form is not BiasForm.ADDITIVE:
                raise ValueError("RoB weights require the additive bias form")
        return self

    def pi_prior(self, rob: Optional[RiskOfBias]) -> Optional[BetaPrior]:
        """Default bias probability prior of a RoB class"""
        if rob is RiskOfBias.LOW:
            return self.pi_low
        if rob is RiskOfBias.HIGH:
            return self.pi_high
        if rob is RiskOfBias.UNCLEAR:
            return self.pi_unclear
        return None


class NrsPriorSettings(BaseModel):
    """Shift and inflation of NRS-based priors"""

    model_config = ConfigDict(extra="forbid")

    zeta: float = 0.0
    w: float = 1.0
    reference: Optional[str] = None

    @field_validator("w")
    @classmethod
    def _inflation_range(cls, v: float) -> float:
        if not 0.0 < v <= 1.0:
            raise ValueError("w must lie in (0, 1]")
        return v


class PriorSettings(BaseModel):
    """Minimally informative priors and per-basic-parameter overrides"""

    model_config = ConfigDict(extra="forbid")

    baseline: NormalPrior = NormalPrior()
    vague: NormalPrior = NormalPrior()
    tau_upper: float = 2.0
    basic_overrides: dict[int, NormalPrior] = {}

    @field_validator("tau_upper")
    @classmethod
    def _positive_upper(cls, v: float) -> float:
        if not v > 0:
            raise ValueError("tau upper bound must be positive")
        return v

    @property
    def tau(self) -> UniformPrior:
        """Prior of every heterogeneity standard deviation"""
        return UniformPrior(lower=0.0, upper=self.tau_upper)


class ModelConfig(BaseModel):
    """Synthesis approach, effect assumptions, bias form and priors"""

    model_config = ConfigDict(extra="forbid")

    approach: Approach = Approach.UNADJUSTED
    trt_effect: Effect = Effect.RANDOM
    regression: Optional[RegressionSettings] = None
    interaction_effect: Optional[Effect] = None
    bias: Optional[BiasSettings] = None
    nrs: Optional[NrsPriorSettings] = None
    priors: PriorSettings = Field(default_factory=PriorSettings)

    @model_validator(mode="after")
    def _consistent(self) -> "ModelConfig":
        if self.is_bias_model:
            if self.bias is None:
                self.bias = BiasSettings()
        elif self.bias is not None:
            raise ValueError(f"bias settings given for approach {self.approach.value}")
        if self.approach is Approach.NRS_PRIOR:
            if self.nrs is None:
                self.nrs = NrsPriorSettings()
        elif self.nrs is not None:
            raise ValueError(f"NRS prior settings given for approach {self.approach.value}")
        if self.regression is None and self.interaction_effect is not None:
            raise ValueError("interaction settings require regression")
        if self.bias is not None and self.bias.heterogeneity is Heterogeneity.ROB_WEIGHT:
            if self.trt_effect is not Effect.RANDOM:
                raise ValueError("RoB weights require random treatment effects")
            if self.approach is Approach.BIAS_MODEL_1 and self.bias.effect is not Effect.RANDOM:
                raise ValueError("RoB weights require exchangeable bias effects")
        if self.approach is Approach.BIAS_MODEL_2 and self.bias is not None:
            if self.bias.form is not BiasForm.ADDITIVE:
                raise ValueError("bias model 2 only has the additive mixture form")
            if (
                self.bias.heterogeneity is Heterogeneity.ROB_WEIGHT
                and self.bias.effect is not Effect.COMMON
            ):
                raise ValueError("bias model 2 with RoB weights requires common bias effects")
        return self

    @property
    def is_bias_model(self) -> bool:
        """True for bias models 1 and 2"""
        return self.approach in (Approach.BIAS_MODEL_1, Approach.BIAS_MODEL_2)

    @property
    def interaction(self) -> Effect:
        """Effective interaction combination"""
        return self.interaction_effect if self.interaction_effect is not None else Effect.RANDOM

    def with_basic_overrides(self, overrides: dict[int, NormalPrior]) -> "ModelConfig":
        """Copy with basic-parameter priors replaced"""
        priors = self.priors.model_copy(update={"basic_overrides": dict(overrides)})
        return self.model_copy(update={"priors": priors})

    def snapshot(self) -> dict:
        """JSON-ready dump"""
        return self.model_dump(mode="json")


def read_config_document(path: Union[str, Path]) -> dict:
    """Parsed YAML document, an empty file is an empty mapping"""
    with open(path, "r", encoding="utf-8") as f:
        document = yaml.safe_load(f)
    if document is None:
        return {}
    if not isinstance(document, dict):
        raise ConfigurationError(f"{path}: configuration must be a mapping")
    return document


def load_config(path: Union[str, Path]) -> ModelConfig:
    """ModelConfig from a YAML document, the sampler section is skipped"""
    document = read_config_document(path)
    document.pop("sampler", None)
    return ModelConfig(**document)


def centered_network(net: EvidenceNetwork, cfg: ModelConfig) -> EvidenceNetwork:
    """Network with the regression covariate centred at the configured value, idempotent"""
    if cfg.regression is None or cfg.regression.center is None:
        return net
    if cfg.regression.covariate not in net.covariate_names:
        raise ConfigurationError(f"covariate '{cfg.regression.covariate}' is not in the data")
    column = net.covariate_index(cfg.regression.covariate)
    shifts = [0.0] * net.n_covariates
    shifts[column] = cfg.regression.center - net.covariate_centers[column]
    return center_covariates(net, shifts)
