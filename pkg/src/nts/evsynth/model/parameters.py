"""Parameter space enumeration and parameter states"""

from typing import Union, Optional, Iterator
from dataclasses import dataclass, field
from enum import Enum
import math

import numpy as np

from ..evidence.types import EvidenceNetwork, Study, Direction
from .config import (
    ModelConfig,
    ConfigurationError,
    Approach,
    Effect,
    BaselineBeta0,
    WithinBetween,
    BiasForm,
    BiasMeanStructure,
    BiasProbabilityModel,
    Heterogeneity,
    Prior,
    BetaPrior,
)


class Role(Enum):
    """Role of a parameter in the synthesis model"""

    BASELINE = "baseline"
    BASIC = "basic"
    STUDY_EFFECT = "study_effect"
    BETA0 = "beta0"
    INTERACTION = "interaction"
    BIAS = "bias"
    HETEROGENEITY = "heterogeneity"
    BIAS_PROB = "bias_prob"
    INDICATOR = "indicator"
    DIRECTION = "direction"
    WEIGHT = "weight"
    LOGISTIC = "logistic"


class Support(Enum):
    """Parameter support"""

    REAL = "real"
    TAU = "(0,upper)"
    UNIT = "(0,1)"
    BINARY = "{0,1}"


@dataclass(frozen=True)
class ParameterDescriptor:
    """Named unknown with its role, support and independent prior"""

    name: str
    role: Role
    support: Support
    prior: Optional[Prior] = None  # None when the parameter has a hierarchical prior
    study: Optional[str] = None
    arm: Optional[int] = None
    upper: float = 1.0


@dataclass(frozen=True)
class ParameterSpace:
    """Ordered continuous parameters and binary indicators"""

    continuous: tuple[ParameterDescriptor, ...]
    discrete: tuple[ParameterDescriptor, ...] = ()
    _index: dict[str, int] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self) -> None:
        index: dict[str, int] = {}
        for i, p in enumerate(self.continuous):
            index[p.name] = i
        for i, p in enumerate(self.discrete):
            index[p.name] = i
        if len(index) != len(self.continuous) + len(self.discrete):
            raise ConfigurationError("parameter names must be unique")
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        return len(self.continuous) + len(self.discrete)

    def __iter__(self) -> Iterator[ParameterDescriptor]:
        yield from self.continuous
        yield from self.discrete

    def __contains__(self, name: object) -> bool:
        return name in self._index

    @property
    def names(self) -> list[str]:
        """Continuous names followed by indicator names"""
        return [p.name for p in self]

    @property
    def continuous_names(self) -> list[str]:
        """Names of real-valued parameters"""
        return [p.name for p in self.continuous]

    @property
    def discrete_names(self) -> list[str]:
        """Names of binary indicators"""
        return [p.name for p in self.discrete]

    def index(self, name: str) -> int:
        """Position within its (continuous or discrete) block"""
        return self._index[name]

    def get(self, name: str) -> Optional[int]:
        """Position or None"""
        return self._index.get(name)

    def is_discrete(self, name: str) -> bool:
        """True for indicators"""
        return any(p.name == name for p in self.discrete)

    def descriptor(self, name: str) -> ParameterDescriptor:
        """Descriptor by name"""
        for p in self:
            if p.name == name:
                return p
        raise KeyError(name)

    def by_role(self, role: Role) -> list[ParameterDescriptor]:
        """Descriptors with the given role"""
        return [p for p in self if p.role is role]


@dataclass
class ParameterState:
    """One value assignment to a ParameterSpace"""

    values: np.ndarray
    indicators: np.ndarray

    def copy(self) -> "ParameterState":
        """Deep copy"""
        return ParameterState(self.values.copy(), self.indicators.copy())

    def as_dict(self, space: ParameterSpace) -> dict[str, float]:
        """Named values"""
        named = {p.name: float(v) for p, v in zip(space.continuous, self.values)}
        named.update({p.name: int(v) for p, v in zip(space.discrete, self.indicators)})
        return named

    @classmethod
    def from_dict(cls, space: ParameterSpace, named: dict[str, float]) -> "ParameterState":
        """State from named values, every parameter must be given"""
        missing = [n for n in space.names if n not in named]
        if missing:
            raise KeyError(f"missing values for {', '.join(missing)}")
        return cls(
            np.asarray([float(named[p.name]) for p in space.continuous], dtype=float),
            np.asarray([int(named[p.name]) for p in space.discrete], dtype=int),
        )


def contrast_name(prefix: str, study: Union[Study, str], k: int) -> str:
    """Name of a study-contrast parameter"""
    sid = study.id if isinstance(study, Study) else study
    return f"{prefix}[{sid}|{k}]"


def study_name(prefix: str, study: Union[Study, str]) -> str:
    """Name of a study-level parameter"""
    sid = study.id if isinstance(study, Study) else study
    return f"{prefix}[{sid}]"


def bias_symbols(cfg: ModelConfig) -> list[str]:
    """Suffixes of the mean bias parameters demanded by the bias form"""
    if cfg.bias is None:
        return []
    if cfg.approach is Approach.BIAS_MODEL_2:
        return [""]
    if cfg.bias.heterogeneity is Heterogeneity.ROB_WEIGHT:
        return [""]
    if cfg.bias.form is BiasForm.ADDITIVE:
        return ["2"]
    if cfg.bias.form is BiasForm.MULTIPLICATIVE:
        return ["1"]
    return ["2", "1"]


def contrast_kind(net: EvidenceNetwork, b: int, k: int) -> str:
    """inactive_b, inactive_k, active_active or inactive_inactive"""
    b_active = net.treatment(b).is_active
    k_active = net.treatment(k).is_active
    if not b_active and k_active:
        return "inactive_b"
    if b_active and not k_active:
        return "inactive_k"
    if b_active and k_active:
        return "active_active"
    return "inactive_inactive"


def needs_direction(net: EvidenceNetwork, cfg: ModelConfig, study: Study, k: int) -> bool:
    """True when dir of the contrast is sampled"""
    if cfg.bias is None or cfg.bias.mean_structure is not BiasMeanStructure.SIGNED_ACTIVE_ACTIVE:
        return False
    if contrast_kind(net, study.reference_arm, k) != "active_active":
        return False
    return study.direction(k) is Direction.UNKNOWN


def has_latent_indicator(cfg: ModelConfig) -> bool:
    """R_j is sampled for bias model 1 and the random mixture of model 2"""
    if cfg.approach is Approach.BIAS_MODEL_1:
        return True
    return cfg.approach is Approach.BIAS_MODEL_2 and cfg.trt_effect is Effect.RANDOM


def _check_network(net: EvidenceNetwork, cfg: ModelConfig) -> Optional[int]:
    """Config-vs-network checks, returns the covariate column"""
    column: Optional[int] = None
    if cfg.regression is not None:
        if cfg.regression.covariate not in net.covariate_names:
            raise ConfigurationError(
                f"covariate '{cfg.regression.covariate}' is not in the data "
                f"(available: {', '.join(net.covariate_names) or 'none'})"
            )
        column = net.covariate_index(cfg.regression.covariate)
        for s in net.studies:
            xbar = s.mean_covariates()
            if xbar.size <= column or not math.isfinite(float(xbar[column])):
                raise ConfigurationError(
                    f"study '{s.id}' has no mean of covariate '{cfg.regression.covariate}'"
                )
    if cfg.bias is not None:
        if cfg.bias.probability_model is BiasProbabilityModel.PER_STUDY_BETA:
            for s in net.studies:
                if s.bias_prior is None and s.rob_level is None:
                    raise ConfigurationError(
                        f"study '{s.id}' has neither a RoB level nor a bias prior"
                    )
        else:
            sizes = {len(s.z) for s in net.studies}
            if len(sizes) > 1 or 0 in sizes:
                raise ConfigurationError(
                    "the logistic bias probability model needs study covariates z "
                    "of equal length for every study"
                )
    return column


def build_parameter_space(net: EvidenceNetwork, cfg: ModelConfig) -> ParameterSpace:
    """Enumerate the unknowns demanded by the configured model"""
    # pylint: disable=too-many-locals,too-many-branches,too-many-statements
    _check_network(net, cfg)
    priors = cfg.priors
    tau_prior = priors.tau
    out: list[ParameterDescriptor] = []
    discrete: list[ParameterDescriptor] = []

    def real(name: str, role: Role, prior: Optional[Prior], study=None, arm=None) -> None:
        out.append(ParameterDescriptor(name, role, Support.REAL, prior, study, arm))

    def tau(name: str) -> None:
        out.append(
            ParameterDescriptor(
                name, Role.HETEROGENEITY, Support.TAU, tau_prior, upper=priors.tau_upper
            )
        )

    studies = net.studies
    ipd_studies = [s for s in studies if s.is_ipd]
    basics = [k for k in net.treatment_ids if k != net.reference_treatment]
    model2 = cfg.approach is Approach.BIAS_MODEL_2
    random_trt = cfg.trt_effect is Effect.RANDOM
    rob_weight = cfg.bias is not None and cfg.bias.heterogeneity is Heterogeneity.ROB_WEIGHT

    for s in studies:
        real(study_name("u", s), Role.BASELINE, priors.baseline, s.id)
    for k in basics:
        real(f"d[{k}]", Role.BASIC, priors.basic_overrides.get(k, priors.vague), arm=k)

    if random_trt:
        for s in studies:
            for k in s.non_reference_arms:
                real(contrast_name("theta" if model2 else "delta", s, k), Role.STUDY_EFFECT, None, s.id, k)
            if rob_weight and not model2:
                for k in s.non_reference_arms:
                    real(contrast_name("delta_bias", s, k), Role.STUDY_EFFECT, None, s.id, k)

    reg = cfg.regression
    if reg is not None:
        random_beta0 = reg.baseline_beta0 is BaselineBeta0.RANDOM
        for s in ipd_studies:
            real(study_name("beta0", s), Role.BETA0, None if random_beta0 else priors.vague, s.id)
        if random_beta0 and ipd_studies:
            real("B0", Role.BETA0, priors.vague)
            tau("tau0")
        separate = reg.within_between is WithinBetween.SEPARATE
        for k in basics:
            real(f"B_B[{k}]", Role.INTERACTION, priors.vague, arm=k)
        if separate and ipd_studies:
            for k in basics:
                real(f"B_W[{k}]", Role.INTERACTION, priors.vague, arm=k)
        if cfg.interaction is Effect.RANDOM:
            for s in studies:
                for k in s.non_reference_arms:
                    real(contrast_name("beta_B", s, k), Role.INTERACTION, None, s.id, k)
            if separate:
                for s in ipd_studies:
                    for k in s.non_reference_arms:
                        real(contrast_name("beta_W", s, k), Role.INTERACTION, None, s.id, k)

    bias = cfg.bias
    suffixes = bias_symbols(cfg)
    gamma_random = bias is not None and bias.effect is Effect.RANDOM and not rob_weight
    if bias is not None and gamma_random:
        for suffix in suffixes:
            prefix = "gamma" if model2 else {"2": "gamma2", "1": "log_gamma1"}[suffix]
            for s in studies:
                for k in s.non_reference_arms:
                    real(contrast_name(prefix, s, k), Role.BIAS, None, s.id, k)
    if bias is not None:
        kinds = {contrast_kind(net, s.reference_arm, k) for s in studies for k in s.non_reference_arms}
        signed = bias.mean_structure is BiasMeanStructure.SIGNED_ACTIVE_ACTIVE
        for suffix in suffixes:
            if kinds & {"inactive_b", "inactive_k"}:
                real(f"g{suffix}", Role.BIAS, priors.vague)
            if signed and "active_active" in kinds:
                real(f"g{suffix}_act", Role.BIAS, priors.vague)

    if random_trt:
        tau("tau")
    if reg is not None and cfg.interaction is Effect.RANDOM:
        tau("tau_B")
        if reg.within_between is WithinBetween.SEPARATE and ipd_studies:
            tau("tau_W")
    if bias is not None and not rob_weight:
        if model2:
            if random_trt or gamma_random:
                tau("tau_gamma")
        elif gamma_random:
            for suffix in suffixes:
                tau(f"tau_gamma{suffix}")

    if bias is not None:
        if bias.probability_model is BiasProbabilityModel.PER_STUDY_BETA:
            for s in studies:
                prior = (
                    BetaPrior(a=s.bias_prior[0], b=s.bias_prior[1])
                    if s.bias_prior is not None
                    else bias.pi_prior(s.rob_level)
                )
                out.append(
                    ParameterDescriptor(
                        study_name("pi", s), Role.BIAS_PROB, Support.UNIT, prior, s.id
                    )
                )
        else:
            real("e", Role.LOGISTIC, bias.logistic_prior)
            n_z = len(studies[0].z) if studies else 0
            for i in range(1, n_z + 1):
                real(f"f[{i}]", Role.LOGISTIC, bias.logistic_prior)
        if rob_weight:
            for s in studies:
                if bias.rob_weight.fixed_weight(s.id, s.rob_level) is None:
                    out.append(
                        ParameterDescriptor(
                            study_name("q", s),
                            Role.WEIGHT,
                            Support.UNIT,
                            bias.rob_weight.weight_prior(s.rob_level),
                            s.id,
                        )
                    )
        directions = [
            (s, k) for s in studies for k in s.non_reference_arms if needs_direction(net, cfg, s, k)
        ]
        if directions:
            out.append(
                ParameterDescriptor("p_dir", Role.DIRECTION, Support.UNIT, bias.direction_prior)
            )
        if has_latent_indicator(cfg):
            for s in studies:
                discrete.append(
                    ParameterDescriptor(study_name("R", s), Role.INDICATOR, Support.BINARY, None, s.id)
                )
        for s, k in directions:
            discrete.append(
                ParameterDescriptor(
                    contrast_name("dir", s, k), Role.DIRECTION, Support.BINARY, None, s.id, k
                )
            )

    return ParameterSpace(tuple(out), tuple(discrete))


def initial_state(space: ParameterSpace, seed: Union[int, np.random.SeedSequence, None]) -> ParameterState:
    """Dispersed deterministic starting values"""
    rng = np.random.default_rng(seed)
    values = np.empty(len(space.continuous), dtype=float)
    for i, p in enumerate(space.continuous):
        if p.support is Support.REAL:
            values[i] = rng.normal(0.0, 0.1)
        elif p.support is Support.TAU:
            values[i] = rng.uniform(0.1, min(0.5, 0.5 * p.upper))
        else:
            values[i] = p.prior.mean if p.prior is not None else 0.5
    indicators = np.zeros(len(space.discrete), dtype=int)
    for i, p in enumerate(space.discrete):
        if p.role is Role.INDICATOR:
            j = space.get(study_name("pi", p.study)) if p.study is not None else None
            indicators[i] = int(j is not None and values[j] > 0.5)
        else:
            j = space.get("p_dir")
            indicators[i] = int(j is not None and values[j] > 0.5)
    return ParameterState(values, indicators)
