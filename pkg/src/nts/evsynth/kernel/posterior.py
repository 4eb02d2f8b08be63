"""Joint log posterior of the synthesis models"""

from typing import Union, Optional, Any
from dataclasses import dataclass, field
import math

import numpy as np
from scipy.special import gammaln, log_expit, expit

from .. import get_logger
from ..evidence.types import EvidenceNetwork, Study, IpdRecord
from ..model.config import (
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
)
from ..model.parameters import (
    ParameterSpace,
    ParameterState,
    Role,
    build_parameter_space,
    contrast_name,
    study_name,
    contrast_kind,
    bias_symbols,
    has_latent_indicator,
    needs_direction,
    initial_state,
)
from .densities import (
    normal_logpdf,
    bernoulli_logpmf,
    multiarm_logpdf,
    geometric_covariance,
    mvn_logpdf,
)

BIAS_STRUCTURE_ROLES = (Role.WEIGHT,)
BIAS_PROBABILITY_ROLES = (Role.BIAS_PROB, Role.LOGISTIC, Role.DIRECTION)


@dataclass
class _StudyPlan:
    """Index bookkeeping and compressed data of one study"""

    # pylint: disable=too-many-instance-attributes

    study: Study
    arms: tuple[int, ...]
    u: int
    d_b: int
    d_k: list[int]
    kind: list[str]
    dir_fixed: list[Optional[int]]
    dir_idx: list[int]
    xbar: float = 0.0
    beta0: int = -1
    eff: list[int] = field(default_factory=list)
    dbias: list[int] = field(default_factory=list)
    gamma2: list[int] = field(default_factory=list)
    lgamma1: list[int] = field(default_factory=list)
    gamma: list[int] = field(default_factory=list)
    beta_b: list[int] = field(default_factory=list)
    beta_w: list[int] = field(default_factory=list)
    bb_k: list[int] = field(default_factory=list)
    bb_b: int = -1
    bw_k: list[int] = field(default_factory=list)
    bw_b: int = -1
    r_idx: int = -1
    pi: int = -1
    q: int = -1
    q_fixed: float = 1.0
    z: tuple[float, ...] = ()
    # compressed data: arm position (0 = reference), covariate, n, r
    g_arm: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    g_x: np.ndarray = field(default_factory=lambda: np.zeros(0))
    g_n: np.ndarray = field(default_factory=lambda: np.zeros(0))
    g_r: np.ndarray = field(default_factory=lambda: np.zeros(0))
    log_binom: float = 0.0


class _ReadRecorder:
    """Array proxy recording the positions read"""

    def __init__(self, base: np.ndarray) -> None:
        self.base = base
        self.read: set[int] = set()

    def __getitem__(self, i: int) -> Any:
        self.read.add(int(i))
        return self.base[i]


def _get(space: ParameterSpace, name: str) -> int:
    i = space.get(name)
    return -1 if i is None else i


class PosteriorKernel:
    """
    Factorised log posterior: one likelihood factor and one hierarchical
    prior factor per study, one independent prior per parameter.
    """

    # pylint: disable=too-many-instance-attributes,too-many-public-methods

    def __init__(
        self,
        net: EvidenceNetwork,
        cfg: ModelConfig,
        space: Optional[ParameterSpace] = None,
        label: str = "KERNEL",
        **kwargs,
    ) -> None:
        self.label: str = str(label)
        self.logger = get_logger(
            self.label, int(kwargs.pop("log_level")) if "log_level" in kwargs else None
        )
        self.net: EvidenceNetwork = net
        self.cfg: ModelConfig = cfg
        self.space: ParameterSpace = space if space is not None else build_parameter_space(net, cfg)
        self.column: Optional[int] = (
            net.covariate_index(cfg.regression.covariate) if cfg.regression is not None else None
        )
        self._approach = cfg.approach
        self._random_trt = cfg.trt_effect is Effect.RANDOM
        self._bias = cfg.bias
        self._rob_weight = (
            cfg.bias is not None and cfg.bias.heterogeneity is Heterogeneity.ROB_WEIGHT
        )
        self._gamma_random = (
            cfg.bias is not None and cfg.bias.effect is Effect.RANDOM and not self._rob_weight
        )
        self._signed = (
            cfg.bias is not None
            and cfg.bias.mean_structure is BiasMeanStructure.SIGNED_ACTIVE_ACTIVE
        )
        self._logistic = (
            cfg.bias is not None
            and cfg.bias.probability_model is BiasProbabilityModel.LOGISTIC_ON_Z
        )
        self._latent = cfg.bias is not None and has_latent_indicator(cfg)
        reg = cfg.regression
        self._regression = reg is not None
        self._random_beta0 = reg is not None and reg.baseline_beta0 is BaselineBeta0.RANDOM
        self._equal_wb = reg is not None and reg.within_between is WithinBetween.EQUAL
        self._random_inter = reg is not None and cfg.interaction is Effect.RANDOM

        sp = self.space
        self._tau = _get(sp, "tau")
        self._tau0 = _get(sp, "tau0")
        self._b0 = _get(sp, "B0")
        self._tau_b = _get(sp, "tau_B")
        self._tau_w = _get(sp, "tau_W")
        self._e = _get(sp, "e")
        self._f = [
            i
            for i, p in enumerate(sp.continuous)
            if p.role is Role.LOGISTIC and p.name.startswith("f[")
        ]
        self._p_dir = _get(sp, "p_dir")
        self._g = {s: _get(sp, f"g{s}") for s in bias_symbols(cfg)}
        self._g_act = {s: _get(sp, f"g{s}_act") for s in bias_symbols(cfg)}
        self._tau_gamma = {s: _get(sp, f"tau_gamma{s}") for s in bias_symbols(cfg)}

        self.plans: list[_StudyPlan] = [self._plan(s) for s in net.studies]
        self._indep = [
            (i, p.prior) for i, p in enumerate(sp.continuous) if p.prior is not None
        ]
        self._build_dependencies()
        self.logger.debug(
            "%s built: %d studies, %d continuous and %d binary parameters",
            self.label,
            len(self.plans),
            len(sp.continuous),
            len(sp.discrete),
        )

    # ------------------------------------------------------------------ build

    def _require(self, name: str) -> int:
        i = self.space.get(name)
        if i is None:
            raise ConfigurationError(f"symbol {name} is not housed in the parameter space")
        return i

    def _d(self, k: int) -> int:
        if k == self.net.reference_treatment:
            return -1
        return self._require(f"d[{k}]")

    def _plan(self, s: Study) -> _StudyPlan:
        # pylint: disable=too-many-branches,too-many-statements
        sp = self.space
        arms = s.non_reference_arms
        b = s.reference_arm
        kinds = [contrast_kind(self.net, b, k) for k in arms]
        dir_fixed: list[Optional[int]] = []
        dir_idx: list[int] = []
        for k in arms:
            dir_fixed.append(s.direction(k).value_int)
            dir_idx.append(_get(sp, contrast_name("dir", s, k)))
        plan = _StudyPlan(
            study=s,
            arms=arms,
            u=self._require(study_name("u", s)),
            d_b=self._d(b),
            d_k=[self._d(k) for k in arms],
            kind=kinds,
            dir_fixed=dir_fixed,
            dir_idx=dir_idx,
            z=s.z,
        )
        model2 = self._approach is Approach.BIAS_MODEL_2
        if self._random_trt:
            plan.eff = [self._require(contrast_name("theta" if model2 else "delta", s, k)) for k in arms]
            if self._rob_weight and not model2:
                plan.dbias = [self._require(contrast_name("delta_bias", s, k)) for k in arms]
        if self._gamma_random:
            for suffix in bias_symbols(self.cfg):
                if model2:
                    plan.gamma = [self._require(contrast_name("gamma", s, k)) for k in arms]
                elif suffix == "2":
                    plan.gamma2 = [self._require(contrast_name("gamma2", s, k)) for k in arms]
                else:
                    plan.lgamma1 = [self._require(contrast_name("log_gamma1", s, k)) for k in arms]
        if self._regression:
            if s.is_ipd:
                plan.beta0 = self._require(study_name("beta0", s))
            plan.xbar = float(s.mean_covariates()[self.column])
            if self._random_inter:
                plan.beta_b = [self._require(contrast_name("beta_B", s, k)) for k in arms]
                if s.is_ipd and not self._equal_wb:
                    plan.beta_w = [self._require(contrast_name("beta_W", s, k)) for k in arms]
            else:
                plan.bb_k = [self._interaction_index("B_B", k) for k in arms]
                plan.bb_b = self._interaction_index("B_B", b)
                if s.is_ipd and not self._equal_wb:
                    plan.bw_k = [self._interaction_index("B_W", k) for k in arms]
                    plan.bw_b = self._interaction_index("B_W", b)
        if self._bias is not None:
            if self._latent:
                plan.r_idx = self._require(study_name("R", s))
            if not self._logistic:
                plan.pi = self._require(study_name("pi", s))
            if self._rob_weight:
                fixed = self._bias.rob_weight.fixed_weight(s.id, s.rob_level)
                if fixed is None:
                    plan.q = self._require(study_name("q", s))
                else:
                    plan.q_fixed = fixed
        self._compress(plan)
        return plan

    def _interaction_index(self, prefix: str, k: int) -> int:
        if k == self.net.reference_treatment:
            return -1
        return self._require(f"{prefix}[{k}]")

    def _compress(self, plan: _StudyPlan) -> None:
        """Group identical (arm, covariate) cells into counts"""
        s = plan.study
        position = {s.reference_arm: 0} | {k: a + 1 for a, k in enumerate(plan.arms)}
        if s.is_ipd:
            rows: tuple[IpdRecord, ...] = s.ipd
            arm = np.asarray([position[rec.treatment_id] for rec in rows], dtype=float)
            x = (
                np.asarray([rec.x[self.column] for rec in rows], dtype=float)
                if self._regression
                else np.zeros(len(rows))
            )
            y = np.asarray([rec.y for rec in rows], dtype=float)
            if not rows:
                return
            cells, inverse = np.unique(np.column_stack([arm, x]), axis=0, return_inverse=True)
            inverse = np.ravel(inverse)
            plan.g_arm = cells[:, 0].astype(int)
            plan.g_x = cells[:, 1]
            plan.g_n = np.bincount(inverse, minlength=cells.shape[0]).astype(float)
            plan.g_r = np.bincount(inverse, weights=y, minlength=cells.shape[0])
        else:
            ad = sorted(s.ad, key=lambda a: position[a.treatment_id])
            plan.g_arm = np.asarray([position[a.treatment_id] for a in ad], dtype=int)
            plan.g_x = np.zeros(len(ad))
            plan.g_n = np.asarray([a.n for a in ad], dtype=float)
            plan.g_r = np.asarray([a.r for a in ad], dtype=float)
            plan.log_binom = float(
                np.sum(gammaln(plan.g_n + 1) - gammaln(plan.g_r + 1) - gammaln(plan.g_n - plan.g_r + 1))
            )

    def _build_dependencies(self) -> None:
        """Record which factors read each parameter by a dry evaluation"""
        n_c, n_d = len(self.space.continuous), len(self.space.discrete)
        dry = initial_state(self.space, 0)
        self.lik_dependents: list[list[int]] = [[] for _ in range(n_c)]
        self.prior_dependents: list[list[int]] = [[] for _ in range(n_c)]
        self.lik_dependents_discrete: list[list[int]] = [[] for _ in range(n_d)]
        self.prior_dependents_discrete: list[list[int]] = [[] for _ in range(n_d)]
        self.symbols: set[str] = {self.space.continuous[i].name for i, _ in self._indep}
        for j, plan in enumerate(self.plans):
            for factor, cont, disc in (
                (self._study_loglik, self.lik_dependents, self.lik_dependents_discrete),
                (self._study_logprior, self.prior_dependents, self.prior_dependents_discrete),
            ):
                v, ind = _ReadRecorder(dry.values), _ReadRecorder(dry.indicators)
                factor(plan, v, ind)  # type: ignore[arg-type]
                for i in sorted(v.read):
                    cont[i].append(j)
                    self.symbols.add(self.space.continuous[i].name)
                for i in sorted(ind.read):
                    disc[i].append(j)
                    self.symbols.add(self.space.discrete[i].name)

    # ------------------------------------------------------------- components

    def _ddiff(self, p: _StudyPlan, a: int, v) -> float:
        dk = v[p.d_k[a]] if p.d_k[a] >= 0 else 0.0
        db = v[p.d_b] if p.d_b >= 0 else 0.0
        return dk - db

    def _pi(self, p: _StudyPlan, v) -> float:
        if self._logistic:
            return float(expit(self._pi_logit(p, v)))
        return v[p.pi]

    def _pi_logit(self, p: _StudyPlan, v) -> float:
        eta = v[self._e]
        for i, z in zip(self._f, p.z):
            eta += v[i] * z
        return eta

    def _direction(self, p: _StudyPlan, a: int, ind) -> int:
        if p.dir_fixed[a] is not None:
            return int(p.dir_fixed[a])
        if p.dir_idx[a] >= 0:
            return int(ind[p.dir_idx[a]])
        return 0

    def mean_bias(self, p: _StudyPlan, a: int, suffix: str, v, ind) -> float:
        """g_bk of arm position a for the bias symbol suffix"""
        kind = p.kind[a]
        if kind == "inactive_b":
            return v[self._g[suffix]]
        if kind == "inactive_k":
            return v[self._g[suffix]] if suffix == "1" else -v[self._g[suffix]]
        if kind == "active_active" and self._signed:
            sign = -1.0 if self._direction(p, a, ind) else 1.0
            return sign * v[self._g_act[suffix]]
        return 0.0

    def _q(self, p: _StudyPlan, v) -> float:
        return v[p.q] if p.q >= 0 else p.q_fixed

    def relative_effects(self, p: _StudyPlan, v, ind) -> list[float]:
        """Treatment (plus bias) effect of each non-reference arm"""
        # pylint: disable=too-many-branches
        effects: list[float] = []
        approach = self._approach
        for a in range(len(p.arms)):
            if approach is Approach.BIAS_MODEL_2:
                if self._random_trt:
                    effects.append(v[p.eff[a]])
                else:
                    gam = v[p.gamma[a]] if self._gamma_random else self.mean_bias(p, a, "", v, ind)
                    effects.append(self._ddiff(p, a, v) + self._pi(p, v) * gam)
                continue
            base = v[p.eff[a]] if self._random_trt else None
            if approach is not Approach.BIAS_MODEL_1:
                effects.append(base if base is not None else self._ddiff(p, a, v))
                continue
            r = int(ind[p.r_idx])
            if self._rob_weight:
                effects.append((1 - r) * base + r * v[p.dbias[a]])
                continue
            if base is None:
                base = self._ddiff(p, a, v)
            form = self._bias.form  # type: ignore[union-attr]
            effect = base
            if form in (BiasForm.MULTIPLICATIVE, BiasForm.BOTH):
                lg1 = v[p.lgamma1[a]] if self._gamma_random else self.mean_bias(p, a, "1", v, ind)
                effect = base * math.exp(r * lg1)
            if form in (BiasForm.ADDITIVE, BiasForm.BOTH):
                g2 = v[p.gamma2[a]] if self._gamma_random else self.mean_bias(p, a, "2", v, ind)
                effect = effect + r * g2
            effects.append(effect)
        return effects

    def _slopes(self, p: _StudyPlan, v) -> tuple[list[float], list[float]]:
        """Between- and within-study interaction of each non-reference arm"""
        m = len(p.arms)
        if not self._regression:
            return [0.0] * m, [0.0] * m
        if self._random_inter:
            beta_b = [v[i] for i in p.beta_b]
        else:
            bb_b = v[p.bb_b] if p.bb_b >= 0 else 0.0
            beta_b = [(v[i] if i >= 0 else 0.0) - bb_b for i in p.bb_k]
        if not p.study.is_ipd or self._equal_wb:
            return beta_b, list(beta_b)
        if self._random_inter:
            beta_w = [v[i] for i in p.beta_w]
        else:
            bw_b = v[p.bw_b] if p.bw_b >= 0 else 0.0
            beta_w = [(v[i] if i >= 0 else 0.0) - bw_b for i in p.bw_k]
        return beta_b, beta_w

    def _study_loglik(self, p: _StudyPlan, v, ind) -> float:
        if p.g_n.size == 0:
            return 0.0
        effects = self.relative_effects(p, v, ind)
        beta_b, beta_w = self._slopes(p, v)
        eff = np.asarray([0.0] + effects)
        u = v[p.u]
        if p.study.is_ipd:
            beta0 = v[p.beta0] if p.beta0 >= 0 else 0.0
            slope = np.asarray([0.0] + beta_w)
            offset = np.asarray([0.0] + [(bb - bw) * p.xbar for bb, bw in zip(beta_b, beta_w)])
            eta = u + beta0 * p.g_x + eff[p.g_arm] + slope[p.g_arm] * p.g_x + offset[p.g_arm]
        else:
            between = np.asarray([0.0] + [bb * p.xbar for bb in beta_b])
            eta = u + eff[p.g_arm] + between[p.g_arm]
        ll = float(np.sum(p.g_r * log_expit(eta) + (p.g_n - p.g_r) * log_expit(-eta)))
        return ll + p.log_binom

    def _random_effects_part(self, p: _StudyPlan, v, ind) -> float:
        if not self._random_trt or not p.arms:
            return 0.0
        tau = v[self._tau]
        m = len(p.arms)
        if self._approach is not Approach.BIAS_MODEL_2:
            resid = [v[p.eff[a]] - self._ddiff(p, a, v) for a in range(m)]
            return multiarm_logpdf(resid, tau)
        r = int(ind[p.r_idx])
        if self._rob_weight:
            q = self._q(p, v)
            if not 0.0 < q <= 1.0:
                return -math.inf
            biased_var = tau * tau / q
        else:
            tg = v[self._tau_gamma[""]]
            biased_var = tau * tau + tg * tg
        if not tau > 0:
            return -math.inf
        resid = []
        for a in range(m):
            gam = v[p.gamma[a]] if self._gamma_random else self.mean_bias(p, a, "", v, ind)
            resid.append(v[p.eff[a]] - self._ddiff(p, a, v) - r * gam)
        var = biased_var if r else tau * tau
        if m == 1:
            return normal_logpdf(resid[0], 0.0, math.sqrt(var))
        return mvn_logpdf(resid, geometric_covariance([var] * m))

    def _interaction_part(self, p: _StudyPlan, v) -> float:
        if not self._regression:
            return 0.0
        total = 0.0
        if self._random_beta0 and p.beta0 >= 0:
            total += normal_logpdf(v[p.beta0], v[self._b0], v[self._tau0])
        if not self._random_inter:
            return total
        tau_b = v[self._tau_b]
        for a, k in enumerate(p.arms):
            mean = self._basic_diff("B_B", k, p.study.reference_arm, v)
            total += normal_logpdf(v[p.beta_b[a]], mean, tau_b)
        if p.beta_w:
            tau_w = v[self._tau_w]
            for a, k in enumerate(p.arms):
                mean = self._basic_diff("B_W", k, p.study.reference_arm, v)
                total += normal_logpdf(v[p.beta_w[a]], mean, tau_w)
        return total

    def _basic_diff(self, prefix: str, k: int, b: int, v) -> float:
        ik, ib = self._interaction_index(prefix, k), self._interaction_index(prefix, b)
        return (v[ik] if ik >= 0 else 0.0) - (v[ib] if ib >= 0 else 0.0)

    def _bias_structure_part(self, p: _StudyPlan, v, ind) -> float:
        if self._bias is None or not p.arms:
            return 0.0
        total = 0.0
        m = len(p.arms)
        if self._rob_weight and self._approach is Approach.BIAS_MODEL_1:
            q = self._q(p, v)
            tau = v[self._tau]
            if not 0.0 < q <= 1.0:
                return -math.inf
            resid = [
                v[p.dbias[a]] - self.mean_bias(p, a, "", v, ind) - self._ddiff(p, a, v)
                for a in range(m)
            ]
            return multiarm_logpdf(resid, tau / math.sqrt(q))
        if not self._gamma_random:
            return 0.0
        if self._approach is Approach.BIAS_MODEL_2:
            tg = v[self._tau_gamma[""]]
            for a in range(m):
                total += normal_logpdf(v[p.gamma[a]], self.mean_bias(p, a, "", v, ind), tg)
            return total
        if p.gamma2:
            tg = v[self._tau_gamma["2"]]
            for a in range(m):
                total += normal_logpdf(v[p.gamma2[a]], self.mean_bias(p, a, "2", v, ind), tg)
        if p.lgamma1:
            tg = v[self._tau_gamma["1"]]
            for a in range(m):
                total += normal_logpdf(v[p.lgamma1[a]], self.mean_bias(p, a, "1", v, ind), tg)
        return total

    def _bias_probability_part(self, p: _StudyPlan, v, ind) -> float:
        if self._bias is None:
            return 0.0
        total = 0.0
        if p.r_idx >= 0:
            r = int(ind[p.r_idx])
            if self._logistic:
                eta = self._pi_logit(p, v)
                total += float(log_expit(eta)) if r else float(log_expit(-eta))
            else:
                total += bernoulli_logpmf(r, v[p.pi])
        for a in range(len(p.arms)):
            if p.dir_idx[a] >= 0:
                total += bernoulli_logpmf(int(ind[p.dir_idx[a]]), v[self._p_dir])
        return total

    def _study_logprior(self, p: _StudyPlan, v, ind) -> float:
        return (
            self._random_effects_part(p, v, ind)
            + self._interaction_part(p, v)
            + self._bias_structure_part(p, v, ind)
            + self._bias_probability_part(p, v, ind)
        )

    # ------------------------------------------------------- factor interface

    @property
    def n_studies(self) -> int:
        """Number of per-study factors"""
        return len(self.plans)

    def study_loglik(self, j: int, state: ParameterState) -> float:
        """Likelihood factor of study position j"""
        return self._study_loglik(self.plans[j], state.values, state.indicators)

    def study_logprior(self, j: int, state: ParameterState) -> float:
        """Hierarchical prior factor of study position j"""
        return self._study_logprior(self.plans[j], state.values, state.indicators)

    def loglik_factor(self, j: int, values: np.ndarray, indicators: np.ndarray) -> float:
        """Likelihood factor of study position j at raw arrays"""
        return self._study_loglik(self.plans[j], values, indicators)

    def prior_factor(self, j: int, values: np.ndarray, indicators: np.ndarray) -> float:
        """Hierarchical prior factor of study position j at raw arrays"""
        return self._study_logprior(self.plans[j], values, indicators)

    def independent_logprior(self, i: int, value: float) -> float:
        """Independent prior of continuous parameter i, 0 when hierarchical"""
        prior = self.space.continuous[i].prior
        return prior.logpdf(float(value)) if prior is not None else 0.0

    def _independent(self, state: ParameterState, roles: Optional[tuple[Role, ...]] = None, exclude: tuple[Role, ...] = ()) -> float:
        terms = []
        for i, prior in self._indep:
            role = self.space.continuous[i].role
            if roles is not None and role not in roles:
                continue
            if role in exclude:
                continue
            terms.append(prior.logpdf(float(state.values[i])))
        return math.fsum(terms)

    # ------------------------------------------------------------- operations

    def _check(self, state: ParameterState) -> None:
        if state.values.shape != (len(self.space.continuous),) or state.indicators.shape != (
            len(self.space.discrete),
        ):
            raise ValueError("state does not match the parameter space")
        if np.isnan(state.values).any():
            bad = [n for n, x in zip(self.space.continuous_names, state.values) if math.isnan(x)]
            raise ValueError(f"NaN in parameter state: {', '.join(bad)}")

    def _plan_of(self, study: Union[str, Study]) -> _StudyPlan:
        sid = study.id if isinstance(study, Study) else study
        for p in self.plans:
            if p.study.id == sid:
                return p
        raise KeyError(f"Unknown study {sid}")

    def linear_predictor_ipd(
        self, state: ParameterState, study: Union[str, Study], row: Union[IpdRecord, float], k: int
    ) -> float:
        """logit p of a participant row in arm k"""
        p = self._plan_of(study)
        v, ind = state.values, state.indicators
        if isinstance(row, IpdRecord):
            x = row.x[self.column] if self.column is not None else 0.0
        else:
            x = float(row)
        beta0 = v[p.beta0] if p.beta0 >= 0 else 0.0
        eta = v[p.u] + beta0 * x
        if k == p.study.reference_arm:
            return float(eta)
        a = p.arms.index(k)
        beta_b, beta_w = self._slopes(p, v)
        effect = self.relative_effects(p, v, ind)[a]
        return float(eta + effect + beta_w[a] * x + (beta_b[a] - beta_w[a]) * p.xbar)

    def linear_predictor_ad(self, state: ParameterState, study: Union[str, Study], k: int) -> float:
        """logit p of arm k of an aggregate study"""
        p = self._plan_of(study)
        v, ind = state.values, state.indicators
        if k == p.study.reference_arm:
            return float(v[p.u])
        a = p.arms.index(k)
        beta_b, _ = self._slopes(p, v)
        return float(v[p.u] + self.relative_effects(p, v, ind)[a] + beta_b[a] * p.xbar)

    def ipd_loglik(self, state: ParameterState) -> float:
        """Bernoulli log likelihood of all participant rows"""
        self._check(state)
        return math.fsum(
            self._study_loglik(p, state.values, state.indicators) for p in self.plans if p.study.is_ipd
        )

    def ad_loglik(self, state: ParameterState) -> float:
        """Binomial log likelihood of all aggregate arms, coefficients included"""
        self._check(state)
        return math.fsum(
            self._study_loglik(p, state.values, state.indicators)
            for p in self.plans
            if not p.study.is_ipd
        )

    def random_effects_logprior(self, state: ParameterState, study: Union[str, Study]) -> float:
        """Multi-arm normal (or mixture-conditional) prior of the study effects"""
        p = self._plan_of(study)
        return self._random_effects_part(p, state.values, state.indicators)

    def interaction_logprior(self, state: ParameterState) -> float:
        """Hierarchy of the covariate effects over all studies"""
        return math.fsum(self._interaction_part(p, state.values) for p in self.plans)

    def bias_structure_logprior(self, state: ParameterState) -> float:
        """Bias effect hierarchy including the RoB weight priors"""
        return math.fsum(
            [self._bias_structure_part(p, state.values, state.indicators) for p in self.plans]
            + [self._independent(state, roles=BIAS_STRUCTURE_ROLES)]
        )

    def bias_probability_logprior(self, state: ParameterState) -> float:
        """Bias indicators, bias probabilities and bias directions"""
        return math.fsum(
            [self._bias_probability_part(p, state.values, state.indicators) for p in self.plans]
            + [self._independent(state, roles=BIAS_PROBABILITY_ROLES)]
        )

    def mixture_logprior_theta(self, state: ParameterState, study: Union[str, Study], k: int) -> float:
        """Conditional density of one bias-adjusted effect given R_j"""
        if self._approach is not Approach.BIAS_MODEL_2 or not self._random_trt:
            raise ConfigurationError("the mixture prior needs bias model 2 with random effects")
        p = self._plan_of(study)
        v, ind = state.values, state.indicators
        a = p.arms.index(k)
        tau = v[self._tau]
        r = int(ind[p.r_idx])
        gam = v[p.gamma[a]] if self._gamma_random else self.mean_bias(p, a, "", v, ind)
        mean = self._ddiff(p, a, v)
        if self._rob_weight:
            var = tau * tau / self._q(p, v) if r else tau * tau
            return normal_logpdf(v[p.eff[a]], mean + r * gam, math.sqrt(var))
        tg = v[self._tau_gamma[""]]
        var = tau * tau + tg * tg if r else tau * tau
        return normal_logpdf(v[p.eff[a]], mean + r * gam, math.sqrt(var))

    def hyperprior_logdensity(self, state: ParameterState) -> float:
        """Independent priors of baselines, basics, covariate and bias means and all tau"""
        return self._independent(state, exclude=BIAS_STRUCTURE_ROLES + BIAS_PROBABILITY_ROLES)

    def log_likelihood(self, state: ParameterState) -> float:
        """Data log likelihood"""
        self._check(state)
        return math.fsum(self._study_loglik(p, state.values, state.indicators) for p in self.plans)

    def log_prior(self, state: ParameterState) -> float:
        """All prior terms"""
        self._check(state)
        return math.fsum(
            [self._study_logprior(p, state.values, state.indicators) for p in self.plans]
            + [self._independent(state)]
        )

    def log_posterior(self, state: ParameterState) -> float:
        """Unnormalised joint log posterior"""
        self._check(state)
        terms = [self._independent(state)]
        for p in self.plans:
            terms.append(self._study_logprior(p, state.values, state.indicators))
            terms.append(self._study_loglik(p, state.values, state.indicators))
        if any(t == -math.inf for t in terms):
            return -math.inf
        return math.fsum(terms)

    def study_bias_probability(self, state: ParameterState, study: Union[str, Study]) -> float:
        """pi_j at the state"""
        if self._bias is None:
            raise ConfigurationError("no bias model configured")
        return float(self._pi(self._plan_of(study), state.values))

    def demanded_symbols(self) -> list[str]:
        """Names the configured equations read, in equation order"""
        # pylint: disable=too-many-branches
        cfg, net = self.cfg, self.net
        ref = net.reference_treatment
        model2 = self._approach is Approach.BIAS_MODEL_2
        studies = net.studies
        ipd = [s for s in studies if s.is_ipd]
        contrasts = [(s, k) for s in studies for k in s.non_reference_arms]
        demanded: list[str] = [study_name("u", s) for s in studies]
        treatments = sorted({k for s in studies for k in s.arms if k != ref})
        demanded += [f"d[{k}]" for k in treatments]
        if self._random_trt:
            demanded.append("tau")
            demanded += [contrast_name("theta" if model2 else "delta", s, k) for s, k in contrasts]
            if self._rob_weight and not model2:
                demanded += [contrast_name("delta_bias", s, k) for s, k in contrasts]
        if self._regression:
            demanded += [study_name("beta0", s) for s in ipd]
            if self._random_beta0 and ipd:
                demanded += ["B0", "tau0"]
            demanded += [f"B_B[{k}]" for k in treatments]
            within = [] if self._equal_wb else ipd
            demanded += [f"B_W[{k}]" for k in sorted({k for s in within for k in s.arms if k != ref})]
            if self._random_inter:
                demanded.append("tau_B")
                demanded += [contrast_name("beta_B", s, k) for s, k in contrasts]
                if within:
                    demanded.append("tau_W")
                    demanded += [contrast_name("beta_W", s, k) for s in within for k in s.non_reference_arms]
        bias = self._bias
        if bias is None:
            return demanded
        suffixes = bias_symbols(cfg)
        kinds = {contrast_kind(net, s.reference_arm, k) for s, k in contrasts}
        for suffix in suffixes:
            if kinds & {"inactive_b", "inactive_k"}:
                demanded.append(f"g{suffix}")
            if self._signed and "active_active" in kinds:
                demanded.append(f"g{suffix}_act")
        if self._gamma_random:
            for suffix in suffixes:
                prefix = "gamma" if model2 else {"2": "gamma2", "1": "log_gamma1"}[suffix]
                demanded += [contrast_name(prefix, s, k) for s, k in contrasts]
                if not model2:
                    demanded.append(f"tau_gamma{suffix}")
        if model2 and not self._rob_weight and (self._random_trt or self._gamma_random):
            demanded.append("tau_gamma")
        if self._logistic:
            n_z = len(studies[0].z) if studies else 0
            demanded += ["e"] + [f"f[{i}]" for i in range(1, n_z + 1)]
        else:
            demanded += [study_name("pi", s) for s in studies]
        if self._rob_weight:
            demanded += [
                study_name("q", s)
                for s in studies
                if bias.rob_weight.fixed_weight(s.id, s.rob_level) is None
            ]
        if self._latent:
            demanded += [study_name("R", s) for s in studies]
        directions = [contrast_name("dir", s, k) for s, k in contrasts if needs_direction(net, cfg, s, k)]
        if directions:
            demanded += ["p_dir"] + directions
        return demanded


def symbol_audit(kernel: PosteriorKernel) -> tuple[list[str], list[str]]:
    """Symbols demanded but not housed, and housed but never read"""
    unhoused = [n for n in kernel.demanded_symbols() if n not in kernel.space]
    unused = [n for n in kernel.space.names if n not in kernel.symbols]
    return unhoused, unused


def log_posterior(state: ParameterState, net: EvidenceNetwork, cfg: ModelConfig) -> float:
    """Convenience one-shot evaluation"""
    return PosteriorKernel(net, cfg).log_posterior(state)
