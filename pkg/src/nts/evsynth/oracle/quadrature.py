"""Deterministic grid posterior for tiny common-effect models"""

from typing import Callable, Optional
import math

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator
from scipy.integrate import trapezoid
from scipy.optimize import minimize
from scipy.special import gammaln, log_expit
from scipy.stats import norm

from ..evidence.types import (
    AdArm,
    DataFormat,
    Design,
    EvidenceNetwork,
    RiskOfBias,
    Study,
    Treatment,
)
from ..model.config import Approach, Effect, ModelConfig, NormalPrior, PriorSettings

MAX_DIMENSION = 3
MIN_POINTS = 400
GRID_HALF_WIDTH = 8.0


class TinyStudy(BaseModel):
    """Two aggregate arms, reference arm first"""

    id: str
    r: tuple[int, int]
    n: tuple[int, int]

    @model_validator(mode="after")
    def _counts(self) -> "TinyStudy":
        for r, n in zip(self.r, self.n):
            if n < 1 or not 0 <= r <= n:
                raise ValueError(f"study {self.id}: need 0 <= r <= n and n >= 1, got r={r}, n={n}")
        return self


class TinyModelSpec(BaseModel):
    """At most two two-arm AD studies of the same pair, common effect, no covariates or bias"""

    studies: list[TinyStudy] = []
    baseline: NormalPrior = NormalPrior()
    effect: NormalPrior = NormalPrior()
    labels: tuple[str, str] = ("A", "B")

    @field_validator("studies")
    @classmethod
    def _tractable(cls, v: list[TinyStudy]) -> list[TinyStudy]:
        if len(v) + 1 > MAX_DIMENSION:
            raise ValueError(
                f"{len(v) + 1} free parameters, quadrature handles at most {MAX_DIMENSION}"
            )
        if len({s.id for s in v}) != len(v):
            raise ValueError("study ids must be unique")
        return v

    @property
    def dimension(self) -> int:
        """Number of free parameters"""
        return len(self.studies) + 1

    @property
    def parameter_names(self) -> list[str]:
        """Baselines then the basic parameter, as the kernel names them"""
        return [f"u[{s.id}]" for s in self.studies] + ["d[2]"]

    def network(self) -> EvidenceNetwork:
        """Evidence network of the tiny model"""
        treatments = (
            Treatment(1, self.labels[0], is_active=False),
            Treatment(2, self.labels[1]),
        )
        studies = tuple(
            Study(
                id=s.id,
                design=Design.RCT,
                data_format=DataFormat.AD,
                reference_arm=1,
                arms=(1, 2),
                rob_level=RiskOfBias.LOW,
                ad=(
                    AdArm(s.id, 1, s.r[0], s.n[0]),
                    AdArm(s.id, 2, s.r[1], s.n[1]),
                ),
            )
            for s in self.studies
        )
        return EvidenceNetwork(treatments=treatments, studies=studies, reference_treatment=1)

    def config(self) -> ModelConfig:
        """Unadjusted common-effect configuration with the model priors"""
        return ModelConfig(
            approach=Approach.UNADJUSTED,
            trt_effect=Effect.COMMON,
            priors=PriorSettings(baseline=self.baseline, vague=self.effect),
        )

    @classmethod
    def from_network(cls, net: EvidenceNetwork, cfg: Optional[ModelConfig] = None) -> "TinyModelSpec":
        """Spec of a network that fits the tiny-model shape"""
        if len(net.treatments) != 2:
            raise ValueError("tiny models have exactly two treatments")
        ref = net.reference_treatment
        other = 2 if ref == 1 else 1
        studies = []
        for s in net.studies:
            if s.is_ipd or len(s.arms) != 2 or s.reference_arm != ref:
                raise ValueError(f"study {s.id} is not a two-arm AD study with reference {ref}")
            a, b = s.ad_arm(ref), s.ad_arm(other)
            studies.append(TinyStudy(id=s.id, r=(a.r, b.r), n=(a.n, b.n)))
        priors = cfg.priors if cfg is not None else PriorSettings()
        return cls(
            studies=studies,
            baseline=priors.baseline,
            effect=priors.vague,
            labels=(net.label(ref), net.label(other)),
        )


class OracleMoments(BaseModel):
    """Posterior mean and sd per parameter with the log normalisation constant"""

    names: list[str]
    mean: dict[str, float]
    sd: dict[str, float]
    log_evidence: float
    n_points: int = Field(ge=MIN_POINTS)


def _study_loglik(s: TinyStudy, u: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Binomial log likelihood including coefficients, broadcast over u and d"""
    eta1 = u + d
    coef = sum(
        gammaln(n + 1) - gammaln(r + 1) - gammaln(n - r + 1) for r, n in zip(s.r, s.n)
    )
    return (
        s.r[0] * log_expit(u)
        + (s.n[0] - s.r[0]) * log_expit(-u)
        + s.r[1] * log_expit(eta1)
        + (s.n[1] - s.r[1]) * log_expit(-eta1)
        + coef
    )


def _hessian(f: Callable[[np.ndarray], float], x: np.ndarray, h: float = 1e-4) -> np.ndarray:
    """Central-difference Hessian"""
    m = x.size
    out = np.empty((m, m))
    for i in range(m):
        for j in range(i, m):
            ei = np.zeros(m)
            ej = np.zeros(m)
            ei[i] = h
            ej[j] = h
            value = (
                f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)
            ) / (4.0 * h * h)
            out[i, j] = out[j, i] = value
    return out


def _approximate_sd(spec: TinyModelSpec) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mode and Laplace standard deviations, (u_1.., d) order"""
    priors = [spec.baseline] * len(spec.studies) + [spec.effect]

    def negative(x: np.ndarray) -> float:
        d = x[-1]
        total = sum(float(norm.logpdf(v, p.mean, p.sd)) for v, p in zip(x, priors))
        for j, s in enumerate(spec.studies):
            total += float(_study_loglik(s, np.asarray(x[j]), np.asarray(d)))
        return -total

    x0 = np.asarray([p.mean for p in priors], dtype=float)
    mode = minimize(negative, x0, method="BFGS").x
    fallback = np.asarray([p.sd for p in priors])
    try:
        cov = np.linalg.inv(_hessian(negative, mode))
        sd = np.sqrt(np.diag(cov))
        if not np.all(np.isfinite(sd)) or np.any(sd <= 0):
            raise np.linalg.LinAlgError("Hessian is not positive definite")
    except np.linalg.LinAlgError:
        return x0, fallback
    return mode, np.minimum(sd, fallback)


def _grid(center: float, sd: float, prior: NormalPrior, n_points: int) -> np.ndarray:
    lo = max(center - GRID_HALF_WIDTH * sd, prior.mean - GRID_HALF_WIDTH * prior.sd)
    hi = min(center + GRID_HALF_WIDTH * sd, prior.mean + GRID_HALF_WIDTH * prior.sd)
    if not hi > lo:
        lo, hi = prior.mean - GRID_HALF_WIDTH * prior.sd, prior.mean + GRID_HALF_WIDTH * prior.sd
    return np.linspace(lo, hi, n_points)


def grid_posterior_oracle(spec: TinyModelSpec, n_points: int = 801) -> OracleMoments:
    """
    Posterior moments by tensor-product trapezoidal quadrature. Every grid
    spans the posterior mode +- 8 approximate sd, clipped to the prior
    mean +- 8 prior sd. Baselines are integrated out study by study for
    every value of d on its grid.
    """
    if spec.dimension > MAX_DIMENSION:
        raise ValueError(f"{spec.dimension} free parameters, at most {MAX_DIMENSION} supported")
    if n_points < MIN_POINTS:
        raise ValueError(f"at least {MIN_POINTS} grid points per dimension, got {n_points}")
    mode, sd = _approximate_sd(spec)
    d = _grid(mode[-1], sd[-1], spec.effect, n_points)
    log_post = norm.logpdf(d, spec.effect.mean, spec.effect.sd)
    conditional: list[tuple[np.ndarray, np.ndarray]] = []
    for j, s in enumerate(spec.studies):
        u = _grid(mode[j], sd[j], spec.baseline, n_points)
        # rows u, columns d
        log_joint = norm.logpdf(u, spec.baseline.mean, spec.baseline.sd)[:, None] + _study_loglik(
            s, u[:, None], d[None, :]
        )
        shift = log_joint.max(axis=0)
        weight = np.exp(log_joint - shift)
        marginal = trapezoid(weight, u, axis=0)
        log_post = log_post + np.log(marginal) + shift
        first = trapezoid(weight * u[:, None], u, axis=0) / marginal
        second = trapezoid(weight * (u * u)[:, None], u, axis=0) / marginal
        conditional.append((first, second))
    top = float(log_post.max())
    density = np.exp(log_post - top)
    z = float(trapezoid(density, d))
    density = density / z
    mean: dict[str, float] = {}
    sds: dict[str, float] = {}
    for s, (first, second) in zip(spec.studies, conditional):
        m1 = float(trapezoid(density * first, d))
        m2 = float(trapezoid(density * second, d))
        mean[f"u[{s.id}]"] = m1
        sds[f"u[{s.id}]"] = math.sqrt(max(m2 - m1 * m1, 0.0))
    m1 = float(trapezoid(density * d, d))
    m2 = float(trapezoid(density * d * d, d))
    mean["d[2]"] = m1
    sds["d[2]"] = math.sqrt(max(m2 - m1 * m1, 0.0))
    return OracleMoments(
        names=spec.parameter_names,
        mean=mean,
        sd=sds,
        log_evidence=top + math.log(z),
        n_points=n_points,
    )
