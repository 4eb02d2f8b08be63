"""Scalar and small multivariate log densities"""

from typing import Sequence
import math

import numpy as np
from scipy.linalg import cholesky, solve_triangular, LinAlgError
from scipy.special import logsumexp

LOG_2PI = math.log(2.0 * math.pi)


def normal_logpdf(x: float, mean: float, sd: float) -> float:
    """log N(x | mean, sd^2), -inf for sd <= 0"""
    if not sd > 0:
        return -math.inf
    z = (x - mean) / sd
    return -0.5 * LOG_2PI - math.log(sd) - 0.5 * z * z


def bernoulli_logpmf(value: int, p: float) -> float:
    """log Bernoulli(value | p), exact at p in {0, 1}"""
    if value:
        return math.log(p) if p > 0 else -math.inf
    return math.log1p(-p) if p < 1 else -math.inf


def multiarm_covariance(m: int, tau: float) -> np.ndarray:
    """tau^2 on the diagonal, tau^2/2 off the diagonal"""
    return 0.5 * tau * tau * (np.eye(m) + np.ones((m, m)))


def multiarm_logpdf(resid: Sequence[float], tau: float) -> float:
    """MVN log density of residuals under the multi-arm covariance"""
    m = len(resid)
    if not tau > 0:
        return -math.inf
    if m == 1:
        return normal_logpdf(resid[0], 0.0, tau)
    r = np.asarray(resid, dtype=float)
    # C = (I + J)/2, C^-1 = 2 (I - J/(m+1)), det C = (m+1)/2^m
    quad = 2.0 * (float(r @ r) - float(r.sum()) ** 2 / (m + 1)) / (tau * tau)
    logdet = math.log(m + 1) - m * math.log(2.0)
    return -0.5 * m * LOG_2PI - m * math.log(tau) - 0.5 * logdet - 0.5 * quad


def geometric_covariance(variances: Sequence[float]) -> np.ndarray:
    """Off-diagonal entries are half the geometric mean of the diagonals"""
    v = np.asarray(variances, dtype=float)
    s = np.sqrt(v)
    cov = 0.5 * np.outer(s, s)
    np.fill_diagonal(cov, v)
    return cov


def mvn_logpdf(resid: Sequence[float], cov: np.ndarray) -> float:
    """MVN log density of zero-mean residuals, -inf for a singular covariance"""
    r = np.asarray(resid, dtype=float)
    m = r.size
    if m == 1:
        var = float(cov[0, 0])
        return normal_logpdf(float(r[0]), 0.0, math.sqrt(var)) if var > 0 else -math.inf
    try:
        chol = cholesky(cov, lower=True)
    except LinAlgError:
        return -math.inf
    z = solve_triangular(chol, r, lower=True)
    logdet = 2.0 * float(np.log(np.diag(chol)).sum())
    return -0.5 * m * LOG_2PI - 0.5 * logdet - 0.5 * float(z @ z)


def mixture_conditional_logdensity(
    theta: float,
    mean: float,
    gamma: float,
    tau: float,
    tau_gamma: float,
    indicator: int,
) -> float:
    """Latent-indicator form of the two-component bias mixture"""
    if indicator:
        return normal_logpdf(theta, mean + gamma, math.sqrt(tau * tau + tau_gamma * tau_gamma))
    return normal_logpdf(theta, mean, tau)


def mixture_marginal_logdensity(
    theta: float,
    mean: float,
    gamma: float,
    tau: float,
    tau_gamma: float,
    pi: float,
) -> float:
    """(1 - pi) N(mean, tau^2) + pi N(mean + gamma, tau^2 + tau_gamma^2)"""
    terms = []
    if pi < 1:
        terms.append(math.log1p(-pi) + mixture_conditional_logdensity(theta, mean, gamma, tau, tau_gamma, 0))
    if pi > 0:
        terms.append(math.log(pi) + mixture_conditional_logdensity(theta, mean, gamma, tau, tau_gamma, 1))
    if max(terms) == -math.inf:
        return -math.inf
    return float(logsumexp(terms))
