"""Convergence diagnostics over retained draws"""

from typing import Union, Optional
import math
import logging

import numpy as np

from .. import get_logger
from .samples import PosteriorSamples
from .settings import SamplerError

MIN_DRAWS = 10


def _as_chains(samples: Union[PosteriorSamples, np.ndarray], parameter: Optional[str]) -> np.ndarray:
    if isinstance(samples, PosteriorSamples):
        if parameter is None:
            raise ValueError("parameter name is required for PosteriorSamples")
        return samples.chains(parameter).astype(float)
    chains = np.asarray(samples, dtype=float)
    if chains.ndim == 1:
        chains = chains[None, :]
    if chains.ndim != 2:
        raise ValueError("chains must be a (chains, draws) array")
    return chains


def psrf(chains: np.ndarray, logger: Optional[logging.Logger] = None) -> float:
    """Classical potential scale reduction factor of a (chains, draws) array"""
    m, n = chains.shape
    if m < 2:
        raise SamplerError("the scale reduction factor needs at least 2 chains")
    if n < MIN_DRAWS:
        raise SamplerError(f"the scale reduction factor needs at least {MIN_DRAWS} draws")
    w = float(np.mean(np.var(chains, axis=1, ddof=1)))
    b = n * float(np.var(np.mean(chains, axis=1), ddof=1))
    if not w > 0:
        if logger is not None:
            logger.warning("Zero within-chain variance, scale reduction is not computable")
        return math.nan
    var_plus = (n - 1) / n * w + b / n
    return math.sqrt(var_plus / w)


def _autocovariance(x: np.ndarray) -> np.ndarray:
    """Biased autocovariance of one chain for all lags"""
    n = x.size
    centred = x - x.mean()
    size = 2 ** int(math.ceil(math.log2(2 * n)))
    spectrum = np.fft.rfft(centred, n=size)
    acov = np.fft.irfft(spectrum * np.conjugate(spectrum), n=size)[:n]
    return acov / n


def ess(chains: np.ndarray, logger: Optional[logging.Logger] = None) -> float:
    """Multi-chain effective sample size, initial positive sequence estimator"""
    m, n = chains.shape
    if n < MIN_DRAWS:
        raise SamplerError(f"the effective sample size needs at least {MIN_DRAWS} draws")
    acov = np.stack([_autocovariance(c) for c in chains])
    chain_var = acov[:, 0] * n / (n - 1)
    w = float(np.mean(chain_var))
    var_plus = (n - 1) / n * w
    if m > 1:
        var_plus += float(np.var(chains.mean(axis=1), ddof=1))
    if not w > 0 or not var_plus > 0:
        if logger is not None:
            logger.warning("Constant draws, effective sample size is not computable")
        return math.nan
    rho = 1.0 - (w - acov.mean(axis=0)) / var_plus
    rho[0] = 1.0
    # Geyer: sum adjacent pairs while positive, keep the pair sums monotone
    total = 0.0
    previous = math.inf
    t = 0
    while t + 1 < n:
        pair = float(rho[t] + rho[t + 1])
        if pair <= 0:
            break
        pair = min(pair, previous)
        total += pair
        previous = pair
        t += 2
    tau = max(-1.0 + 2.0 * total, 1.0 / math.log10(m * n))
    return float(min(m * n / tau, m * n))


def gelman_rubin(
    samples: Union[PosteriorSamples, np.ndarray],
    parameter: Optional[str] = None,
    log_level: Optional[int] = None,
) -> float:
    """R-hat of one parameter, NaN when within-chain variance is zero"""
    return psrf(_as_chains(samples, parameter), get_logger("DIAGNOSTICS", log_level))


def effective_sample_size(
    samples: Union[PosteriorSamples, np.ndarray],
    parameter: Optional[str] = None,
    log_level: Optional[int] = None,
) -> float:
    """ESS of one parameter, NaN for constant draws"""
    return ess(_as_chains(samples, parameter), get_logger("DIAGNOSTICS", log_level))


def diagnose(samples: PosteriorSamples, names: Optional[list[str]] = None) -> dict[str, tuple[float, float]]:
    """(R-hat, ESS) per parameter, NaN where not computable"""
    out: dict[str, tuple[float, float]] = {}
    logger = get_logger("DIAGNOSTICS")
    for name in names if names is not None else samples.names:
        chains = samples.chains(name).astype(float)
        if samples.n_chains >= 2 and samples.n_draws >= MIN_DRAWS:
            rhat = psrf(chains, logger)
        else:
            rhat = math.nan
        eff = ess(chains, logger) if samples.n_draws >= MIN_DRAWS else math.nan
        out[name] = (rhat, eff)
    return out
