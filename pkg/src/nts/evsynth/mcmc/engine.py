"""Multi-chain orchestration"""

from typing import Callable, Optional, Sequence
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .. import get_logger
from ..evidence.types import EvidenceNetwork
from ..model.config import ModelConfig
from ..model.parameters import (
    ParameterDescriptor,
    ParameterSpace,
    ParameterState,
    initial_state,
)
from ..kernel.posterior import PosteriorKernel
from ..kernel.cache import FactorCache
from .settings import SamplerSettings
from .samples import PosteriorSamples
from .chain import Chain, Target, LogDensityTarget


def _run_one(
    label: str,
    make_target: Callable[[np.random.SeedSequence], Target],
    parameters: Sequence[ParameterDescriptor],
    settings: SamplerSettings,
    seed: np.random.SeedSequence,
    log_level: Optional[int],
) -> Chain:
    init_seed, run_seed = seed.spawn(2)
    target = make_target(init_seed)
    kwargs = {"log_level": log_level} if log_level is not None else {}
    chain = Chain(
        target, parameters, settings, np.random.default_rng(run_seed), label=label, **kwargs
    )
    return chain.execute()


def _collect(
    chains: list[Chain], names: list[str], n_continuous: int, settings: SamplerSettings
) -> PosteriorSamples:
    retained = [it + 1 for it in range(settings.n_iterations) if settings.is_retained(it)]
    return PosteriorSamples(
        draws=np.stack([c.draws for c in chains]),
        names=names,
        n_continuous=n_continuous,
        iterations=np.asarray(retained, dtype=int),
        acceptance=np.stack([c.acceptance for c in chains]),
        step_sizes_frozen=np.stack([c.step_sizes_frozen for c in chains]),
        step_sizes_final=np.stack([c.step_sizes for c in chains]),
        settings=settings,
    )


def run_target_chains(
    make_target: Callable[[np.random.SeedSequence], Target],
    space: ParameterSpace,
    settings: SamplerSettings,
    label: str = "MCMC",
    **kwargs,
) -> PosteriorSamples:
    """
    Sample any target with independent chains. make_target builds a fresh
    target (with its own starting state) from a chain-specific seed.
    """
    log_level = int(kwargs.pop("log_level")) if "log_level" in kwargs else None
    logger = get_logger(label, log_level)
    seeds = np.random.SeedSequence(settings.seed).spawn(settings.n_chains)
    labels = [f"{label}-{c + 1}" for c in range(settings.n_chains)]
    parameters = list(space.continuous)
    logger.info(
        "%s: %d chains x %d iterations, burn-in %d, thin %d, seed %d, %d thread(s)",
        label,
        settings.n_chains,
        settings.n_iterations,
        settings.burn_in,
        settings.thin,
        settings.seed,
        settings.threads,
    )

    def job(c: int) -> Chain:
        return _run_one(labels[c], make_target, parameters, settings, seeds[c], log_level)

    threads = min(settings.threads, settings.n_chains)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chains = list(pool.map(job, range(settings.n_chains)))
    else:
        chains = [job(c) for c in range(settings.n_chains)]
    return _collect(chains, space.names, len(space.continuous), settings)


def run_chains(
    net: EvidenceNetwork,
    cfg: ModelConfig,
    settings: SamplerSettings,
    label: str = "MCMC",
    **kwargs,
) -> PosteriorSamples:
    """Posterior draws of every parameter of the configured model"""
    log_level = kwargs.get("log_level")
    kernel_kwargs = {"log_level": log_level} if log_level is not None else {}
    kernel = PosteriorKernel(net, cfg, label=f"{label}-KERNEL", **kernel_kwargs)

    def make_target(seed: np.random.SeedSequence) -> Target:
        return FactorCache(kernel, initial_state(kernel.space, seed))

    return run_target_chains(make_target, kernel.space, settings, label=label, **kwargs)


def sample_log_density(
    log_density: Callable[[np.ndarray, np.ndarray], float],
    space: ParameterSpace,
    start: ParameterState,
    settings: SamplerSettings,
    label: str = "MCMC",
    **kwargs,
) -> PosteriorSamples:
    """Sample a plain log density, every chain starting from start"""

    def make_target(_: np.random.SeedSequence) -> Target:
        return LogDensityTarget(log_density, start)

    return run_target_chains(make_target, space, settings, label=label, **kwargs)
