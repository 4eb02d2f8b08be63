"""Adaptive Metropolis-within-Gibbs sampling and convergence diagnostics"""

from .settings import SamplerSettings, SamplerError, THREADS_ENV, default_threads
from .transforms import to_unconstrained, from_unconstrained, log_jacobian
from .samples import PosteriorSamples, concatenate_chains
from .chain import (
    Chain,
    Target,
    LogDensityTarget,
    gibbs_update_indicator,
    indicator_full_conditional,
)
from .engine import run_chains, run_target_chains, sample_log_density
from .diagnostics import gelman_rubin, effective_sample_size, psrf, ess, diagnose
