"""Joint log posterior of the synthesis models"""

from .densities import (
    normal_logpdf,
    bernoulli_logpmf,
    multiarm_covariance,
    multiarm_logpdf,
    geometric_covariance,
    mvn_logpdf,
    mixture_conditional_logdensity,
    mixture_marginal_logdensity,
)
from .posterior import PosteriorKernel, symbol_audit, log_posterior
from .cache import FactorCache
