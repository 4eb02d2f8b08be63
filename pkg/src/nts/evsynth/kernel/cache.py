"""Cached factor values for single-site updates"""

import math

import numpy as np

from ..model.parameters import ParameterState
from .posterior import PosteriorKernel


class FactorCache:
    """
    Keeps every likelihood, hierarchical prior and independent prior factor
    of the current state so that an update of one parameter re-evaluates
    only the factors that read it.
    """

    def __init__(self, kernel: PosteriorKernel, state: ParameterState) -> None:
        self.kernel = kernel
        self.state = state.copy()
        n = kernel.n_studies
        self.lik = np.empty(n)
        self.prior = np.empty(n)
        for j in range(n):
            self.lik[j] = kernel.loglik_factor(j, self.state.values, self.state.indicators)
            self.prior[j] = kernel.prior_factor(j, self.state.values, self.state.indicators)
        self.indep = np.asarray(
            [
                kernel.independent_logprior(i, x)
                for i, x in enumerate(self.state.values)
            ],
            dtype=float,
        )

    @property
    def _arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return self.state.values, self.state.indicators

    @property
    def total(self) -> float:
        """Current log posterior"""
        parts = np.concatenate([self.lik, self.prior, self.indep])
        if np.any(parts == -math.inf):
            return -math.inf
        return math.fsum(parts)

    def _delta(self, lik_js, prior_js) -> tuple[float, dict, dict]:
        k = self.kernel
        v, ind = self.state.values, self.state.indicators
        new_lik: dict[int, float] = {}
        new_prior: dict[int, float] = {}
        delta = 0.0
        for j in lik_js:
            new_lik[j] = k.loglik_factor(j, v, ind)
            delta += new_lik[j] - self.lik[j]
        for j in prior_js:
            new_prior[j] = k.prior_factor(j, v, ind)
            delta += new_prior[j] - self.prior[j]
        return delta, new_lik, new_prior

    def propose(self, i: int, value: float) -> tuple[float, tuple]:
        """Change in log posterior if continuous parameter i took value"""
        old = self.state.values[i]
        new_indep = self.kernel.independent_logprior(i, value)
        if new_indep == -math.inf:
            return -math.inf, ()
        self.state.values[i] = value
        try:
            delta, new_lik, new_prior = self._delta(
                self.kernel.lik_dependents[i], self.kernel.prior_dependents[i]
            )
        finally:
            self.state.values[i] = old
        if math.isnan(delta):
            delta = -math.inf
        delta += new_indep - self.indep[i]
        return delta, (i, value, new_indep, new_lik, new_prior)

    def accept(self, pending: tuple) -> None:
        """Commit a proposal returned by propose"""
        i, value, new_indep, new_lik, new_prior = pending
        self.state.values[i] = value
        self.indep[i] = new_indep
        for j, x in new_lik.items():
            self.lik[j] = x
        for j, x in new_prior.items():
            self.prior[j] = x

    def indicator_log_weights(self, i: int) -> tuple[float, float, dict]:
        """Unnormalised log full conditional of indicator i at 0 and 1"""
        k = self.kernel
        old = int(self.state.indicators[i])
        lik_js = k.lik_dependents_discrete[i]
        prior_js = k.prior_dependents_discrete[i]
        weights: list[float] = []
        updates: dict = {}
        for value in (0, 1):
            self.state.indicators[i] = value
            lik = {j: k.loglik_factor(j, *self._arrays) for j in lik_js}
            prior = {j: k.prior_factor(j, *self._arrays) for j in prior_js}
            weights.append(math.fsum(list(lik.values()) + list(prior.values())))
            updates[value] = (lik, prior)
        self.state.indicators[i] = old
        return weights[0], weights[1], updates

    def set_indicator(self, i: int, value: int, updates: dict) -> None:
        """Commit an indicator value with its precomputed factors"""
        self.state.indicators[i] = value
        lik, prior = updates[value]
        for j, x in lik.items():
            self.lik[j] = x
        for j, x in prior.items():
            self.prior[j] = x
