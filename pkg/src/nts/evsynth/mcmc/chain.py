"""One adaptive Metropolis-within-Gibbs chain"""

from typing import Callable, Optional, Protocol, Sequence
import math

import numpy as np
from scipy.special import expit
from statemachine import StateMachine, State  # type: ignore

from .. import get_logger
from ..model.parameters import ParameterDescriptor, ParameterState, Support
from .settings import SamplerSettings, SamplerError
from .transforms import to_unconstrained, from_unconstrained, log_jacobian


class Target(Protocol):
    """What a chain needs from the log density it samples"""

    state: ParameterState

    @property
    def total(self) -> float:
        """Current log density"""

    def propose(self, i: int, value: float) -> tuple[float, tuple]:
        """Log density change if continuous parameter i took value"""

    def accept(self, pending: tuple) -> None:
        """Commit a proposal"""

    def indicator_log_weights(self, i: int) -> tuple[float, float, dict]:
        """Log full conditional of indicator i at 0 and 1"""

    def set_indicator(self, i: int, value: int, updates: dict) -> None:
        """Commit an indicator value"""


class LogDensityTarget:
    """
    Target built from a plain log density over continuous values and
    binary indicators, without any factorisation.
    """

    def __init__(
        self,
        log_density: Callable[[np.ndarray, np.ndarray], float],
        state: ParameterState,
    ) -> None:
        self.log_density = log_density
        self.state = state.copy()
        self._current = float(log_density(self.state.values, self.state.indicators))

    @property
    def total(self) -> float:
        """Current log density"""
        return self._current

    def propose(self, i: int, value: float) -> tuple[float, tuple]:
        """Log density change if continuous parameter i took value"""
        values = self.state.values.copy()
        values[i] = value
        new = float(self.log_density(values, self.state.indicators))
        if math.isnan(new):
            new = -math.inf
        return new - self._current, (i, value, new)

    def accept(self, pending: tuple) -> None:
        """Commit a proposal returned by propose"""
        i, value, new = pending
        self.state.values[i] = value
        self._current = new

    def indicator_log_weights(self, i: int) -> tuple[float, float, dict]:
        """Log density at indicator i equal to 0 and 1"""
        weights = []
        for value in (0, 1):
            indicators = self.state.indicators.copy()
            indicators[i] = value
            weights.append(float(self.log_density(self.state.values, indicators)))
        return weights[0], weights[1], {0: weights[0], 1: weights[1]}

    def set_indicator(self, i: int, value: int, updates: dict) -> None:
        """Commit an indicator value"""
        self.state.indicators[i] = value
        self._current = updates[value]


def indicator_full_conditional(w0: float, w1: float) -> float:
    """P(indicator = 1 | rest) from the two unnormalised log weights"""
    if w1 == -math.inf and w0 == -math.inf:
        return 0.5
    if w1 == -math.inf:
        return 0.0
    if w0 == -math.inf:
        return 1.0
    return float(expit(w1 - w0))


def gibbs_update_indicator(target: Target, i: int, rng: np.random.Generator) -> int:
    """Exact draw of indicator i from its two-point full conditional"""
    w0, w1, updates = target.indicator_log_weights(i)
    p1 = indicator_full_conditional(w0, w1)
    value = int(rng.random() < p1)
    target.set_indicator(i, value, updates)
    return value


class Chain(StateMachine):
    """
    Chain is a state machine initialization->adapting->sampling->finished.
    Step sizes change only in the adapting state, leaving it freezes them.
    """

    # pylint: disable=too-many-instance-attributes

    initialization = State(initial=True)
    adapting = State()
    sampling = State()
    finished = State(final=True)

    start = initialization.to(adapting, cond="_has_burn_in") | initialization.to(
        sampling, unless="_has_burn_in"
    )
    freeze = adapting.to(sampling)
    finish = sampling.to(finished)

    def __init__(
        self,
        target: Target,
        parameters: Sequence[ParameterDescriptor],
        settings: SamplerSettings,
        rng: np.random.Generator,
        label: str = "CHAIN",
        **kwargs,
    ) -> None:
        self.__label: str = str(label)
        self.logger = get_logger(
            self.__label,
            int(kwargs.pop("log_level")) if "log_level" in kwargs else None,
        )
        self.target = target
        self.parameters = tuple(parameters)
        self.settings = settings
        self.rng = rng
        n = len(self.parameters)
        self.n_indicators = int(target.state.indicators.size)
        self.log_steps = np.full(n, math.log(settings.initial_step))
        self.step_sizes_frozen = np.exp(self.log_steps)
        self._batch_accepted = np.zeros(n, dtype=int)
        self._batch_count = 0
        self._batch_index = 0
        self.accepted = np.zeros(n, dtype=int)
        self.proposed = np.zeros(n, dtype=int)
        self.iteration = 0
        self.draws = np.empty((settings.n_retained, n + self.n_indicators))
        self._n_kept = 0
        super().__init__(**kwargs)

    @property
    def label(self) -> str:
        """Chain label string"""
        return self.__label

    def _has_burn_in(self) -> bool:
        return self.settings.burn_in > 0

    @property
    def step_sizes(self) -> np.ndarray:
        """Current proposal standard deviations on the unconstrained scale"""
        return np.exp(self.log_steps)

    @property
    def acceptance(self) -> np.ndarray:
        """Acceptance rate per continuous parameter over retained iterations"""
        with np.errstate(invalid="ignore", divide="ignore"):
            rate = self.accepted / self.proposed
        return np.where(self.proposed > 0, rate, np.nan)

    def on_enter_adapting(self, event: str, state: State) -> None:
        """Burn-in starts"""
        self.logger.debug("%s %s is %s", event.upper(), self.label, state.id.upper())

    def on_enter_sampling(self, event: str, state: State) -> None:
        """Step sizes are final"""
        self.step_sizes_frozen = self.step_sizes.copy()
        self.accepted[:] = 0
        self.proposed[:] = 0
        self.logger.debug(
            "%s %s is %s at iteration %d", event.upper(), self.label, state.id.upper(), self.iteration
        )

    def on_enter_finished(self, event: str, state: State) -> None:
        """All iterations done"""
        self.logger.debug(
            "%s %s is %s, mean acceptance %.3f",
            event.upper(),
            self.label,
            state.id.upper(),
            float(np.nanmean(self.acceptance)) if self.acceptance.size else math.nan,
        )

    def _update_continuous(self, i: int) -> None:
        p = self.parameters[i]
        x = float(self.target.state.values[i])
        if p.support is Support.REAL:
            proposal = x + self.rng.normal(0.0, math.exp(self.log_steps[i]))
            correction = 0.0
        else:
            y = to_unconstrained(x, p.support, p.upper)
            y_new = y + self.rng.normal(0.0, math.exp(self.log_steps[i]))
            proposal = from_unconstrained(y_new, p.support, p.upper)
            correction = log_jacobian(proposal, p.support, p.upper) - log_jacobian(
                x, p.support, p.upper
            )
        u = 1.0 - self.rng.random()
        delta, pending = self.target.propose(i, proposal)
        log_ratio = delta + correction
        self.proposed[i] += 1
        if not math.isnan(log_ratio) and math.log(u) < log_ratio:
            self.target.accept(pending)
            self.accepted[i] += 1
            self._batch_accepted[i] += 1

    def _adapt(self) -> None:
        self._batch_index += 1
        rates = self._batch_accepted / self._batch_count
        gain = 2.0 / math.sqrt(self._batch_index)
        self.log_steps += (rates - self.settings.target_acceptance) * gain
        self._batch_accepted[:] = 0
        self._batch_count = 0

    def sweep(self) -> None:
        """One sweep over every continuous parameter and indicator"""
        for i in range(len(self.parameters)):
            self._update_continuous(i)
        for i in range(self.n_indicators):
            gibbs_update_indicator(self.target, i, self.rng)
        if self.current_state == self.adapting:
            self._batch_count += 1
            if self._batch_count == self.settings.adaptation_window:
                self._adapt()

    def execute(self, progress: Optional[Callable[[str, int], None]] = None) -> "Chain":
        """Run all iterations, collecting retained draws"""
        start = self.target.total
        if not math.isfinite(start):
            raise SamplerError(f"{self.label}: log posterior at the initial state is {start}")
        s = self.settings
        self.send("start")
        report_every = max(1, s.n_iterations // 10)
        n = len(self.parameters)
        for it in range(s.n_iterations):
            if it == s.burn_in and self.current_state == self.adapting:
                self.send("freeze")
            self.iteration = it
            self.sweep()
            if s.is_retained(it):
                self.draws[self._n_kept, :n] = self.target.state.values
                self.draws[self._n_kept, n:] = self.target.state.indicators
                self._n_kept += 1
            if (it + 1) % report_every == 0:
                self.logger.info(
                    "%s: %d of %d iterations (%d%%)", self.label, it + 1, s.n_iterations,
                    100 * (it + 1) // s.n_iterations,
                )
                if progress is not None:
                    progress(self.label, it + 1)
        self.send("finish")
        return self
