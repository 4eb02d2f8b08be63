"""Repeated simulate-and-fit coverage experiments"""

from typing import Union, Optional, Sequence
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import pandas as pd
from pydantic import BaseModel

from .. import get_logger
from ..model.config import ModelConfig, centered_network
from ..mcmc.settings import SamplerSettings
from ..mcmc.engine import run_chains
from ..reporting.summary import interval
from .simulation import SimulationSpec, TruthRecord, simulate_network

# truth names that the bias models house under a form suffix
_ALIASES = {
    "g": ("g", "g2", "g1"),
    "g_act": ("g_act", "g2_act", "g1_act"),
    "tau_gamma": ("tau_gamma", "tau_gamma2", "tau_gamma1"),
}


class RecoveryRow(BaseModel):
    """Coverage and median bias of one parameter over replicates"""

    parameter: str
    truth: float
    replicates: int
    coverage: float
    median_bias: float
    within_2sd: float
    median_of_medians: float


class RecoveryReport(BaseModel):
    """Per-parameter recovery over all replicates"""

    level: float
    replicates: int
    rows: list[RecoveryRow]

    def row(self, parameter: str) -> RecoveryRow:
        """Row by truth parameter name"""
        for r in self.rows:
            if r.parameter == parameter:
                return r
        raise KeyError(parameter)

    def to_csv(self, path: Union[str, Path]) -> Path:
        """One row per parameter"""
        path = Path(path)
        pd.DataFrame([r.model_dump() for r in self.rows]).to_csv(
            path, index=False, lineterminator="\n"
        )
        return path


def _model_name(truth_name: str, names: Sequence[str]) -> Optional[str]:
    for candidate in _ALIASES.get(truth_name, (truth_name,)):
        if candidate in names:
            return candidate
    return None


def recovery_experiment(
    spec: SimulationSpec,
    cfg: ModelConfig,
    settings: SamplerSettings,
    replicates: int = 20,
    parameters: Optional[Sequence[str]] = None,
    level: float = 0.95,
    n_workers: int = 1,
    label: str = "RECOVERY",
    **kwargs,
) -> RecoveryReport:
    """
    Simulate replicates from spec (seeds spawned from spec.seed), fit each
    with cfg and report how often the CrI covers the generating value.
    parameters defaults to every basic parameter and network-level truth
    the model houses.
    """
    # pylint: disable=too-many-locals
    log_level = int(kwargs.pop("log_level")) if "log_level" in kwargs else None
    logger = get_logger(label, log_level)
    if replicates < 1:
        raise ValueError("at least one replicate is required")
    seeds = np.random.SeedSequence(spec.seed).spawn(replicates)

    def one(r: int) -> tuple[TruthRecord, dict[str, tuple[float, float, float, float]]]:
        data_seed, fit_seed = (int(x) for x in seeds[r].generate_state(2))
        net, truth = simulate_network(spec.model_copy(update={"seed": data_seed}))
        run_cfg = cfg
        if cfg.regression is not None and spec.covariate is not None and cfg.regression.center is None:
            run_cfg = cfg.model_copy(
                update={"regression": cfg.regression.model_copy(update={"center": spec.covariate.center})}
            )
        net = centered_network(net, run_cfg)
        samples = run_chains(
            net,
            run_cfg,
            settings.model_copy(update={"seed": fit_seed}),
            label=f"{label}-{r + 1}",
            **({"log_level": log_level} if log_level is not None else {}),
        )
        out = {}
        for name in truth.values:
            model_name = _model_name(name, samples.names)
            if model_name is None or name.startswith(("u[", "R[")):
                continue
            draws = samples.pooled(model_name).astype(float)
            ci = interval(draws, level)
            out[name] = (ci.median, ci.lower, ci.upper, float(np.std(draws, ddof=1)))
        logger.info("%s: replicate %d of %d done", label, r + 1, replicates)
        return truth, out

    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(one, range(replicates)))
    else:
        results = [one(r) for r in range(replicates)]

    names = list(parameters) if parameters is not None else list(results[0][1])
    rows = []
    for name in names:
        truth_value = results[0][0].values[name]
        fits = [fit[name] for _, fit in results if name in fit]
        if not fits:
            raise KeyError(f"parameter {name} is not housed by the fitted model")
        medians = np.asarray([f[0] for f in fits])
        covered = [f[1] <= truth_value <= f[2] for f in fits]
        close = [abs(f[0] - truth_value) <= 2.0 * f[3] for f in fits]
        rows.append(
            RecoveryRow(
                parameter=name,
                truth=truth_value,
                replicates=len(fits),
                coverage=float(np.mean(covered)),
                median_bias=float(np.mean(medians - truth_value)),
                within_2sd=float(np.mean(close)),
                median_of_medians=float(np.median(medians)),
            )
        )
    return RecoveryReport(level=level, replicates=replicates, rows=rows)
