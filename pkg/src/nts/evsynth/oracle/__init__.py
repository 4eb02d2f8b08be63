"""Synthetic networks with known truth and exact posteriors of tiny models"""

from .quadrature import (
    MAX_DIMENSION,
    TinyStudy,
    TinyModelSpec,
    OracleMoments,
    grid_posterior_oracle,
)
from .simulation import (
    PRESETS,
    COVARIATE_NAME,
    SimulatedTreatment,
    SimulatedStudy,
    CovariateSpec,
    BiasTruth,
    SimulationSpec,
    TruthRecord,
    simulate_network,
    preset,
    exchangeability_pvalue,
)
from .recovery import RecoveryRow, RecoveryReport, recovery_experiment
