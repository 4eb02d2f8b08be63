"""Model configuration and parameter space"""

from .config import (
    ConfigurationError,
    Approach,
    Effect,
    BaselineBeta0,
    WithinBetween,
    BiasForm,
    BiasMeanStructure,
    BiasProbabilityModel,
    Heterogeneity,
    NormalPrior,
    UniformPrior,
    BetaPrior,
    RegressionSettings,
    RobWeightSettings,
    BiasSettings,
    NrsPriorSettings,
    PriorSettings,
    ModelConfig,
    read_config_document,
    load_config,
    centered_network,
)
from .parameters import (
    Role,
    Support,
    ParameterDescriptor,
    ParameterSpace,
    ParameterState,
    build_parameter_space,
    initial_state,
    contrast_name,
    study_name,
    contrast_kind,
)
