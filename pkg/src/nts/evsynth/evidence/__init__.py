"""Typed representation, ingestion and validation of network evidence"""

from .errors import EvidenceError, DisconnectedNetworkError
from .types import (
    Treatment,
    IpdRecord,
    AdArm,
    Study,
    EvidenceNetwork,
    Design,
    DataFormat,
    RiskOfBias,
    Direction,
)
from .io import load_network, load_network_dir, export_network
from .validation import ValidationReport, validate_network, treatment_components
from .transform import (
    center_covariates,
    aggregate_ipd,
    as_aggregate_study,
    reroot_network,
    select_studies,
)
