"""NRS-informed priors for the RCT synthesis"""

from .workflow import (
    NrsContrastSummary,
    NrsPosteriorSummary,
    TwoStepFit,
    nrs_reference,
    fit_nrs_posterior,
    make_informative_priors,
    run_two_step,
)
