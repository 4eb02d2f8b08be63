"""Posterior summaries, league tables, bias reports and regression curves"""

from .summary import (
    QUANTILE_METHOD,
    IntervalSummary,
    ParameterSummary,
    interval,
    summarize,
    max_rhat,
)
from .tables import (
    Scale,
    LeagueTable,
    ForestRow,
    RegressionCurve,
    BiasReport,
    basic_draws,
    contrast_draws,
    league_table,
    forest_rows,
    regression_curve,
    bias_report,
)
from .report import FitReport, RHAT_THRESHOLD, build_report
from .export import export, read_summaries, read_report
