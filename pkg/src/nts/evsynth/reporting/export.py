"""Report files: CSV tables, JSON document and SVG plots"""

from typing import Union, Sequence
from pathlib import Path

import pandas as pd
import matplotlib

matplotlib.use("Agg")
# fixed salt, otherwise SVG element ids are random per run
matplotlib.rcParams["svg.hashsalt"] = "evsynth"
import matplotlib.pyplot as plt  # pylint: disable=wrong-import-position

from .report import FitReport
from .tables import Scale

SUMMARY_FILE = "summaries.csv"
LEAGUE_FILE = "league_table.csv"
LEAGUE_MATRIX_FILE = "league_table_matrix.csv"
FOREST_FILE = "forest.csv"
BIAS_FILE = "bias.csv"
CURVE_FILE = "regression_curves.csv"
REPORT_FILE = "report.json"
FOREST_PLOT = "forest.svg"
CURVE_PLOT = "regression_curves.svg"

FORMATS = ("csv", "json", "svg")


def _write(df: pd.DataFrame, path: Path) -> Path:
    df.to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
    return path


def summaries_frame(report: FitReport) -> pd.DataFrame:
    """One row per parameter"""
    return pd.DataFrame(
        [p.model_dump() for p in report.parameters],
        columns=["name", "mean", "sd", "median", "lower", "upper", "rhat", "ess"],
    )


def league_frame(report: FitReport) -> pd.DataFrame:
    """Long league table, row (a, b) is b versus a"""
    table = report.league_table
    rows = []
    for i, a in enumerate(table.labels):
        for j, b in enumerate(table.labels):
            rows.append(
                {
                    "row": a,
                    "column": b,
                    "median": table.median[i][j],
                    "lower": table.lower[i][j],
                    "upper": table.upper[i][j],
                }
            )
    return pd.DataFrame(rows, columns=["row", "column", "median", "lower", "upper"])


def league_matrix(report: FitReport) -> pd.DataFrame:
    """Medians with the treatment labels as row and column headers"""
    table = report.league_table
    df = pd.DataFrame(table.median, columns=table.labels)
    df.insert(0, "treatment", table.labels)
    return df


def forest_frame(report: FitReport) -> pd.DataFrame:
    """One row per treatment versus the reference"""
    return pd.DataFrame(
        [r.model_dump() for r in report.forest],
        columns=["contrast", "treatment", "reference", "median", "lower", "upper"],
    )


def bias_frame(report: FitReport) -> pd.DataFrame:
    """Bias summaries followed by per-study P(R = 1)"""
    rows = []
    if report.bias is not None:
        for p in report.bias.mean_bias + report.bias.heterogeneity + report.bias.other:
            rows.append({"name": p.name, "median": p.median, "lower": p.lower, "upper": p.upper})
        for study, prob in report.bias.bias_probability.items():
            rows.append({"name": f"P(R[{study}]=1)", "median": prob, "lower": None, "upper": None})
    return pd.DataFrame(rows, columns=["name", "median", "lower", "upper"])


def curves_frame(report: FitReport) -> pd.DataFrame:
    """Covariate grid with median, lower and upper columns per contrast"""
    if not report.curves:
        return pd.DataFrame()
    first = report.curves[0]
    df = pd.DataFrame({first.covariate: first.x})
    for c in report.curves:
        df[f"{c.contrast} median"] = c.median
        df[f"{c.contrast} lower"] = c.lower
        df[f"{c.contrast} upper"] = c.upper
    return df


def plot_forest(report: FitReport, path: Path) -> Path:
    """Interval plot of the forest rows on a log axis"""
    rows = report.forest
    fig, ax = plt.subplots(figsize=(6, 1 + 0.5 * max(1, len(rows))))
    for i, r in enumerate(rows):
        y = len(rows) - i
        ax.plot([r.lower, r.upper], [y, y], color="k", linewidth=1.5)
        ax.plot([r.median], [y], "s", color="tab:blue")
    ax.axvline(1.0, color="grey", linestyle="--", linewidth=1)
    ax.set_yticks([len(rows) - i for i in range(len(rows))])
    ax.set_yticklabels([r.contrast for r in rows])
    ax.set_xscale("log")
    ax.set_xlabel(f"Odds ratio ({100 * report.level:g}% CrI)")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def plot_curves(report: FitReport, path: Path) -> Path:
    """Odds ratio against the raw covariate with credible bands"""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for c in report.curves:
        line = ax.plot(c.x, c.median, label=c.contrast)[0]
        ax.fill_between(c.x, c.lower, c.upper, color=line.get_color(), alpha=0.2)
    ax.axhline(1.0, color="grey", linestyle="--", linewidth=1)
    ax.set_xlabel(report.curves[0].covariate)
    ax.set_ylabel("Odds ratio" if report.curves[0].scale is Scale.OR else "log odds ratio")
    ax.legend(loc="best", fontsize="small")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def export(
    report: FitReport,
    directory: Union[str, Path],
    formats: Sequence[str] = FORMATS,
) -> dict[str, Path]:
    """Write the requested formats into directory, returns written files by name"""
    unknown = [f for f in formats if f not in FORMATS]
    if unknown:
        raise ValueError(f"unknown export format(s): {', '.join(unknown)}")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written: dict[str, Path] = {}
    if "csv" in formats:
        written[SUMMARY_FILE] = _write(summaries_frame(report), directory / SUMMARY_FILE)
        written[LEAGUE_FILE] = _write(league_frame(report), directory / LEAGUE_FILE)
        written[LEAGUE_MATRIX_FILE] = _write(league_matrix(report), directory / LEAGUE_MATRIX_FILE)
        written[FOREST_FILE] = _write(forest_frame(report), directory / FOREST_FILE)
        if report.bias is not None:
            written[BIAS_FILE] = _write(bias_frame(report), directory / BIAS_FILE)
        if report.curves:
            written[CURVE_FILE] = _write(curves_frame(report), directory / CURVE_FILE)
    if "json" in formats:
        path = directory / REPORT_FILE
        path.write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
        written[REPORT_FILE] = path
    if "svg" in formats:
        written[FOREST_PLOT] = plot_forest(report, directory / FOREST_PLOT)
        if report.curves:
            written[CURVE_PLOT] = plot_curves(report, directory / CURVE_PLOT)
    return written


def read_summaries(path: Union[str, Path]) -> pd.DataFrame:
    """Summaries CSV written by export"""
    return pd.read_csv(path)


def read_report(path: Union[str, Path]) -> FitReport:
    """report.json written by export"""
    return FitReport.model_validate_json(Path(path).read_text(encoding="utf-8"))
