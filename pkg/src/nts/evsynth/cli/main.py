"""evsynth command line: validate, fit, simulate, report, replay"""

from typing import Optional, Sequence
from datetime import datetime, timezone
from pathlib import Path
import argparse
import logging
import tempfile
import time

import numpy as np
import yaml
from pydantic import ValidationError

from .. import __version__, get_logger
from ..evidence.errors import EvidenceError
from ..evidence.types import Design, EvidenceNetwork
from ..evidence.io import (
    AD_FILE,
    COVARIATES_FILE,
    DIRECTIONS_FILE,
    IPD_FILE,
    STUDIES_FILE,
    TREATMENTS_FILE,
    load_network_dir,
    export_network,
)
from ..evidence.transform import reroot_network, select_studies
from ..evidence.validation import validate_network
from ..model.config import (
    Approach,
    ConfigurationError,
    ModelConfig,
    centered_network,
    read_config_document,
)
from ..mcmc.settings import SamplerError, SamplerSettings
from ..mcmc.samples import PosteriorSamples
from ..mcmc.engine import run_chains
from ..nrs.workflow import run_two_step
from ..reporting.report import FitReport, build_report
from ..reporting.export import FORMATS, export
from ..oracle.simulation import PRESETS, preset, simulate_network
from .manifest import (
    MANIFEST_FILE,
    NETWORK_DIR,
    ParameterDiagnostics,
    RunManifest,
    digest_files,
    output_digests,
    sha256_file,
)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_CONVERGENCE = 2
EXIT_INTERNAL = 3

SAMPLES_FILE = "samples.csv"
LEDGER_FILE = "ledger.json"
NRS_SUMMARY_FILE = "nrs_summary.csv"
TRUTH_FILE = "truth.csv"
REPORT_DIR = "report"
NETWORK_FILES = (
    TREATMENTS_FILE,
    STUDIES_FILE,
    IPD_FILE,
    AD_FILE,
    DIRECTIONS_FILE,
    COVARIATES_FILE,
)

APPROACH_ALIASES = {
    "bias1": Approach.BIAS_MODEL_1.value,
    "bias2": Approach.BIAS_MODEL_2.value,
    "nrs": Approach.NRS_PRIOR.value,
}

INPUT_ERRORS = (
    EvidenceError,
    ConfigurationError,
    SamplerError,
    ValidationError,
    yaml.YAMLError,
    OSError,
)


def parse_grid(text: str) -> list[float]:
    """Covariate grid, "start:stop:count" or comma separated values"""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise argparse.ArgumentTypeError(f"grid '{text}' is not start:stop:count")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 2:
            raise argparse.ArgumentTypeError("a grid needs at least 2 points")
        return [float(v) for v in np.linspace(start, stop, count)]
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"grid '{text}' is not a list of numbers") from exc


def parse_formats(text: str) -> list[str]:
    """Comma separated export formats"""
    formats = [f.strip() for f in text.split(",") if f.strip()]
    unknown = [f for f in formats if f not in FORMATS]
    if unknown:
        raise argparse.ArgumentTypeError(f"unknown format(s): {', '.join(unknown)}")
    return formats


def _approach(text: str) -> str:
    return APPROACH_ALIASES.get(text, text)


def _section(document: dict, key: str) -> dict:
    section = document.get(key)
    if section is None:
        section = {}
    if not isinstance(section, dict):
        raise ConfigurationError(f"configuration section '{key}' must be a mapping")
    document[key] = section
    return section


def model_document(document: dict, args: argparse.Namespace) -> dict:
    """Configuration document with the model flags applied, flags win"""
    # pylint: disable=too-many-branches
    document = dict(document)
    document.pop("sampler", None)
    if args.approach is not None:
        document["approach"] = args.approach
    if args.effects is not None:
        document["trt_effect"] = args.effects
    bias_flags = {
        "form": args.bias_form,
        "effect": args.bias_effects,
        "mean_structure": args.bias_mean,
        "pi_high": args.pi_high,
        "pi_low": args.pi_low,
        "pi_unclear": args.pi_unclear,
    }
    if any(v is not None for v in bias_flags.values()):
        bias = _section(document, "bias")
        bias.update({k: v for k, v in bias_flags.items() if v is not None})
    if args.covariate is not None or args.center is not None:
        regression = _section(document, "regression")
        if args.covariate is not None:
            regression["covariate"] = args.covariate
        if args.center is not None:
            regression["center"] = args.center
    if args.zeta is not None or args.w is not None or args.nrs_reference is not None:
        nrs = _section(document, "nrs")
        if args.zeta is not None:
            nrs["zeta"] = args.zeta
        if args.w is not None:
            nrs["w"] = args.w
        if args.nrs_reference is not None:
            nrs["reference"] = args.nrs_reference
    if args.tau_upper is not None:
        _section(document, "priors")["tau_upper"] = args.tau_upper
    return document


def sampler_document(document: dict, args: argparse.Namespace) -> dict:
    """Sampler section with the sampler flags applied"""
    sampler = dict(document.get("sampler") or {})
    for key, value in (
        ("n_chains", args.chains),
        ("n_iterations", args.iterations),
        ("burn_in", args.burn_in),
        ("thin", args.thin),
        ("seed", args.seed),
        ("n_threads", args.threads),
    ):
        if value is not None:
            sampler[key] = value
    return sampler


def fit_network(
    raw: EvidenceNetwork, cfg: ModelConfig, reference: Optional[int] = None
) -> EvidenceNetwork:
    """Network the draws refer to: centred, and for the two-step approach RCT-only on its reference"""
    net = centered_network(raw, cfg)
    if cfg.approach is Approach.NRS_PRIOR:
        net = select_studies(net, design=Design.RCT)
        if reference is not None:
            net = reroot_network(net, reference)
    return net


def _log_kwargs(args: argparse.Namespace) -> dict[str, int]:
    return {"log_level": args.log_level}


def run_fit(
    raw: EvidenceNetwork,
    cfg: ModelConfig,
    settings: SamplerSettings,
    out: Path,
    level: float,
    grid: Optional[Sequence[float]],
    formats: Sequence[str],
    **kwargs,
) -> tuple[FitReport, EvidenceNetwork, PosteriorSamples]:
    """Fit, then write draws, ledger and report files into out"""
    out.mkdir(parents=True, exist_ok=True)
    net = centered_network(raw, cfg)
    if cfg.approach is Approach.NRS_PRIOR:
        two_step = run_two_step(net, cfg, settings, label="TWO-STEP", **kwargs)
        two_step.summary.to_csv(out / NRS_SUMMARY_FILE)
        net, samples = two_step.rct_network, two_step.rct_samples
    else:
        samples = run_chains(net, cfg, settings, label="MCMC", **kwargs)
    samples.to_csv(out / SAMPLES_FILE)
    samples.write_ledger(out / LEDGER_FILE)
    report = build_report(samples, net, cfg, level=level, curve_grid=grid, **kwargs)
    export(report, out, formats)
    return report, net, samples


def cmd_validate(args: argparse.Namespace, logger: logging.Logger) -> int:
    """Load and validate a network directory"""
    net = load_network_dir(args.network, reference=args.reference)
    report = validate_network(net, require_all_treatments=not args.allow_unobserved)
    for warning in report.warnings:
        logger.warning(warning)
    logger.info(
        "network is valid: %d treatments, %d studies, reference %s",
        report.n_treatments,
        report.n_studies,
        net.label(net.reference_treatment),
    )
    if args.report is not None:
        Path(args.report).write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_fit(args: argparse.Namespace, logger: logging.Logger) -> int:
    """Fit the configured approach and write outputs with a manifest"""
    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    document = read_config_document(args.config) if args.config is not None else {}
    cfg = ModelConfig(**model_document(document, args))
    settings = SamplerSettings(**sampler_document(document, args))
    raw = load_network_dir(args.network, reference=args.reference)
    validate_network(raw)
    out = Path(args.out)
    export_network(raw, out / NETWORK_DIR)
    logger.info(
        "fitting %s with %d chain(s) of %d iterations",
        cfg.approach.value,
        settings.n_chains,
        settings.n_iterations,
    )
    report, net, samples = run_fit(
        raw, cfg, settings, out, args.level, args.curve_grid, args.formats, **_log_kwargs(args)
    )
    inputs = digest_files(args.network, NETWORK_FILES)
    if args.config is not None:
        inputs[f"config/{Path(args.config).name}"] = sha256_file(args.config)
    for name, digest in digest_files(out / NETWORK_DIR, NETWORK_FILES).items():
        inputs[f"{NETWORK_DIR}/{name}"] = digest
    manifest = RunManifest(
        command="fit",
        started_at=started.isoformat(),
        wall_clock_seconds=time.perf_counter() - t0,
        seed=settings.seed,
        inputs=inputs,
        config=cfg.snapshot(),
        sampler=settings.model_dump(mode="json"),
        options={
            "reference": raw.reference_treatment,
            "level": args.level,
            "curve_grid": args.curve_grid,
            "formats": list(args.formats),
        },
        fit_reference=net.reference_treatment,
        n_continuous=samples.n_continuous,
        diagnostics=[ParameterDiagnostics.from_summary(p) for p in report.parameters],
        outputs=output_digests(out),
    )
    manifest.write(out)
    logger.info("outputs written to %s", out)
    if not report.converged:
        logger.warning("convergence warning: max R-hat %.4f", report.max_rhat)
        return EXIT_CONVERGENCE
    return EXIT_OK


def run_simulate(name: str, seed: int, out: Path) -> None:
    """Network files and truth record of a preset"""
    net, truth = simulate_network(preset(name, seed))
    export_network(net, out)
    truth.to_csv(out / TRUTH_FILE)


def cmd_simulate(args: argparse.Namespace, logger: logging.Logger) -> int:
    """Simulate a preset network with its generating values"""
    started = datetime.now(timezone.utc)
    t0 = time.perf_counter()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    run_simulate(args.preset, args.seed, out)
    RunManifest(
        command="simulate",
        started_at=started.isoformat(),
        wall_clock_seconds=time.perf_counter() - t0,
        seed=args.seed,
        options={"preset": args.preset},
        outputs=output_digests(out),
    ).write(out)
    logger.info("preset %s (seed %d) written to %s", args.preset, args.seed, out)
    return EXIT_OK


def _stored_fit(fit_dir: Path) -> tuple[RunManifest, EvidenceNetwork, ModelConfig]:
    manifest = RunManifest.read(fit_dir)
    if manifest.command != "fit" or manifest.config is None:
        raise ConfigurationError(f"{fit_dir} does not hold a fit")
    raw = load_network_dir(fit_dir / NETWORK_DIR, reference=manifest.options.get("reference"))
    return manifest, raw, ModelConfig(**manifest.config)


def cmd_report(args: argparse.Namespace, logger: logging.Logger) -> int:
    """Re-summarize a stored fit"""
    fit_dir = Path(args.fit_dir)
    if not (fit_dir / MANIFEST_FILE).is_file():
        raise EvidenceError("no fit manifest found", file=str(fit_dir / MANIFEST_FILE))
    manifest, raw, cfg = _stored_fit(fit_dir)
    net = fit_network(raw, cfg, manifest.fit_reference)
    samples = PosteriorSamples.from_csv(fit_dir / SAMPLES_FILE, manifest.n_continuous)
    level = args.level if args.level is not None else manifest.options.get("level", 0.95)
    grid = args.curve_grid if args.curve_grid is not None else manifest.options.get("curve_grid")
    report = build_report(samples, net, cfg, level=level, curve_grid=grid, **_log_kwargs(args))
    out = Path(args.out) if args.out is not None else fit_dir / REPORT_DIR
    written = export(report, out, args.formats)
    logger.info("%d report file(s) written to %s", len(written), out)
    return EXIT_OK


def _replay_into(manifest: RunManifest, source: Path, out: Path, args: argparse.Namespace) -> None:
    if manifest.command == "simulate":
        run_simulate(str(manifest.options["preset"]), manifest.seed, out)
        return
    _, raw, cfg = _stored_fit(source)
    stored = digest_files(source / NETWORK_DIR, NETWORK_FILES)
    for name, digest in stored.items():
        if manifest.inputs.get(f"{NETWORK_DIR}/{name}") != digest:
            raise EvidenceError("copied network differs from the manifest", file=name)
    settings = SamplerSettings(**(manifest.sampler or {}))
    if args.threads is not None:
        settings = settings.model_copy(update={"n_threads": args.threads})
    run_fit(
        raw,
        cfg,
        settings,
        out,
        manifest.options.get("level", 0.95),
        manifest.options.get("curve_grid"),
        manifest.options.get("formats", list(FORMATS)),
        **_log_kwargs(args),
    )


def cmd_replay(args: argparse.Namespace, logger: logging.Logger) -> int:
    """Re-run from a manifest and compare output digests"""
    source = Path(args.run_dir)
    manifest = RunManifest.read(source)
    if args.out is not None:
        out = Path(args.out)
        _replay_into(manifest, source, out, args)
        digests = output_digests(out)
    else:
        with tempfile.TemporaryDirectory(prefix="evsynth-replay-") as tmp:
            _replay_into(manifest, source, Path(tmp), args)
            digests = output_digests(tmp)
    mismatched = manifest.mismatches(digests)
    if mismatched:
        logger.error("replay differs in: %s", ", ".join(mismatched))
        return EXIT_INTERNAL
    logger.info("replay reproduced %d output file(s) bit for bit", len(digests))
    return EXIT_OK


def _add_fit_flags(parser: argparse.ArgumentParser) -> None:
    model = parser.add_argument_group("model (overrides the configuration file)")
    model.add_argument("--approach", type=_approach, default=None,
                       choices=[a.value for a in Approach])
    model.add_argument("--effects", choices=["random", "common"], default=None)
    model.add_argument("--bias-form", choices=["additive", "multiplicative", "both"], default=None)
    model.add_argument("--bias-effects", choices=["random", "common"], default=None)
    model.add_argument("--bias-mean", choices=["zero_active_active", "signed_active_active"],
                       default=None)
    model.add_argument("--pi-high", default=None, metavar="A,B")
    model.add_argument("--pi-low", default=None, metavar="A,B")
    model.add_argument("--pi-unclear", default=None, metavar="A,B")
    model.add_argument("--covariate", default=None, metavar="NAME")
    model.add_argument("--center", type=float, default=None)
    model.add_argument("--zeta", type=float, default=None)
    model.add_argument("--w", type=float, default=None)
    model.add_argument("--nrs-reference", default=None, metavar="LABEL")
    model.add_argument("--tau-upper", type=float, default=None)
    sampler = parser.add_argument_group("sampler (overrides the configuration file)")
    sampler.add_argument("--chains", type=int, default=None)
    sampler.add_argument("--iterations", type=int, default=None)
    sampler.add_argument("--burn-in", type=int, default=None)
    sampler.add_argument("--thin", type=int, default=None)
    sampler.add_argument("--seed", type=int, default=None)
    sampler.add_argument("--threads", type=int, default=None,
                         help="chains run in parallel, default from EVSYNTH_THREADS")


def build_parser() -> argparse.ArgumentParser:
    """Argument parser of all subcommands"""
    parser = argparse.ArgumentParser(
        prog="evsynth",
        description="Cross-design, cross-format Bayesian network meta-analysis and meta-regression.",
        epilog="Exit codes: 0 ok, 1 input error, 2 convergence warning, 3 internal error.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0,
                        help="debug logging on standard error")
    sub = parser.add_subparsers(dest="command", required=True)

    validate = sub.add_parser("validate", help="load and validate a network directory")
    validate.add_argument("network", metavar="DIR")
    validate.add_argument("--reference", default=None)
    validate.add_argument("--allow-unobserved", action="store_true",
                          help="judge connectivity on observed treatments only")
    validate.add_argument("--report", default=None, metavar="JSON")
    validate.set_defaults(handler=cmd_validate)

    fit = sub.add_parser("fit", help="fit a synthesis model")
    fit.add_argument("network", metavar="DIR")
    fit.add_argument("--out", required=True, metavar="DIR")
    fit.add_argument("--config", default=None, metavar="YAML")
    fit.add_argument("--reference", default=None)
    fit.add_argument("--level", type=float, default=0.95)
    fit.add_argument("--curve-grid", type=parse_grid, default=None, metavar="START:STOP:COUNT")
    fit.add_argument("--formats", type=parse_formats, default=list(FORMATS), metavar="csv,json,svg")
    _add_fit_flags(fit)
    fit.set_defaults(handler=cmd_fit)

    simulate = sub.add_parser("simulate", help="simulate a preset network with known truth")
    simulate.add_argument("--preset", choices=PRESETS, required=True)
    simulate.add_argument("--seed", type=int, default=1)
    simulate.add_argument("--out", required=True, metavar="DIR")
    simulate.set_defaults(handler=cmd_simulate)

    report = sub.add_parser("report", help="re-summarize a stored fit")
    report.add_argument("fit_dir", metavar="DIR")
    report.add_argument("--out", default=None, metavar="DIR")
    report.add_argument("--level", type=float, default=None)
    report.add_argument("--curve-grid", type=parse_grid, default=None, metavar="START:STOP:COUNT")
    report.add_argument("--formats", type=parse_formats, default=list(FORMATS), metavar="csv,json,svg")
    report.set_defaults(handler=cmd_report)

    replay = sub.add_parser("replay", help="re-run from a manifest and compare digests")
    replay.add_argument("run_dir", metavar="DIR")
    replay.add_argument("--out", default=None, metavar="DIR")
    replay.add_argument("--threads", type=int, default=None)
    replay.set_defaults(handler=cmd_replay)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point of the evsynth console script"""
    args = build_parser().parse_args(argv)
    args.log_level = logging.DEBUG if args.verbose else logging.INFO
    logger = get_logger("EVSYNTH", args.log_level)
    try:
        return int(args.handler(args, logger))
    except INPUT_ERRORS as exc:
        logger.error("%s", exc)
        return EXIT_INPUT
    except Exception as exc:  # pylint: disable=broad-exception-caught
        logger.exception("internal error: %s", exc)
        return EXIT_INTERNAL

