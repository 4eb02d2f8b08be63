"""CSV ingestion and export of network evidence"""

from typing import Union, Optional
from pathlib import Path
import math
import re

import pandas as pd

from .errors import EvidenceError
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


PathLike = Union[str, Path]

TREATMENTS_FILE = "treatments.csv"
STUDIES_FILE = "studies.csv"
IPD_FILE = "ipd.csv"
AD_FILE = "ad.csv"
DIRECTIONS_FILE = "directions.csv"
COVARIATES_FILE = "covariates.csv"

_TRUE = {"true", "1", "yes", "y", "t"}
_FALSE = {"false", "0", "no", "n", "f"}


def _read_table(path: Optional[PathLike], required: list[str]) -> pd.DataFrame:
    """Read CSV as text columns, an absent or zero-byte file is an empty table"""
    if path is None:
        return pd.DataFrame(columns=required)
    path = Path(path)
    if not path.is_file():
        raise EvidenceError("file not found", file=str(path))
    if path.stat().st_size == 0:
        return pd.DataFrame(columns=required)
    df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    df.columns = [str(c).strip() for c in df.columns]
    for column in required:
        if column not in df.columns:
            raise EvidenceError(f"missing column '{column}'", file=str(path))
    return df


def _numbered_columns(df: pd.DataFrame, prefix: str, file: str) -> list[str]:
    """Columns prefix1..prefixN in index order"""
    pattern = re.compile(rf"^{prefix}(\d+)$")
    found = sorted(
        (int(m.group(1)), c) for c in df.columns if (m := pattern.match(c)) is not None
    )
    columns = [c for _, c in found]
    expected = [f"{prefix}{i}" for i in range(1, len(columns) + 1)]
    if columns != expected:
        raise EvidenceError(
            f"numbered columns must be {', '.join(expected)}, got {', '.join(columns)}",
            file=file,
        )
    return columns


def _as_int(value: str, what: str, file: str, row: int) -> int:
    try:
        number = float(value)
    except ValueError as e:
        raise EvidenceError(f"{what} '{value}' is not a number", file, row) from e
    if not math.isfinite(number) or number != int(number):
        raise EvidenceError(f"{what} '{value}' is not an integer", file, row)
    return int(number)


def _as_float(value: str, what: str, file: str, row: int, allow_nan: bool = False) -> float:
    if value.strip() == "" and allow_nan:
        return math.nan
    try:
        number = float(value)
    except ValueError as e:
        raise EvidenceError(f"{what} '{value}' is not a number", file, row) from e
    if math.isnan(number) and allow_nan:
        return number
    if not math.isfinite(number):
        raise EvidenceError(f"{what} must be finite", file, row)
    return number


def _as_bool(value: str, what: str, file: str, row: int) -> bool:
    text = value.strip().lower()
    if text in _TRUE:
        return True
    if text in _FALSE:
        return False
    raise EvidenceError(f"{what} '{value}' is not a boolean", file, row)


def _load_centers(path: Optional[PathLike], names: tuple[str, ...]) -> tuple[float, ...]:
    """Recorded centering of each covariate, zero without a covariates table"""
    df = _read_table(path, ["name", "center"])
    if df.shape[0] == 0:
        return tuple(0.0 for _ in names)
    file = str(path)
    centers: dict[str, float] = {}
    for i, rec in enumerate(df.to_dict("records"), start=1):
        name = rec["name"].strip()
        if name not in names:
            raise EvidenceError(f"unknown covariate '{name}'", file, i)
        if name in centers:
            raise EvidenceError(f"duplicate covariate '{name}'", file, i)
        centers[name] = _as_float(rec["center"], "center", file, i)
    missing = [n for n in names if n not in centers]
    if missing:
        raise EvidenceError(f"no center for {', '.join(missing)}", file=file)
    return tuple(centers[n] for n in names)


def _load_treatments(path: PathLike) -> list[Treatment]:
    df = _read_table(path, ["id", "label", "is_active"])
    file = str(path)
    treatments: list[Treatment] = []
    seen_ids: set[int] = set()
    seen_labels: set[str] = set()
    for i, rec in enumerate(df.to_dict("records"), start=1):
        tid = _as_int(rec["id"], "treatment id", file, i)
        label = rec["label"].strip()
        if not label:
            raise EvidenceError("empty treatment label", file, i)
        if tid in seen_ids:
            raise EvidenceError(f"duplicate treatment id {tid}", file, i)
        if label.lower() in seen_labels:
            raise EvidenceError(f"duplicate treatment label '{label}'", file, i)
        seen_ids.add(tid)
        seen_labels.add(label.lower())
        treatments.append(
            Treatment(id=tid, label=label, is_active=_as_bool(rec["is_active"], "is_active", file, i))
        )
    ids = sorted(seen_ids)
    if ids != list(range(1, len(ids) + 1)):
        raise EvidenceError(f"treatment ids must be dense 1..K, got {ids}", file)
    return sorted(treatments, key=lambda t: t.id)


def _resolve_reference(
    treatments: list[Treatment], reference: Union[int, str, None]
) -> int:
    """Explicit id or label, else "placebo", else lowest id"""
    if reference is not None:
        for t in treatments:
            if str(reference).strip().lower() in (str(t.id), t.label.lower()):
                return t.id
        raise EvidenceError(f"reference treatment '{reference}' is not a treatment")
    for t in treatments:
        if t.label.lower() == "placebo":
            return t.id
    return min(t.id for t in treatments)


def load_network(
    ipd_file: Optional[PathLike],
    ad_file: Optional[PathLike],
    study_file: PathLike,
    treatment_file: PathLike,
    directions_file: Optional[PathLike] = None,
    reference: Union[int, str, None] = None,
    covariates_file: Optional[PathLike] = None,
) -> EvidenceNetwork:
    """Load and link the CSV evidence tables into an EvidenceNetwork"""
    # pylint: disable=too-many-locals,too-many-branches,too-many-statements,too-many-arguments
    treatments = _load_treatments(treatment_file)
    treatment_ids = {t.id for t in treatments}

    studies_df = _read_table(study_file, ["id", "design", "format", "rob", "ref_arm"])
    ipd_df = _read_table(ipd_file, ["study", "treatment", "y"])
    ad_df = _read_table(ad_file, ["study", "treatment", "r", "n"])
    dir_df = _read_table(directions_file, ["study", "treatment_b", "treatment_k", "dir"])

    s_file, i_file, a_file = str(study_file), str(ipd_file), str(ad_file)
    x_cols = _numbered_columns(ipd_df, "x", i_file)
    xbar_cols = _numbered_columns(ad_df, "xbar", a_file)
    z_cols = _numbered_columns(studies_df, "z", s_file)
    has_ipd, has_ad = ipd_df.shape[0] > 0, ad_df.shape[0] > 0
    if has_ipd and has_ad and len(x_cols) != len(xbar_cols):
        raise EvidenceError(
            f"IPD has {len(x_cols)} covariates but AD has {len(xbar_cols)}", file=a_file
        )
    if has_ipd:
        n_cov = len(x_cols)
    elif has_ad:
        n_cov = len(xbar_cols)
    else:
        n_cov = max(len(x_cols), len(xbar_cols))
    x_cols, xbar_cols = x_cols[:n_cov], xbar_cols[:n_cov]

    meta: dict[str, dict] = {}
    for i, rec in enumerate(studies_df.to_dict("records"), start=1):
        sid = rec["id"].strip()
        if not sid:
            raise EvidenceError("empty study id", s_file, i)
        if sid in meta:
            raise EvidenceError(f"duplicate study id '{sid}'", s_file, i)
        try:
            design = Design(rec["design"].strip().upper())
            data_format = DataFormat(rec["format"].strip().upper())
        except ValueError as e:
            raise EvidenceError(f"bad design/format: {e}", s_file, i) from e
        rob: Union[RiskOfBias, None] = None
        if rec["rob"].strip():
            try:
                rob = RiskOfBias.parse(rec["rob"])
            except ValueError as e:
                raise EvidenceError(f"bad rob level '{rec['rob']}'", s_file, i) from e
        ref_arm = _as_int(rec["ref_arm"], "ref_arm", s_file, i)
        if ref_arm not in treatment_ids:
            raise EvidenceError(f"ref_arm {ref_arm} is not a treatment", s_file, i)
        bias_prior: Union[tuple[float, float], None] = None
        a1 = rec.get("bias_a1", "").strip()
        a2 = rec.get("bias_a2", "").strip()
        if a1 or a2:
            pa1 = _as_float(a1, "bias_a1", s_file, i)
            pa2 = _as_float(a2, "bias_a2", s_file, i)
            if pa1 <= 0 or pa2 <= 0:
                raise EvidenceError("bias prior parameters must be positive", s_file, i)
            bias_prior = (pa1, pa2)
        meta[sid] = {
            "row": i,
            "design": design,
            "data_format": data_format,
            "rob_level": rob,
            "reference_arm": ref_arm,
            "z": tuple(_as_float(rec[c], c, s_file, i) for c in z_cols),
            "bias_prior": bias_prior,
            "ipd": [],
            "ad": [],
            "dirs": {},
        }

    for i, rec in enumerate(ipd_df.to_dict("records"), start=1):
        sid = rec["study"].strip()
        if sid not in meta:
            raise EvidenceError(f"unknown study '{sid}'", i_file, i)
        if meta[sid]["data_format"] is not DataFormat.IPD:
            raise EvidenceError(f"study '{sid}' is not an IPD study", i_file, i)
        tid = _as_int(rec["treatment"], "treatment", i_file, i)
        if tid not in treatment_ids:
            raise EvidenceError(f"unknown treatment {tid}", i_file, i)
        y = _as_int(rec["y"], "y", i_file, i)
        if y not in (0, 1):
            raise EvidenceError(f"outcome y={y} is not binary", i_file, i)
        x = tuple(_as_float(rec[c], c, i_file, i) for c in x_cols)
        meta[sid]["ipd"].append(IpdRecord(study_id=sid, treatment_id=tid, y=y, x=x))

    for i, rec in enumerate(ad_df.to_dict("records"), start=1):
        sid = rec["study"].strip()
        if sid not in meta:
            raise EvidenceError(f"unknown study '{sid}'", a_file, i)
        if meta[sid]["data_format"] is not DataFormat.AD:
            raise EvidenceError(f"study '{sid}' is not an AD study", a_file, i)
        tid = _as_int(rec["treatment"], "treatment", a_file, i)
        if tid not in treatment_ids:
            raise EvidenceError(f"unknown treatment {tid}", a_file, i)
        if any(arm.treatment_id == tid for arm in meta[sid]["ad"]):
            raise EvidenceError(f"duplicate arm {tid} in study '{sid}'", a_file, i)
        r = _as_int(rec["r"], "r", a_file, i)
        n = _as_int(rec["n"], "n", a_file, i)
        if n < 1:
            raise EvidenceError(f"n={n} must be at least 1", a_file, i)
        if r < 0 or r > n:
            raise EvidenceError(f"r={r} outside 0..n={n}", a_file, i)
        xbar = tuple(_as_float(rec[c], c, a_file, i, allow_nan=True) for c in xbar_cols)
        meta[sid]["ad"].append(
            AdArm(study_id=sid, treatment_id=tid, r=r, n=n, mean_covariates=xbar)
        )

    d_file = str(directions_file)
    for i, rec in enumerate(dir_df.to_dict("records"), start=1):
        sid = rec["study"].strip()
        if sid not in meta:
            raise EvidenceError(f"unknown study '{sid}'", d_file, i)
        tb = _as_int(rec["treatment_b"], "treatment_b", d_file, i)
        tk = _as_int(rec["treatment_k"], "treatment_k", d_file, i)
        try:
            direction = Direction(rec["dir"].strip().lower())
        except ValueError as e:
            raise EvidenceError(f"bad direction '{rec['dir']}'", d_file, i) from e
        ref = meta[sid]["reference_arm"]
        if tb == ref:
            meta[sid]["dirs"][tk] = direction
        elif tk == ref:
            meta[sid]["dirs"][tb] = direction.flipped()
        else:
            raise EvidenceError(
                f"direction ({tb}, {tk}) does not involve the reference arm {ref}",
                d_file,
                i,
            )

    studies: list[Study] = []
    for sid, m in meta.items():
        if m["data_format"] is DataFormat.IPD:
            arms = sorted({rec.treatment_id for rec in m["ipd"]})
        else:
            arms = sorted(arm.treatment_id for arm in m["ad"])
        if arms and m["reference_arm"] not in arms:
            raise EvidenceError(
                f"ref_arm {m['reference_arm']} has no data in study '{sid}'",
                s_file,
                m["row"],
            )
        for k in m["dirs"]:
            if k not in arms:
                raise EvidenceError(
                    f"direction given for arm {k} absent from study '{sid}'", d_file
                )
        studies.append(
            Study(
                id=sid,
                design=m["design"],
                data_format=m["data_format"],
                reference_arm=m["reference_arm"],
                arms=tuple(arms),
                rob_level=m["rob_level"],
                ipd=tuple(m["ipd"]),
                ad=tuple(m["ad"]),
                bias_direction=dict(m["dirs"]),
                z=m["z"],
                bias_prior=m["bias_prior"],
            )
        )

    names = tuple(f"x{i}" for i in range(1, n_cov + 1))
    return EvidenceNetwork(
        treatments=tuple(treatments),
        studies=tuple(studies),
        reference_treatment=_resolve_reference(treatments, reference),
        covariate_names=names,
        covariate_centers=_load_centers(covariates_file, names),
    )


def load_network_dir(
    directory: PathLike, reference: Union[int, str, None] = None
) -> EvidenceNetwork:
    """Load the standard file names from one directory"""
    directory = Path(directory)
    optional = {
        name: (directory / name if (directory / name).is_file() else None)
        for name in (IPD_FILE, AD_FILE, DIRECTIONS_FILE, COVARIATES_FILE)
    }
    return load_network(
        optional[IPD_FILE],
        optional[AD_FILE],
        directory / STUDIES_FILE,
        directory / TREATMENTS_FILE,
        directions_file=optional[DIRECTIONS_FILE],
        reference=reference,
        covariates_file=optional[COVARIATES_FILE],
    )


def _fmt_bool(value: bool) -> str:
    return "true" if value else "false"


def export_network(net: EvidenceNetwork, directory: PathLike) -> dict[str, Path]:
    """Write the network as the CSV tables, returns written paths"""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    p = net.n_covariates
    n_z = max((len(s.z) for s in net.studies), default=0)

    treatments = pd.DataFrame(
        [
            {"id": t.id, "label": t.label, "is_active": _fmt_bool(t.is_active)}
            for t in sorted(net.treatments, key=lambda t: t.id)
        ],
        columns=["id", "label", "is_active"],
    )
    study_rows = []
    for s in net.studies:
        row: dict = {
            "id": s.id,
            "design": s.design.value,
            "format": s.data_format.value,
            "rob": s.rob_level.value if s.rob_level is not None else "",
            "ref_arm": s.reference_arm,
        }
        for i in range(n_z):
            row[f"z{i + 1}"] = repr(float(s.z[i])) if i < len(s.z) else ""
        row["bias_a1"] = repr(s.bias_prior[0]) if s.bias_prior else ""
        row["bias_a2"] = repr(s.bias_prior[1]) if s.bias_prior else ""
        study_rows.append(row)
    studies = pd.DataFrame(
        study_rows,
        columns=["id", "design", "format", "rob", "ref_arm"]
        + [f"z{i + 1}" for i in range(n_z)]
        + ["bias_a1", "bias_a2"],
    )
    ipd = pd.DataFrame(
        [
            {"study": r.study_id, "treatment": r.treatment_id, "y": r.y}
            | {f"x{i + 1}": repr(float(r.x[i])) for i in range(p)}
            for s in net.studies
            for r in s.ipd
        ],
        columns=["study", "treatment", "y"] + [f"x{i + 1}" for i in range(p)],
    )
    ad = pd.DataFrame(
        [
            {"study": a.study_id, "treatment": a.treatment_id, "r": a.r, "n": a.n}
            | {
                f"xbar{i + 1}": (
                    "" if math.isnan(a.mean_covariates[i]) else repr(float(a.mean_covariates[i]))
                )
                for i in range(p)
            }
            for s in net.studies
            for a in s.ad
        ],
        columns=["study", "treatment", "r", "n"] + [f"xbar{i + 1}" for i in range(p)],
    )
    directions = pd.DataFrame(
        [
            {
                "study": s.id,
                "treatment_b": s.reference_arm,
                "treatment_k": k,
                "dir": s.bias_direction[k].value,
            }
            for s in net.studies
            for k in sorted(s.bias_direction)
        ],
        columns=["study", "treatment_b", "treatment_k", "dir"],
    )

    covariates = pd.DataFrame(
        [
            {"name": f"x{i + 1}", "center": repr(float(center))}
            for i, center in enumerate(net.covariate_centers)
        ],
        columns=["name", "center"],
    )

    written: dict[str, Path] = {}
    for name, df in (
        (TREATMENTS_FILE, treatments),
        (STUDIES_FILE, studies),
        (IPD_FILE, ipd),
        (AD_FILE, ad),
        (DIRECTIONS_FILE, directions),
        (COVARIATES_FILE, covariates),
    ):
        path = directory / name
        df.to_csv(path, index=False, lineterminator="\n", encoding="utf-8")
        written[name] = path
    return written
