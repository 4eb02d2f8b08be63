"""Structural validation of an evidence network"""

from itertools import combinations

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from pydantic import BaseModel

from .errors import EvidenceError, DisconnectedNetworkError
from .types import EvidenceNetwork, DataFormat


class ValidationReport(BaseModel):
    """Summary of a validated network"""

    connected: bool
    n_treatments: int
    n_studies: int
    observed_treatments: list[str]
    comparisons: dict[str, int]
    arm_counts: dict[str, int]
    covariate_availability: dict[str, bool]
    rob_distribution: dict[str, int]
    design_format: dict[str, int]
    warnings: list[str] = []


def treatment_components(
    net: EvidenceNetwork, require_all_treatments: bool = True
) -> list[list[int]]:
    """Connected components of the co-occurrence graph, as sorted treatment id lists"""
    nodes = list(net.treatment_ids) if require_all_treatments else list(net.observed_treatments())
    if not nodes:
        return []
    index = {k: i for i, k in enumerate(nodes)}
    rows, cols = [], []
    for study in net.studies:
        for a, b in combinations(study.arms, 2):
            rows.append(index[a])
            cols.append(index[b])
    adjacency = csr_matrix(
        (np.ones(len(rows)), (rows, cols)), shape=(len(nodes), len(nodes))
    )
    _, labels = connected_components(adjacency, directed=False)
    components: dict[int, list[int]] = {}
    for k, lab in zip(nodes, labels):
        components.setdefault(int(lab), []).append(k)
    return sorted((sorted(c) for c in components.values()), key=lambda c: c[0])


def validate_network(
    net: EvidenceNetwork, require_all_treatments: bool = True
) -> ValidationReport:
    """Check study structure and connectivity, return the network summary"""
    warnings: list[str] = []
    for study in net.studies:
        if len(set(study.arms)) < 2:
            raise EvidenceError(
                f"study '{study.id}' has {len(set(study.arms))} arm(s), at least 2 required"
            )
        if study.reference_arm not in study.arms:
            raise EvidenceError(
                f"study '{study.id}' reference arm {study.reference_arm} is not one of its arms"
            )
        if study.data_format is DataFormat.IPD:
            if study.ad:
                raise EvidenceError(f"IPD study '{study.id}' carries aggregate arms")
            for k in study.arms:
                if not study.arm_records(k):
                    raise EvidenceError(f"IPD study '{study.id}' has no rows for arm {k}")
        else:
            if study.ipd:
                raise EvidenceError(f"AD study '{study.id}' carries participant rows")
            ad_ids = sorted(a.treatment_id for a in study.ad)
            if ad_ids != sorted(study.arms):
                raise EvidenceError(
                    f"AD study '{study.id}' must have exactly one summary per arm"
                )
        if study.rob_level is None:
            warnings.append(f"study '{study.id}' has no risk of bias level")

    components = treatment_components(net, require_all_treatments)
    if len(components) > 1:
        raise DisconnectedNetworkError(
            [[net.label(k) for k in c] for c in components]
        )
    if not require_all_treatments and net.studies:
        if net.reference_treatment not in net.observed_treatments():
            warnings.append(
                f"reference treatment {net.label(net.reference_treatment)} is not observed"
            )

    comparisons: dict[str, int] = {}
    for study in net.studies:
        for a, b in combinations(sorted(study.arms), 2):
            key = f"{net.label(a)}-{net.label(b)}"
            comparisons[key] = comparisons.get(key, 0) + 1

    covariates: dict[str, bool] = {}
    for study in net.studies:
        if net.n_covariates == 0:
            covariates[study.id] = False
        elif study.is_ipd:
            covariates[study.id] = True
        else:
            xbar = study.mean_covariates()
            covariates[study.id] = bool(xbar.size) and bool(np.all(np.isfinite(xbar)))

    rob: dict[str, int] = {}
    design_format: dict[str, int] = {}
    for study in net.studies:
        level = study.rob_level.value if study.rob_level is not None else "missing"
        rob[level] = rob.get(level, 0) + 1
        key = f"{study.data_format.value}-{study.design.value}"
        design_format[key] = design_format.get(key, 0) + 1

    return ValidationReport(
        connected=True,
        n_treatments=len(net.treatments),
        n_studies=len(net.studies),
        observed_treatments=[net.label(k) for k in net.observed_treatments()],
        comparisons=comparisons,
        arm_counts={s.id: len(s.arms) for s in net.studies},
        covariate_availability=covariates,
        rob_distribution=rob,
        design_format=design_format,
        warnings=warnings,
    )
