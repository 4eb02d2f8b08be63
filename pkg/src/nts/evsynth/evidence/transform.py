"""Derived networks: centering, aggregation, re-rooting, stratification"""

from typing import Union, Optional, Sequence
from dataclasses import replace

import numpy as np

from .errors import EvidenceError
from .types import EvidenceNetwork, Study, AdArm, Design, DataFormat


def center_covariates(net: EvidenceNetwork, centers: Sequence[float]) -> EvidenceNetwork:
    """Subtract centers from every covariate, the total shift is recorded on the network"""
    centers = tuple(float(c) for c in centers)
    if len(centers) != net.n_covariates:
        raise EvidenceError(
            f"{len(centers)} centering values for {net.n_covariates} covariates"
        )
    if not any(centers):
        return net

    def shift(values: tuple[float, ...]) -> tuple[float, ...]:
        return tuple(v - c for v, c in zip(values, centers))

    studies = tuple(
        replace(
            s,
            ipd=tuple(replace(rec, x=shift(rec.x)) for rec in s.ipd),
            ad=tuple(replace(arm, mean_covariates=shift(arm.mean_covariates)) for arm in s.ad),
        )
        for s in net.studies
    )
    recorded = tuple(a + c for a, c in zip(net.covariate_centers, centers))
    return replace(net, studies=studies, covariate_centers=recorded)


def aggregate_ipd(study: Study) -> list[AdArm]:
    """Collapse participant rows into arm-level event counts and covariate means"""
    if study.data_format is not DataFormat.IPD:
        raise EvidenceError(f"study '{study.id}' is not an IPD study")
    arms: list[AdArm] = []
    for k in study.arms:
        rows = study.arm_records(k)
        if not rows:
            continue
        y = np.asarray([rec.y for rec in rows], dtype=int)
        x = np.asarray([rec.x for rec in rows], dtype=float)
        xbar = tuple(float(v) for v in x.mean(axis=0)) if x.shape[1] else ()
        arms.append(
            AdArm(
                study_id=study.id,
                treatment_id=k,
                r=int(y.sum()),
                n=int(y.size),
                mean_covariates=xbar,
            )
        )
    return arms


def as_aggregate_study(study: Study) -> Study:
    """AD version of an IPD study"""
    return replace(
        study, data_format=DataFormat.AD, ipd=(), ad=tuple(aggregate_ipd(study))
    )


def reroot_network(net: EvidenceNetwork, reference: Union[int, str]) -> EvidenceNetwork:
    """Change the network reference treatment by id or label"""
    try:
        treatment = net.treatment(int(reference))
    except (KeyError, ValueError):
        try:
            treatment = net.treatment_by_label(str(reference))
        except KeyError as e:
            raise EvidenceError(f"unknown reference treatment '{reference}'") from e
    return replace(net, reference_treatment=treatment.id)


def select_studies(
    net: EvidenceNetwork,
    design: Optional[Design] = None,
    data_format: Optional[DataFormat] = None,
    ids: Optional[Sequence[str]] = None,
) -> EvidenceNetwork:
    """Sub-network of the matching studies, the treatment list is kept whole"""
    keep = []
    for s in net.studies:
        if design is not None and s.design is not design:
            continue
        if data_format is not None and s.data_format is not data_format:
            continue
        if ids is not None and s.id not in ids:
            continue
        keep.append(s)
    return replace(net, studies=tuple(keep))
