"""Typed cross-design, cross-format network evidence"""

from typing import Union
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import EvidenceError


class Design(Enum):
    """Study design"""

    RCT = "RCT"
    NRS = "NRS"


class DataFormat(Enum):
    """Format in which study data is available"""

    IPD = "IPD"
    AD = "AD"


class RiskOfBias(Enum):
    """Study-level risk of bias judgement"""

    LOW = "low"
    HIGH = "high"
    UNCLEAR = "unclear"

    @classmethod
    def parse(cls, value: str) -> "RiskOfBias":
        """Parse RoB level, "moderate" is read as high"""
        text = str(value).strip().lower()
        if text == "moderate":
            return cls.HIGH
        return cls(text)


class Direction(Enum):
    """Direction of bias in a comparison of study reference b with arm k"""

    FAVOURS_B = "0"
    FAVOURS_K = "1"
    UNKNOWN = "unknown"

    @property
    def value_int(self) -> Union[int, None]:
        """Numeric dir value, None when unknown"""
        if self is Direction.UNKNOWN:
            return None
        return int(self.value)

    def flipped(self) -> "Direction":
        """Direction seen from the other end of the comparison"""
        if self is Direction.FAVOURS_B:
            return Direction.FAVOURS_K
        if self is Direction.FAVOURS_K:
            return Direction.FAVOURS_B
        return self


@dataclass(frozen=True)
class Treatment:
    """Treatment node of the network"""

    id: int
    label: str
    is_active: bool = True


@dataclass(frozen=True)
class IpdRecord:
    """Single participant row"""

    study_id: str
    treatment_id: int
    y: int
    x: tuple[float, ...] = ()


@dataclass(frozen=True)
class AdArm:
    """Arm-level summary of an aggregate data study"""

    study_id: str
    treatment_id: int
    r: int
    n: int
    mean_covariates: tuple[float, ...] = ()


@dataclass(frozen=True)
class Study:
    """Study with its arms, data and design/RoB metadata"""

    # pylint: disable=too-many-instance-attributes

    id: str
    design: Design
    data_format: DataFormat
    reference_arm: int
    arms: tuple[int, ...]
    rob_level: Union[RiskOfBias, None] = None
    ipd: tuple[IpdRecord, ...] = ()
    ad: tuple[AdArm, ...] = ()
    bias_direction: dict[int, Direction] = field(default_factory=dict)
    z: tuple[float, ...] = ()
    bias_prior: Union[tuple[float, float], None] = None

    @property
    def is_ipd(self) -> bool:
        """True for individual participant data studies"""
        return self.data_format is DataFormat.IPD

    @property
    def non_reference_arms(self) -> tuple[int, ...]:
        """Arms other than the study reference, in ascending id order"""
        return tuple(sorted(k for k in self.arms if k != self.reference_arm))

    def direction(self, k: int) -> Direction:
        """Direction of bias for the contrast b -> k"""
        return self.bias_direction.get(k, Direction.UNKNOWN)

    def arm_records(self, k: int) -> tuple[IpdRecord, ...]:
        """IPD rows of arm k"""
        return tuple(rec for rec in self.ipd if rec.treatment_id == k)

    def ad_arm(self, k: int) -> AdArm:
        """Aggregate summary of arm k"""
        for arm in self.ad:
            if arm.treatment_id == k:
                return arm
        raise KeyError(f"Study {self.id} has no aggregate arm {k}")

    def mean_covariates(self) -> np.ndarray:
        """Study mean covariate vector x̄_j"""
        if self.is_ipd:
            if not self.ipd:
                return np.zeros(0)
            return np.asarray([rec.x for rec in self.ipd], dtype=float).mean(axis=0)
        if not self.ad:
            return np.zeros(0)
        xbar = np.asarray([arm.mean_covariates for arm in self.ad], dtype=float)
        n = np.asarray([arm.n for arm in self.ad], dtype=float)
        if xbar.shape[1] == 0:
            return np.zeros(0)
        return (xbar * n[:, None]).sum(axis=0) / n.sum()

    def sample_size(self) -> int:
        """Total number of participants"""
        if self.is_ipd:
            return len(self.ipd)
        return int(sum(arm.n for arm in self.ad))


@dataclass(frozen=True)
class EvidenceNetwork:
    """Treatments, studies and the network reference treatment"""

    treatments: tuple[Treatment, ...]
    studies: tuple[Study, ...]
    reference_treatment: int
    covariate_names: tuple[str, ...] = ()
    covariate_centers: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        ids = sorted(t.id for t in self.treatments)
        if ids != list(range(1, len(ids) + 1)):
            raise EvidenceError(f"Treatment ids must be dense 1..K, got {ids}")
        labels = [t.label for t in self.treatments]
        if len(set(labels)) != len(labels):
            raise EvidenceError("Treatment labels must be unique")
        if self.reference_treatment not in ids:
            raise EvidenceError(
                f"Reference treatment {self.reference_treatment} is not a treatment"
            )
        study_ids = [s.id for s in self.studies]
        if len(set(study_ids)) != len(study_ids):
            raise EvidenceError("Study ids must be unique")
        if not self.covariate_centers:
            object.__setattr__(
                self, "covariate_centers", tuple(0.0 for _ in self.covariate_names)
            )

    @property
    def treatment_ids(self) -> tuple[int, ...]:
        """Treatment ids in ascending order"""
        return tuple(sorted(t.id for t in self.treatments))

    @property
    def n_covariates(self) -> int:
        """Covariate dimension"""
        return len(self.covariate_names)

    def treatment(self, treatment_id: int) -> Treatment:
        """Treatment by id"""
        for t in self.treatments:
            if t.id == treatment_id:
                return t
        raise KeyError(f"Unknown treatment {treatment_id}")

    def treatment_by_label(self, label: str) -> Treatment:
        """Treatment by label, case-insensitive"""
        for t in self.treatments:
            if t.label.lower() == str(label).strip().lower():
                return t
        raise KeyError(f"Unknown treatment label {label}")

    def label(self, treatment_id: int) -> str:
        """Treatment label"""
        return self.treatment(treatment_id).label

    def study(self, study_id: str) -> Study:
        """Study by id"""
        for s in self.studies:
            if s.id == study_id:
                return s
        raise KeyError(f"Unknown study {study_id}")

    def covariate_index(self, name: str) -> int:
        """Position of the covariate column"""
        try:
            return self.covariate_names.index(name)
        except ValueError as e:
            raise KeyError(f"Unknown covariate {name}") from e

    def observed_treatments(self) -> tuple[int, ...]:
        """Treatments that appear in at least one study"""
        return tuple(sorted({k for s in self.studies for k in s.arms}))
