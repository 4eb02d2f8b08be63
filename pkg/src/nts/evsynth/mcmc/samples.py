"""Posterior draws with sampler provenance"""

from typing import Union, Optional
from dataclasses import dataclass, field
from pathlib import Path
import json

import numpy as np
import pandas as pd

from .settings import SamplerSettings


@dataclass
class PosteriorSamples:
    """Retained draws, shape (chains, draws, parameters)"""

    # pylint: disable=too-many-instance-attributes

    draws: np.ndarray
    names: list[str]
    n_continuous: int
    iterations: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    acceptance: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    step_sizes_frozen: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    step_sizes_final: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    settings: Optional[SamplerSettings] = None

    def __post_init__(self) -> None:
        if self.draws.ndim != 3 or self.draws.shape[2] != len(self.names):
            raise ValueError("draws must have shape (chains, draws, parameters)")
        if self.iterations.size == 0:
            self.iterations = np.arange(1, self.draws.shape[1] + 1)

    @property
    def n_chains(self) -> int:
        """Number of chains"""
        return int(self.draws.shape[0])

    @property
    def n_draws(self) -> int:
        """Retained draws per chain"""
        return int(self.draws.shape[1])

    @property
    def seed(self) -> Optional[int]:
        """Master seed"""
        return self.settings.seed if self.settings is not None else None

    def index(self, name: str) -> int:
        """Column of a parameter"""
        try:
            return self.names.index(name)
        except ValueError as e:
            raise KeyError(f"no draws for parameter {name}") from e

    def __contains__(self, name: object) -> bool:
        return name in self.names

    def chains(self, name: str) -> np.ndarray:
        """(chains, draws) array of one parameter"""
        return self.draws[:, :, self.index(name)]

    def pooled(self, name: str) -> np.ndarray:
        """All chains concatenated"""
        return self.chains(name).reshape(-1)

    def select(self, names: list[str]) -> "PosteriorSamples":
        """Draws of a subset of parameters, ledger dropped"""
        idx = [self.index(n) for n in names]
        return PosteriorSamples(
            draws=self.draws[:, :, idx].copy(),
            names=list(names),
            n_continuous=sum(1 for i in idx if i < self.n_continuous),
            iterations=self.iterations.copy(),
            settings=self.settings,
        )

    def to_frame(self) -> pd.DataFrame:
        """Long table with chain and iteration columns"""
        frames = []
        for c in range(self.n_chains):
            df = pd.DataFrame(self.draws[c], columns=self.names)
            for i, name in enumerate(self.names[self.n_continuous :]):
                df[name] = self.draws[c, :, self.n_continuous + i].astype(int)
            df.insert(0, "iteration", self.iterations)
            df.insert(0, "chain", c + 1)
            frames.append(df)
        return pd.concat(frames, ignore_index=True)

    def to_csv(self, path: Union[str, Path]) -> Path:
        """Write draws as chain, iteration, parameter columns"""
        path = Path(path)
        self.to_frame().to_csv(path, index=False, lineterminator="\n")
        return path

    @classmethod
    def from_csv(
        cls, path: Union[str, Path], n_continuous: Optional[int] = None
    ) -> "PosteriorSamples":
        """Read draws written by to_csv"""
        df = pd.read_csv(path)
        if "chain" not in df.columns or "iteration" not in df.columns:
            raise ValueError(f"{path}: chain and iteration columns are required")
        names = [c for c in df.columns if c not in ("chain", "iteration")]
        chain_ids = sorted(df["chain"].unique())
        blocks = [df[df["chain"] == c] for c in chain_ids]
        lengths = {len(b) for b in blocks}
        if len(lengths) != 1:
            raise ValueError(f"{path}: chains have different lengths")
        draws = np.stack([b[names].to_numpy(dtype=float) for b in blocks])
        if n_continuous is None:
            discrete = [n for n in names if n.startswith(("R[", "dir["))]
            n_continuous = len(names) - len(discrete)
        return cls(
            draws=draws,
            names=names,
            n_continuous=n_continuous,
            iterations=blocks[0]["iteration"].to_numpy(dtype=int),
        )

    def ledger(self) -> dict:
        """Acceptance rates and step sizes per chain and continuous parameter"""
        names = self.names[: self.n_continuous]
        return {
            "parameters": names,
            "acceptance": self.acceptance.tolist(),
            "step_sizes_frozen": self.step_sizes_frozen.tolist(),
            "step_sizes_final": self.step_sizes_final.tolist(),
            "settings": (
                self.settings.model_dump(exclude={"n_threads"}) if self.settings is not None else None
            ),
        }

    def write_ledger(self, path: Union[str, Path]) -> Path:
        """Ledger as a JSON document"""
        path = Path(path)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.ledger(), f, indent=2, sort_keys=True)
            f.write("\n")
        return path


def concatenate_chains(parts: list[PosteriorSamples]) -> PosteriorSamples:
    """Stack single-chain results in order"""
    first = parts[0]
    return PosteriorSamples(
        draws=np.concatenate([p.draws for p in parts], axis=0),
        names=list(first.names),
        n_continuous=first.n_continuous,
        iterations=first.iterations.copy(),
        acceptance=np.concatenate([p.acceptance for p in parts], axis=0),
        step_sizes_frozen=np.concatenate([p.step_sizes_frozen for p in parts], axis=0),
        step_sizes_final=np.concatenate([p.step_sizes_final for p in parts], axis=0),
        settings=first.settings,
    )
