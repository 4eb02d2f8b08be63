"""Run manifests: what went in, what came out, enough to replay"""

from typing import Any, Optional, Union, Iterable
from pathlib import Path
import hashlib
import math

from pydantic import BaseModel

from .. import __version__
from ..reporting.summary import ParameterSummary

MANIFEST_FILE = "manifest.json"
NETWORK_DIR = "network"
SCHEMA_VERSION = 1


def sha256_file(path: Union[str, Path]) -> str:
    """Hex digest of a file, read in 1 MiB chunks"""
    h = hashlib.sha256()
    with Path(path).open("rb") as handle:
        while True:
            chunk = handle.read(1024 * 1024)
            if not chunk:
                break
            h.update(chunk)
    return h.hexdigest()


def digest_files(directory: Union[str, Path], names: Iterable[str]) -> dict[str, str]:
    """Digests of the named files of directory that exist, keyed by relative name"""
    directory = Path(directory)
    return {
        name: sha256_file(directory / name)
        for name in sorted(names)
        if (directory / name).is_file()
    }


def output_digests(directory: Union[str, Path]) -> dict[str, str]:
    """Digests of every output file except the manifest and the copied network"""
    directory = Path(directory)
    names = [
        p.name
        for p in directory.iterdir()
        if p.is_file() and p.name != MANIFEST_FILE
    ]
    return digest_files(directory, names)


class ParameterDiagnostics(BaseModel):
    """Convergence diagnostics of one parameter, None when not computable"""

    name: str
    rhat: Optional[float] = None
    ess: Optional[float] = None

    @classmethod
    def from_summary(cls, summary: ParameterSummary) -> "ParameterDiagnostics":
        """Diagnostics of a summary with NaN stored as None"""
        return cls(
            name=summary.name,
            rhat=None if math.isnan(summary.rhat) else summary.rhat,
            ess=None if math.isnan(summary.ess) else summary.ess,
        )


class RunManifest(BaseModel):
    """Record of one fit or simulate run"""

    # pylint: disable=too-many-instance-attributes

    schema_version: int = SCHEMA_VERSION
    command: str
    version: str = __version__
    started_at: str
    wall_clock_seconds: float
    seed: int
    inputs: dict[str, str] = {}
    config: Optional[dict[str, Any]] = None
    sampler: Optional[dict[str, Any]] = None
    options: dict[str, Any] = {}
    fit_reference: Optional[int] = None
    n_continuous: Optional[int] = None
    diagnostics: list[ParameterDiagnostics] = []
    outputs: dict[str, str] = {}

    def write(self, directory: Union[str, Path]) -> Path:
        """manifest.json in directory"""
        path = Path(directory) / MANIFEST_FILE
        path.write_text(self.model_dump_json(indent=2) + "\n", encoding="utf-8")
        return path

    @classmethod
    def read(cls, directory: Union[str, Path]) -> "RunManifest":
        """Manifest of an output directory"""
        path = Path(directory) / MANIFEST_FILE
        return cls.model_validate_json(path.read_text(encoding="utf-8"))

    def mismatches(self, outputs: dict[str, str]) -> list[str]:
        """Output names whose digest differs from or is missing in outputs"""
        names = sorted(set(self.outputs) | set(outputs))
        return [n for n in names if self.outputs.get(n) != outputs.get(n)]
