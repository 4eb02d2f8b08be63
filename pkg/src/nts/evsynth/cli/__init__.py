"""Command line frontend"""

from .manifest import RunManifest, ParameterDiagnostics, sha256_file, output_digests
from .main import main, build_parser
