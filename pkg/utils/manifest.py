import logging
import time
from contextlib import contextmanager
from typing import Any, Dict, List

from pydantic import BaseModel, Field, ValidationError

from utils.config import CONGRUENCE_CEILING, TREND_CEILING
from utils.errors import SetFileError

logger = logging.getLogger(__name__)

CODE_VERSION = "1.0.0"
MANIFEST_SUFFIX = ".manifest.json"


class RunManifest(BaseModel):
    """Everything needed to rerun a command and get the same output file."""

    command: List[str] = Field(..., description="argv of the run, without the program name")
    params: Dict[str, Any] = Field(default_factory=dict, description="resolved parameters")
    code_version: str = Field(default=CODE_VERSION)
    counts: Dict[str, int] = Field(default_factory=dict, description="elements, bad tuples, removed, ...")
    removed: List[int] = Field(default_factory=list, description="primes whose elements were pruned")
    timings: Dict[str, float] = Field(default_factory=dict, description="seconds per stage")
    ceilings: Dict[str, int] = Field(
        default_factory=lambda: {"congruence": CONGRUENCE_CEILING, "trend": TREND_CEILING},
        description="test constants used for the bounds with unspecified constants",
    )

    @contextmanager
    def timed(self, stage):
        start = time.perf_counter()
        try:
            yield
        finally:
            self.timings[stage] = round(time.perf_counter() - start, 6)


def manifest_path(out_path):
    return f"{out_path}{MANIFEST_SUFFIX}"


def write_manifest(out_path, manifest):
    """
    Write the manifest beside an output file.

    Args:
        out_path (str): the output file the manifest describes
        manifest (RunManifest): the manifest

    Returns:
        str: the manifest path
    """
    path = manifest_path(out_path)
    with open(path, "w", encoding="utf-8") as f:
        f.write(manifest.model_dump_json(indent=2) + "\n")
    return path


def read_manifest(path):
    try:
        with open(path, encoding="utf-8") as f:
            return RunManifest.model_validate_json(f.read())
    except (OSError, ValidationError) as e:
        raise SetFileError(f"Cannot load manifest {path}: {e}")
