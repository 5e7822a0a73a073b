#!/usr/bin/env python3
"""
wavelab Artifacts - reproducible JSON/CSV outputs

Every file written here carries the run manifest (resolved config, a-priori
constant, version). Floats are written with 17 significant digits and no
timestamps are recorded, so identical configs give byte-identical files.
"""

import json
import logging
import math
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import polars as pl
from pydantic import BaseModel

logger = logging.getLogger(__name__)

VERSION = "0.1.0"
FLOAT_FORMAT = ".17g"


class Manifest(BaseModel):
    """What produced an artifact"""
    command: str
    version: str = VERSION
    apriori_C: float = 1.0
    config: Dict[str, Any] = {}


def format_float(value: float) -> str:
    return format(value, FLOAT_FORMAT)


def jsonable(value: Any) -> Any:
    """Plain JSON types; non-finite floats become the strings inf, -inf, nan"""
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isfinite(value):
            return value
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    return value


class ArtifactStore:
    """Append-only writer for the files of one command run"""

    def __init__(self, directory: str, manifest: Manifest):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.manifest = manifest
        self.written: List[Path] = []

    def _path(self, name: str) -> Path:
        path = self.directory / name
        if path in self.written:
            raise FileExistsError(f"{name} was already written in this run")
        return path

    def write_json(self, name: str, payload: Any) -> Path:
        path = self._path(name)
        doc = {"manifest": jsonable(self.manifest.model_dump()), "result": jsonable(payload)}
        # json writes floats with repr, which round-trips exactly
        path.write_text(json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n")
        self.written.append(path)
        logger.info(f"✅ wrote {path}")
        return path

    def write_csv(self, name: str, frame: pl.DataFrame) -> Path:
        path = self._path(name)
        header = json.dumps(jsonable(self.manifest.model_dump()), sort_keys=True, allow_nan=False)
        floats = [c for c, dtype in frame.schema.items() if dtype in (pl.Float32, pl.Float64)]
        text_frame = frame.with_columns([
            pl.col(c).map_elements(format_float, return_dtype=pl.Utf8) for c in floats
        ]) if floats and frame.height else frame
        path.write_text(f"# manifest {header}\n" + text_frame.write_csv())
        self.written.append(path)
        logger.info(f"✅ wrote {path} ({frame.height} rows)")
        return path


def read_json(path: str) -> Dict:
    return json.loads(Path(path).read_text())


def read_csv(path: str) -> pl.DataFrame:
    return pl.read_csv(path, comment_prefix="#")


def read_manifest(path: str) -> Optional[Dict]:
    """Manifest of a JSON or CSV artifact"""
    path = Path(path)
    if path.suffix == ".json":
        return read_json(str(path)).get("manifest")
    with open(path) as f:
        first = f.readline()
    if first.startswith("# manifest "):
        return json.loads(first[len("# manifest "):])
    return None
