import json
from pathlib import Path
from typing import Optional

import yaml
from pydantic import ValidationError

from ..errors import DataError
from ..models.config_models import RunConfig
from ..models.dataset_models import DatasetManifest


def read_run_config(yaml_path: Optional[str] = None) -> RunConfig:
    """Load and validate a run config; no path means all defaults."""
    if yaml_path is None:
        return RunConfig()
    path = Path(yaml_path)
    if not path.exists():
        raise DataError(f"Config file not found: {yaml_path}")
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw_data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise DataError(f"Error parsing YAML file {yaml_path}: {e}") from e
    if raw_data is None:
        raw_data = {}
    if not isinstance(raw_data, dict):
        raise DataError(f"Config file {yaml_path} must hold a mapping at the top level")
    try:
        return RunConfig(**raw_data)
    except ValidationError as e:
        raise DataError(f"Invalid config {yaml_path}:\n{e}") from e


def write_run_config(config: RunConfig, yaml_path: str) -> Path:
    path = Path(yaml_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(yaml.safe_dump(config.model_dump(mode="json"), sort_keys=False), encoding="utf-8")
    return path


def read_manifest(manifest_path: str) -> DatasetManifest:
    path = Path(manifest_path)
    if not path.exists():
        raise DataError(f"Manifest not found: {manifest_path}")
    try:
        raw_data = json.loads(path.read_text(encoding="utf-8"))
        return DatasetManifest(**raw_data)
    except json.JSONDecodeError as e:
        raise DataError(f"Manifest {manifest_path} is not valid JSON: {e}") from e
    except ValidationError as e:
        raise DataError(f"Invalid manifest {manifest_path}:\n{e}") from e
