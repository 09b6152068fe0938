"""Writers for experiment artifacts and kernel matrix CSV import/export.

All artifacts for a run land in one output directory:
- JSON documents (effective config, metrics, cleaning report) via pydantic.
- Tables (predictions, confusion matrices, curve, timing) via pandas.
- Kernel matrices as full row-major CSV with 17 significant digits and a
  leading `#` line carrying kind and provenance.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, Iterable, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel

from ..core.errors import DataIOError, SchemaError
from ..services.metrics import ConfusionMatrix, to_percent
from ..services.quantum_kernel import KernelKind, KernelMatrix

FLOAT_FORMAT = "%.17g"


def _target(out_dir, name: str) -> Path:
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise DataIOError(f"Could not create output directory {out}: {e}") from e
    return out / name


def write_json(out_dir, name: str, payload: Union[BaseModel, Dict[str, Any]]) -> Path:
    path = _target(out_dir, name)
    if isinstance(payload, BaseModel):
        text = payload.model_dump_json(indent=2)
    else:
        # NaN is not valid JSON; emit null like the pydantic models do
        text = json.dumps(_nan_to_none(payload), indent=2, sort_keys=False)
    try:
        path.write_text(text + "\n", encoding="utf-8")
    except OSError as e:
        raise DataIOError(f"Could not write {path}: {e}") from e
    return path


def _nan_to_none(value: Any) -> Any:
    if isinstance(value, BaseModel):
        return json.loads(value.model_dump_json())
    if isinstance(value, dict):
        return {str(k): _nan_to_none(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_nan_to_none(v) for v in value]
    if isinstance(value, (float, np.floating)):
        return None if np.isnan(value) else float(value)
    if isinstance(value, np.integer):
        return int(value)
    return value


def write_frame(out_dir, name: str, frame: pd.DataFrame, index: bool = False) -> Path:
    path = _target(out_dir, name)
    try:
        frame.to_csv(path, index=index, lineterminator="\n")
    except OSError as e:
        raise DataIOError(f"Could not write {path}: {e}") from e
    return path


def write_rows(out_dir, name: str, rows: Iterable[BaseModel]) -> Path:
    return write_frame(out_dir, name, pd.DataFrame([r.model_dump() for r in rows]))


def write_confusion(out_dir, cm: ConfusionMatrix, prefix: str = "") -> Dict[str, Path]:
    """Counts and row-percent CSVs named `<prefix>confusion_counts.csv` / `..._percent.csv`."""
    percent, _ = to_percent(cm)
    return {
        "counts": write_frame(out_dir, f"{prefix}confusion_counts.csv", cm.to_frame(), index=True),
        "percent": write_frame(out_dir, f"{prefix}confusion_percent.csv", cm.to_frame(percent), index=True),
    }


def save_kernel_csv(matrix: KernelMatrix, path) -> Path:
    path = Path(path)
    header = json.dumps({"kind": matrix.kind.value, "provenance": matrix.provenance}, sort_keys=True)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        np.savetxt(path, matrix.entries, fmt=FLOAT_FORMAT, delimiter=",", header=header, comments="# ")
    except OSError as e:
        raise DataIOError(f"Could not write kernel matrix {path}: {e}") from e
    return path


def load_kernel_csv(path) -> KernelMatrix:
    path = Path(path)
    if not path.exists():
        raise DataIOError(f"Kernel matrix file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        first = f.readline()
    meta: Dict[str, Any] = {}
    if first.startswith("#"):
        try:
            meta = json.loads(first.lstrip("#").strip())
        except json.JSONDecodeError as e:
            raise SchemaError(f"Unreadable kernel header in {path}: {e}") from e
    try:
        entries = np.loadtxt(path, delimiter=",", comments="#", ndmin=2, dtype=np.float64)
    except ValueError as e:
        raise SchemaError(f"Malformed kernel matrix {path}: {e}") from e
    if entries.shape[0] != entries.shape[1] or entries.size == 0:
        raise SchemaError(f"Kernel matrix in {path} is not square: shape {entries.shape}")
    try:
        kind = KernelKind(meta.get("kind", KernelKind.QUANTUM_FIDELITY.value))
    except ValueError as e:
        raise SchemaError(f"Unknown kernel kind in {path}: {meta.get('kind')}") from e
    return KernelMatrix(entries=entries, kind=kind, provenance=meta.get("provenance", {}))
