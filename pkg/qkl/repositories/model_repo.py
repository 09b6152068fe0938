"""File repository for trained model documents.

A model is a single JSON file validated by `ModelDocument`. The training-set
fingerprint (SHA-256 over the scaled training vectors and labels) is written on
save and re-checked on load so a tampered or truncated document is rejected.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Sequence

import numpy as np
from pydantic import ValidationError

from ..core.errors import DataIOError, SchemaError
from ..core.logging import logger
from ..schemas.model import ModelDocument


def fingerprint(X, labels: Sequence) -> str:
    """SHA-256 of the float64 training matrix (shape + bytes) and its labels."""
    A = np.ascontiguousarray(np.asarray(X, dtype=np.float64))
    h = hashlib.sha256()
    h.update(repr(A.shape).encode("utf-8"))
    h.update(A.tobytes())
    h.update("\x1f".join(str(v) for v in labels).encode("utf-8"))
    return h.hexdigest()


def save_model(doc: ModelDocument, path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(doc.model_dump_json(indent=2), encoding="utf-8")
    except OSError as e:
        raise DataIOError(f"Could not write model file {path}: {e}") from e
    logger.info(f"Saved {doc.task} model ({len(doc.models)} SVM(s)) to {path}")
    return path


def load_model(path) -> ModelDocument:
    path = Path(path)
    if not path.exists():
        raise DataIOError(f"Model file not found: {path}")
    try:
        doc = ModelDocument.model_validate(json.loads(path.read_text(encoding="utf-8")))
    except (json.JSONDecodeError, ValidationError) as e:
        raise SchemaError(f"Malformed model document {path}: {e}") from e

    if fingerprint(doc.train_vectors, doc.train_labels) != doc.fingerprint:
        raise SchemaError(f"Training-set fingerprint mismatch in {path}")
    n = len(doc.train_vectors)
    if len(doc.train_labels) != n or any(len(m.alphas) != n for m in doc.models):
        raise SchemaError(f"Model document {path} has inconsistent training-set sizes")
    if doc.task == "multiclass" and len(doc.trained_classes or doc.classes) != len(doc.models):
        raise SchemaError(f"Model document {path} has {len(doc.models)} SVMs for classes {doc.trained_classes or doc.classes}")
    if not set(doc.trained_classes) <= set(doc.classes):
        raise SchemaError(f"Model document {path} was trained on classes outside {doc.classes}")
    return doc
