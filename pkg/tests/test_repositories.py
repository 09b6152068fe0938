import json
import math

import numpy as np
import pytest

from qkl.core.errors import DataIOError, SchemaError
from qkl.repositories import artifact_repo, model_repo
from qkl.schemas.model import ModelDocument, ScalerParams, SvmCoefficients
from qkl.services.feature_map import FeatureMapConfig
from qkl.services.metrics import confusion
from qkl.services.quantum_kernel import KernelKind, QuantumKernelSpec, kernel_matrix


def make_document(vectors, labels):
    return ModelDocument(
        task="binary",
        kernel={"kind": "rbf", "sigma": 1.0},
        features=["Amag", "B-V"],
        classes=["-1", "1"],
        scaler=ScalerParams(feature_names=["Amag", "B-V"], mean=[0.0, 0.0], std=[1.0, 1.0], z_min=[-1.0, -1.0], z_max=[1.0, 1.0]),
        train_vectors=vectors,
        train_labels=labels,
        fingerprint=model_repo.fingerprint(vectors, labels),
        models=[SvmCoefficients(alphas=[0.5, 0.5], bias=0.1, labels=[-1, 1], C=1.0, tol=1e-3)],
    )


def test_model_round_trip(tmp_path):
    doc = make_document([[0.1, 0.2], [1.0 / 3.0, 2.5]], ["-1", "1"])
    path = model_repo.save_model(doc, tmp_path / "m" / "model.json")
    loaded = model_repo.load_model(path)
    assert loaded == doc


def test_fingerprint_detects_tampering(tmp_path):
    doc = make_document([[0.1, 0.2], [0.3, 0.4]], ["-1", "1"])
    path = model_repo.save_model(doc, tmp_path / "model.json")
    raw = json.loads(path.read_text())
    raw["train_vectors"][0][0] = 0.11
    path.write_text(json.dumps(raw))
    with pytest.raises(SchemaError, match="fingerprint"):
        model_repo.load_model(path)


def test_fingerprint_depends_on_labels():
    X = [[0.1, 0.2], [0.3, 0.4]]
    assert model_repo.fingerprint(X, ["-1", "1"]) != model_repo.fingerprint(X, ["1", "-1"])


def test_load_model_errors(tmp_path):
    with pytest.raises(DataIOError):
        model_repo.load_model(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(SchemaError):
        model_repo.load_model(bad)
    bad.write_text(json.dumps({"task": "binary"}))
    with pytest.raises(SchemaError):
        model_repo.load_model(bad)


def test_kernel_csv_round_trip(tmp_path, rng):
    X = rng.uniform(0, math.pi, size=(7, 2))
    K = kernel_matrix(X, QuantumKernelSpec(FeatureMapConfig(2)))
    path = artifact_repo.save_kernel_csv(K, tmp_path / "kernel.csv")
    assert path.read_text().startswith("# {")
    loaded = artifact_repo.load_kernel_csv(path)
    assert loaded.entries.tobytes() == K.entries.tobytes()
    assert loaded.kind is KernelKind.QUANTUM_FIDELITY
    assert loaded.provenance["feature_map"]["n_features"] == 2


def test_kernel_csv_rejects_non_square(tmp_path):
    path = tmp_path / "kernel.csv"
    path.write_text("1,0.5,0.2\n0.5,1,0.3\n")
    with pytest.raises(SchemaError):
        artifact_repo.load_kernel_csv(path)
    with pytest.raises(DataIOError):
        artifact_repo.load_kernel_csv(tmp_path / "none.csv")


def test_write_json_emits_null_for_nan(tmp_path):
    path = artifact_repo.write_json(tmp_path, "m.json", {"f1": float("nan"), "n": np.int64(3)})
    assert json.loads(path.read_text()) == {"f1": None, "n": 3}


def test_write_confusion(tmp_path):
    cm = confusion(["A", "A", "B"], ["A", "B", "B"], ["A", "B"])
    paths = artifact_repo.write_confusion(tmp_path, cm, prefix="x_")
    assert paths["counts"].name == "x_confusion_counts.csv"
    lines = paths["percent"].read_text().splitlines()
    assert lines[1] == "A,50.0,50.0"
    assert lines[2] == "B,0.0,100.0"


def test_load_model_checks_trained_classes(tmp_path):
    base = make_document([[0.1, 0.2], [0.3, 0.4]], ["A", "F"])
    outside = base.model_copy(
        update={"task": "multiclass", "classes": ["A", "F"], "trained_classes": ["A", "K"], "models": base.models * 2}
    )
    with pytest.raises(SchemaError, match="outside"):
        model_repo.load_model(model_repo.save_model(outside, tmp_path / "outside.json"))
    short = base.model_copy(update={"task": "multiclass", "classes": ["A", "F"], "trained_classes": ["A", "F"]})
    with pytest.raises(SchemaError, match="SVMs"):
        model_repo.load_model(model_repo.save_model(short, tmp_path / "short.json"))
