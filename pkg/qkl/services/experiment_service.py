"""Experiment orchestration behind the CLI subcommands.

`ExperimentRunner` wires the pipeline for one validated `ExperimentConfig`:

- prep: load, clean and export the catalogue with a cleaning report.
- train: split, scale, build the Gram matrix, fit the SVM, save the model.
- eval: score a saved model on its own train or test split.
- curve: metrics per training size for the quantum and RBF kernels.
- baseline: KNN and logistic regression, binary and multi-class.
- bench: Gram-matrix wall time versus worker count.

Every output except wall-clock timings is a deterministic function of the
config and seed.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import ValidationError

from ..core.config import get_settings
from ..core.errors import ConvergenceError, DataIOError, InputValidationError
from ..core.logging import logger
from ..repositories import artifact_repo, model_repo
from ..schemas.experiment import ExperimentConfig, FeatureMapSettings, KernelSettings
from ..schemas.model import ModelDocument, ScalerParams, SvmCoefficients
from ..schemas.report import CleaningReport, CurveRow, TimingRow
from . import baselines, metrics, stellar_data
from .feature_map import FeatureMapConfig
from .quantum_kernel import (
    KernelSpec,
    QuantumKernelSpec,
    RbfKernelSpec,
    cross_kernel_matrix,
    kernel_matrix,
)
from .svm_solver import (
    MultiClassModel,
    SvmModel,
    decision_values,
    multi_decision_values,
    predict_binary,
    predict_multi,
    train_one_vs_rest,
    train_svm,
)

BINARY_CLASSES = (-1, 1)
# config fields that decide which rows land in the test split
SPLIT_FIELDS = (
    "dataset_path",
    "spectral_classes",
    "min_class_count",
    "test_fraction",
    "test_size",
    "seed",
)
Fitted = Union[SvmModel, MultiClassModel]


def load_config(path: Optional[str] = None, **overrides: Any) -> ExperimentConfig:
    """Read the JSON experiment config (or defaults) and apply CLI overrides.

    `None` overrides are ignored. Worker count and output directory fall back
    to the runtime settings when neither the file nor the CLI sets them.
    """
    raw: Dict[str, Any] = {}
    if path:
        p = Path(path)
        if not p.exists():
            raise DataIOError(f"Config file not found: {p}")
        try:
            raw = json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise InputValidationError(f"Config {p} is not valid JSON: {e}") from e
        if not isinstance(raw, dict):
            raise InputValidationError(f"Config {p} must hold a JSON object")
    settings = get_settings()
    raw.setdefault("workers", settings.DEFAULT_WORKERS)
    raw.setdefault("output_dir", settings.OUTPUT_DIR)
    raw.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig.model_validate(raw)
    except ValidationError as e:
        raise InputValidationError(f"Invalid experiment config: {e}") from e


def build_kernel_spec(kernel: KernelSettings, feature_map: FeatureMapSettings, n_features: int) -> KernelSpec:
    if kernel.kind == "rbf":
        return RbfKernelSpec(sigma=kernel.sigma)
    ent = feature_map.entanglement
    if isinstance(ent, str):
        config = FeatureMapConfig(n_features, repetitions=feature_map.repetitions, pattern=ent)
    else:
        config = FeatureMapConfig(n_features, repetitions=feature_map.repetitions, entanglement=tuple(tuple(p) for p in ent))
    return QuantumKernelSpec(config)


def targets(dataset: stellar_data.Dataset, task: str) -> np.ndarray:
    return dataset.y_binary if task == "binary" else dataset.y_class.astype(str)


def fit_kernel_model(K, y, task: str, config: ExperimentConfig) -> Fitted:
    svm = config.svm
    if task == "binary":
        model: Fitted = train_svm(K, y, C=svm.C, tol=svm.tol, max_passes=svm.max_passes)
    else:
        model = train_one_vs_rest(K, y, C=svm.C, tol=svm.tol, max_passes=svm.max_passes, workers=config.workers)
    if config.strict_convergence and not model.converged:
        raise ConvergenceError(f"SMO did not converge within {svm.max_passes} passes")
    return model


def score(model: Fitted, k_rows) -> Tuple[np.ndarray, np.ndarray]:
    """(predictions, decision values) for cross-kernel rows."""
    if isinstance(model, MultiClassModel):
        return predict_multi(model, k_rows), multi_decision_values(model, k_rows)
    return predict_binary(model, k_rows), decision_values(model, k_rows)


def summarize(task: str, y_true, y_pred, classes: Sequence[Any]) -> Tuple[metrics.ConfusionMatrix, Dict[str, Any]]:
    cm = metrics.confusion(list(y_true), list(y_pred), classes)
    payload = metrics.binary_metrics(cm, positive=1) if task == "binary" else metrics.multiclass_metrics(cm)
    if payload.undefined:
        logger.warning(f"Undefined metrics (zero denominator): {payload.undefined}")
    return cm, payload.model_dump()


def empty_rows(cm: metrics.ConfusionMatrix) -> List[str]:
    """Classes with no true samples; their percent rows are written as zeros."""
    _, empty = metrics.to_percent(cm)
    if empty:
        logger.warning(f"No true samples for classes {empty}; their percent rows are all zero")
    return [str(c) for c in empty]


def predictions_frame(y_true, y_pred, decisions: np.ndarray, classes: Sequence[Any]) -> pd.DataFrame:
    frame = pd.DataFrame({"index": np.arange(len(y_true)), "y_true": list(y_true), "y_pred": list(y_pred)})
    decisions = np.asarray(decisions)
    if decisions.ndim == 1:
        frame["decision"] = decisions
    else:
        for j, c in enumerate(classes):
            frame[f"decision_{c}"] = decisions[:, j]
    return frame


@dataclass
class PreparedData:
    """Raw train/test splits of one task plus the scaler fitted on the train split.

    `classes` covers every label of the filtered dataset, so a class missing
    from a small training subsample still has a confusion-matrix row.
    """
    task: str
    train: stellar_data.Dataset
    test: stellar_data.Dataset
    scaler: ScalerParams
    classes: List[Any]
    dropped_classes: Dict[str, int] = field(default_factory=dict)

    def view(self, part: str, kernel_kind: str) -> np.ndarray:
        """Scaled features: [0, pi] for the quantum kernel, standardized otherwise."""
        ds = self.train if part == "train" else self.test
        return stellar_data.apply_scaler(self.scaler, ds.X, range_map=kernel_kind == "quantum")


class ExperimentRunner:
    """Runs one subcommand for a validated config and writes its artifacts."""

    def __init__(self, config: ExperimentConfig) -> None:
        self.config = config
        self.out_dir = Path(config.output_dir)
        self._records: Optional[List[stellar_data.StarRecord]] = None
        self._report: Optional[CleaningReport] = None

    # -- shared pipeline ---------------------------------------------------

    def write_effective_config(self) -> Path:
        return artifact_repo.write_json(self.out_dir, "effective_config.json", self.config)

    def clean_records(self) -> Tuple[List[stellar_data.StarRecord], CleaningReport]:
        if self._records is None:
            report = CleaningReport()
            raw = stellar_data.load_csv(self.config.dataset_path)
            self._records = stellar_data.clean(raw, report)
            report.amag_check = stellar_data.amag_check(self._records, self.config.parallax_unit)
            self._report = report
        return self._records, self._report

    def split_task(self, task: str) -> Tuple[stellar_data.Dataset, stellar_data.Dataset, Dict[str, int]]:
        """Full train split and (optionally capped) test split for a task."""
        cfg = self.config
        records, _ = self.clean_records()
        dataset = stellar_data.build_dataset(records, cfg.features)
        dropped: Dict[str, int] = {}
        stratify = "binary"
        if task == "multiclass":
            dataset, dropped = stellar_data.select_spectral_classes(dataset, cfg.spectral_classes, cfg.min_class_count)
            stratify = "spectral"
        train, test = stellar_data.split(dataset, cfg.test_fraction, cfg.seed, stratify)
        if cfg.test_size is not None and cfg.test_size < len(test):
            test = stellar_data.subsample(test, cfg.test_size, cfg.seed, stratify)
        logger.info(f"{task} split: {len(train)} train / {len(test)} test rows available")
        return train, test, dropped

    @staticmethod
    def _check_sizes(sizes: Sequence[int], available: int) -> None:
        too_big = [s for s in sizes if s > available]
        if too_big:
            raise InputValidationError(
                f"Training size(s) {too_big} exceed the {available} training samples available"
            )

    def prepare(self, task: str, train_size: Optional[int] = None, splits=None) -> PreparedData:
        train_full, test, dropped = splits or self.split_task(task)
        size = train_size if train_size is not None else self.config.train_size
        self._check_sizes([size], len(train_full))
        stratify = "binary" if task == "binary" else "spectral"
        train = stellar_data.subsample_train(train_full, size, self.config.seed, stratify)
        scaler = stellar_data.fit_scaler(train)
        if task == "binary":
            classes: List[Any] = list(BINARY_CLASSES)
        else:
            classes = sorted(set(targets(train_full, task).tolist()) | set(targets(test, task).tolist()))
        return PreparedData(task, train, test, scaler, classes, dropped)

    def fit(self, data: PreparedData, kernel: KernelSettings) -> Tuple[Fitted, KernelSpec, np.ndarray]:
        spec = build_kernel_spec(kernel, self.config.feature_map, self.config.n_features)
        X_train = data.view("train", kernel.kind)
        start = time.perf_counter()
        K = kernel_matrix(X_train, spec, workers=self.config.workers)
        logger.info(f"{spec.kind.value} Gram {K.size}x{K.size} built in {time.perf_counter() - start:.2f}s")
        model = fit_kernel_model(K, targets(data.train, data.task), data.task, self.config)
        return model, spec, X_train

    def evaluate(self, model: Fitted, spec: KernelSpec, X_train: np.ndarray, X_eval: np.ndarray):
        k_rows = cross_kernel_matrix(X_train, X_eval, spec, workers=self.config.workers)
        return score(model, k_rows)

    # -- subcommands -------------------------------------------------------

    def prep(self) -> Dict[str, Path]:
        records, report = self.clean_records()
        artifacts = {
            "effective_config": self.write_effective_config(),
            "cleaned": artifact_repo.write_frame(self.out_dir, "cleaned.csv", stellar_data.records_frame(records)),
            "report": artifact_repo.write_json(self.out_dir, "cleaning_report.json", report),
        }
        if report.amag_check is not None:
            check = report.amag_check
            logger.info(f"Amag recomputed ({check.parallax_unit}) over {check.rows} rows: max deviation {check.max_abs_deviation:.3g}")
        return artifacts

    def train(self) -> Dict[str, Path]:
        cfg = self.config
        data = self.prepare(cfg.task)
        model, spec, X_train = self.fit(data, cfg.kernel)

        y_train = targets(data.train, data.task)
        labels = [str(v) for v in y_train.tolist()]
        svms = model.models if isinstance(model, MultiClassModel) else [model]
        doc = ModelDocument(
            task=cfg.task,
            kernel={**cfg.kernel.model_dump(), "feature_map": cfg.feature_map.model_dump(), "provenance": spec.provenance()},
            features=list(cfg.features),
            classes=[str(c) for c in data.classes],
            trained_classes=list(model.classes) if isinstance(model, MultiClassModel) else [],
            scaler=data.scaler,
            train_vectors=X_train.tolist(),
            train_labels=labels,
            fingerprint=model_repo.fingerprint(X_train, labels),
            models=[
                SvmCoefficients(
                    alphas=m.alphas.tolist(),
                    bias=m.bias,
                    labels=m.labels.astype(int).tolist(),
                    C=m.C,
                    tol=m.tol,
                    converged=m.converged,
                    passes=m.passes,
                    kkt_violations=m.kkt_violations,
                )
                for m in svms
            ],
            config=cfg.model_dump(mode="json"),
        )

        y_pred, _ = self.evaluate(model, spec, X_train, X_train)
        _, train_metrics = summarize(cfg.task, y_train.tolist(), y_pred.tolist(), data.classes)
        diagnostics = {
            "train_size": len(data.train),
            "support_vectors": [int(len(m.support_indices)) for m in svms],
            "converged": [m.converged for m in svms],
            "passes": [m.passes for m in svms],
            "kkt_violations": [m.kkt_violations for m in svms],
            "dropped_classes": data.dropped_classes,
        }
        return {
            "effective_config": self.write_effective_config(),
            "model": model_repo.save_model(doc, self.out_dir / "model.json"),
            "train_metrics": artifact_repo.write_json(
                self.out_dir, "train_metrics.json", {"task": cfg.task, "metrics": train_metrics, **diagnostics}
            ),
        }

    def model_split(self, doc: ModelDocument, split: str, kernel_kind: str) -> Tuple[np.ndarray, List[Any]]:
        """Scaled features and true labels of the model's own train or test split.

        The test split is rebuilt from the config saved with the model, so
        overrides at eval time cannot move training rows into it.
        """
        if split == "train":
            return (
                np.asarray(doc.train_vectors, dtype=np.float64),
                [int(v) if doc.task == "binary" else v for v in doc.train_labels],
            )
        if split != "test":
            raise InputValidationError(f"Unknown split '{split}'; use 'train' or 'test'")
        runner = self
        if doc.config:
            saved = ExperimentConfig.model_validate(doc.config)
            changed = [f for f in SPLIT_FIELDS if getattr(saved, f) != getattr(self.config, f)]
            if changed:
                logger.warning(f"Config differs from the model's in {changed}; using the model's values to rebuild its test split")
                runner = ExperimentRunner(
                    saved.model_copy(update={"workers": self.config.workers, "output_dir": self.config.output_dir})
                )
        _, test, _ = runner.split_task(doc.task)
        X_eval = stellar_data.apply_scaler(doc.scaler, test.X, range_map=kernel_kind == "quantum")
        return X_eval, targets(test, doc.task).tolist()

    def eval(self, model_path: Optional[str] = None, split: str = "test") -> Dict[str, Path]:
        cfg = self.config
        doc = model_repo.load_model(model_path or self.out_dir / "model.json")
        if list(doc.features) != list(cfg.features):
            raise InputValidationError(f"Model was trained on features {doc.features}, config selects {cfg.features}")
        if doc.task != cfg.task:
            raise InputValidationError(f"Model task '{doc.task}' does not match config task '{cfg.task}'")

        kernel = KernelSettings(**{k: doc.kernel[k] for k in ("kind", "sigma", "max_kernel_size")})
        spec = build_kernel_spec(kernel, FeatureMapSettings(**doc.kernel["feature_map"]), len(doc.features))
        model = _restore(doc)
        X_train = np.asarray(doc.train_vectors, dtype=np.float64)
        classes: List[Any] = list(BINARY_CLASSES) if doc.task == "binary" else list(doc.classes)

        X_eval, y_true = self.model_split(doc, split, kernel.kind)
        y_pred, decisions = self.evaluate(model, spec, X_train, X_eval)
        cm, payload = summarize(doc.task, y_true, y_pred.tolist(), classes)
        logger.info(f"eval on {split} split ({len(y_true)} rows): accuracy {payload['accuracy']:.4f}")
        decision_classes = model.classes if isinstance(model, MultiClassModel) else classes
        artifacts = {
            "effective_config": self.write_effective_config(),
            "metrics": artifact_repo.write_json(
                self.out_dir,
                "metrics.json",
                {
                    "task": doc.task,
                    "split": split,
                    "n_samples": len(y_true),
                    "classes": [str(c) for c in classes],
                    "metrics": payload,
                    "empty_confusion_rows": empty_rows(cm),
                },
            ),
            "predictions": artifact_repo.write_frame(
                self.out_dir, "predictions.csv", predictions_frame(y_true, y_pred.tolist(), decisions, decision_classes)
            ),
        }
        artifacts.update(artifact_repo.write_confusion(self.out_dir, cm))
        return artifacts

    def curve(self) -> Dict[str, Path]:
        cfg = self.config
        splits = self.split_task(cfg.task)
        self._check_sizes(cfg.train_sizes, len(splits[0]))
        rows: List[CurveRow] = []
        for size in cfg.train_sizes:
            data = self.prepare(cfg.task, size, splits)
            for kind in ("quantum", "rbf"):
                label = "quantum-fidelity" if kind == "quantum" else "rbf"
                if kind == "quantum" and size > cfg.kernel.max_kernel_size:
                    logger.warning(f"Skipping quantum kernel at train size {size} > max_kernel_size {cfg.kernel.max_kernel_size}")
                    rows.append(CurveRow(kernel=label, train_size=size, status="skipped"))
                    continue
                kernel = cfg.kernel.model_copy(update={"kind": kind})
                model, spec, X_train = self.fit(data, kernel)
                y_pred, _ = self.evaluate(model, spec, X_train, data.view("test", kind))
                _, payload = summarize(cfg.task, targets(data.test, cfg.task).tolist(), y_pred.tolist(), data.classes)
                fields = {k: payload.get(k) for k in ("accuracy", "f1", "specificity", "sensitivity", "macro_f1")}
                rows.append(CurveRow(kernel=label, train_size=size, **fields))
                logger.info(f"curve {label} n={size}: accuracy {payload['accuracy']:.4f}")
        return {
            "effective_config": self.write_effective_config(),
            "curve": artifact_repo.write_rows(self.out_dir, "curve.csv", rows),
        }

    def baseline(self, tasks: Sequence[str] = ("binary", "multiclass")) -> Dict[str, Path]:
        cfg, hp = self.config, self.config.baselines
        results: Dict[str, Any] = {}
        artifacts: Dict[str, Path] = {"effective_config": self.write_effective_config()}
        for task in tasks:
            data = self.prepare(task)
            X_train, X_test = data.view("train", "rbf"), data.view("test", "rbf")
            y_train, y_test = targets(data.train, task), targets(data.test, task)
            knn = baselines.knn_fit(X_train, y_train, k=hp.k)
            if task == "binary":
                lr: Any = baselines.logistic_train(X_train, y_train, hp.l2, hp.lr, hp.max_iter, hp.grad_tol, positive_label=1)
            else:
                lr = baselines.logistic_train_one_vs_rest(X_train, y_train, hp.l2, hp.lr, hp.max_iter, hp.grad_tol)
            results[task] = {"train_size": len(data.train), "test_size": len(data.test), "dropped_classes": data.dropped_classes}
            for name, model in (("knn", knn), ("lr", lr)):
                predict = baselines.knn_predict_many if name == "knn" else baselines.logistic_predict_many
                y_pred = predict(model, X_test).tolist()
                cm, payload = summarize(task, y_test.tolist(), y_pred, data.classes)
                results[task][name] = {
                    "model": baselines.describe(model),
                    "metrics": payload,
                    "empty_confusion_rows": empty_rows(cm),
                }
                prefix = f"{task}_{name}_"
                frame = pd.DataFrame({"index": np.arange(len(y_test)), "y_true": y_test.tolist(), "y_pred": y_pred})
                artifacts[f"{prefix}predictions"] = artifact_repo.write_frame(self.out_dir, f"{prefix}predictions.csv", frame)
                for kind, path in artifact_repo.write_confusion(self.out_dir, cm, prefix).items():
                    artifacts[f"{prefix}{kind}"] = path
                logger.info(f"baseline {task}/{name}: accuracy {payload['accuracy']:.4f}")
        artifacts["metrics"] = artifact_repo.write_json(self.out_dir, "baseline_metrics.json", results)
        return artifacts

    def bench(self) -> Dict[str, Path]:
        cfg, bench = self.config, self.config.bench
        spec = build_kernel_spec(cfg.kernel, cfg.feature_map, cfg.n_features)
        if bench.source == "synthetic":
            rng = np.random.default_rng(cfg.seed)
            X = rng.uniform(0.0, np.pi, size=(bench.size, cfg.n_features))
        else:
            data = self.prepare("binary", bench.size)
            X = data.view("train", cfg.kernel.kind)

        def _timed(workers: int) -> Tuple[float, np.ndarray]:
            best, entries = float("inf"), None
            for _ in range(bench.repeats):
                start = time.perf_counter()
                entries = kernel_matrix(X, spec, workers=workers).entries
                best = min(best, time.perf_counter() - start)
            return best, entries

        base_time, reference = _timed(1)
        rows: List[TimingRow] = []
        for w in bench.workers:
            wall, entries = (base_time, reference) if w == 1 else _timed(w)
            rows.append(
                TimingRow(workers=w, wall_seconds=wall, speedup=base_time / wall, identical=entries.tobytes() == reference.tobytes())
            )
            logger.info(f"bench {bench.size}x{bench.size} workers={w}: {wall:.3f}s (x{base_time / wall:.2f})")
        if not all(r.identical for r in rows):
            logger.warning("Gram matrices differ across worker counts")
        return {
            "effective_config": self.write_effective_config(),
            "timing": artifact_repo.write_rows(self.out_dir, "timing.csv", rows),
        }


def _restore(doc: ModelDocument) -> Fitted:
    svms = [
        SvmModel(
            alphas=np.asarray(c.alphas, dtype=np.float64),
            bias=c.bias,
            labels=np.asarray(c.labels, dtype=np.float64),
            C=c.C,
            tol=c.tol,
            converged=c.converged,
            passes=c.passes,
            kkt_violations=c.kkt_violations,
        )
        for c in doc.models
    ]
    if doc.task == "binary":
        return svms[0]
    return MultiClassModel(classes=list(doc.trained_classes or doc.classes), models=svms)
