"""Star catalogue ingestion, cleaning, feature engineering, scaling and splits.

Pipeline:
- `load_csv`: read the catalogue (columns Vmag, Plx, e_Plx, B-V, SpType, Amag,
  TargetClass); unparseable numeric cells become `None`.
- `clean`: drop exact duplicates (first kept), rows missing a required value
  and rows with non-positive parallax; counts land in a `CleaningReport`.
- `engineer_features` / `build_dataset`: composite features Amag_SQ, B-V_SQ,
  B-V+Amag, B-V-Amag assembled in the configured order, plus labels.
- `fit_scaler` / `apply_scaler`: standardization fitted on the training split
  only, then an affine map of the train range onto [0, pi] for encoding.
- `split` / `subsample`: seeded, stratified and deterministic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..core.errors import (
    DataIOError,
    InputValidationError,
    NonPositiveParallaxError,
    SchemaError,
)
from ..core.logging import logger
from ..schemas.experiment import DEFAULT_FEATURES, FEATURE_NAMES, SPECTRAL_CLASSES
from ..schemas.model import ScalerParams
from ..schemas.report import AmagCheck, CleaningReport

REQUIRED_COLUMNS = ("Vmag", "Plx", "e_Plx", "B-V", "SpType", "Amag", "TargetClass")
# e_Plx is carried but only required when selected as a feature
REQUIRED_VALUES = ("Vmag", "Plx", "B-V", "SpType", "Amag", "TargetClass")
_ATTR = {"Vmag": "vmag", "Plx": "plx", "e_Plx": "e_plx", "B-V": "b_v", "SpType": "sptype", "Amag": "amag", "TargetClass": "target_class"}


@dataclass(frozen=True)
class StarRecord:
    vmag: Optional[float]
    plx: Optional[float]
    e_plx: Optional[float]
    b_v: Optional[float]
    sptype: Optional[str]
    amag: Optional[float]
    target_class: Optional[int]

    def value(self, column: str):
        return getattr(self, _ATTR[column])


@dataclass(frozen=True)
class EngineeredSample:
    features: Tuple[float, ...]
    binary_label: int
    spectral_class: Optional[str]


@dataclass
class Dataset:
    """Column-oriented samples: X (m, d), binary labels (-1/+1), spectral classes ('' when excluded)."""
    X: np.ndarray
    y_binary: np.ndarray
    y_class: np.ndarray
    feature_names: List[str]

    def __len__(self) -> int:
        return self.X.shape[0]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.X[idx], self.y_binary[idx], self.y_class[idx], list(self.feature_names))

    def labels(self, stratify_by: str) -> np.ndarray:
        if stratify_by == "binary":
            return self.y_binary
        if stratify_by in ("spectral", "multiclass"):
            return self.y_class
        raise InputValidationError(f"Unknown stratification label '{stratify_by}'")


def _optional_float(v) -> Optional[float]:
    return None if v is None or (isinstance(v, float) and math.isnan(v)) else float(v)


def load_csv(path) -> List[StarRecord]:
    """Read the star catalogue into records (one per data row)."""
    path = Path(path)
    if not path.exists():
        raise DataIOError(f"Dataset file not found: {path}")
    try:
        df = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise SchemaError(f"Could not parse {path} as CSV: {e}") from e

    missing = [c for c in REQUIRED_COLUMNS if c not in df.columns]
    if missing:
        raise SchemaError(f"{path} is missing required columns: {', '.join(missing)}", missing=missing)

    numeric = {c: pd.to_numeric(df[c].str.strip(), errors="coerce") for c in REQUIRED_COLUMNS if c != "SpType"}
    target = numeric["TargetClass"].where(numeric["TargetClass"].isin([0, 1]))
    sptype = df["SpType"].str.strip()

    records = [
        StarRecord(
            vmag=_optional_float(vm),
            plx=_optional_float(p),
            e_plx=_optional_float(ep),
            b_v=_optional_float(bv),
            sptype=sp or None,
            amag=_optional_float(am),
            target_class=None if pd.isna(tc) else int(tc),
        )
        for vm, p, ep, bv, sp, am, tc in zip(
            numeric["Vmag"], numeric["Plx"], numeric["e_Plx"], numeric["B-V"], sptype, numeric["Amag"], target
        )
    ]
    logger.info(f"Loaded {len(records)} rows from {path}")
    return records


def clean(records: Iterable[StarRecord], report: Optional[CleaningReport] = None) -> List[StarRecord]:
    """Remove duplicates, rows with missing required values and non-positive parallax.

    Pass a `CleaningReport` to receive the per-reason counts.
    """
    report = report if report is not None else CleaningReport()
    records = list(records)
    report.input_rows = len(records)

    seen = set()
    unique: List[StarRecord] = []
    for r in records:
        if r in seen:
            report.duplicates += 1
            continue
        seen.add(r)
        unique.append(r)

    kept: List[StarRecord] = []
    for r in unique:
        absent = [c for c in REQUIRED_VALUES if r.value(c) is None]
        if absent:
            report.missing += 1
            for c in absent:
                report.missing_by_field[c] = report.missing_by_field.get(c, 0) + 1
            continue
        if r.plx <= 0:
            report.non_positive_parallax += 1
            continue
        kept.append(r)

    report.kept = len(kept)
    counts: Dict[str, int] = {}
    excluded = 0
    for r in kept:
        cls = spectral_class(r.sptype)
        if cls is None:
            excluded += 1
        else:
            counts[cls] = counts.get(cls, 0) + 1
    report.spectral_counts = {c: counts[c] for c in SPECTRAL_CLASSES if c in counts}
    report.excluded_from_multiclass = excluded
    logger.info(
        f"Cleaning kept {report.kept}/{report.input_rows} rows "
        f"(duplicates={report.duplicates}, missing={report.missing}, "
        f"non-positive parallax={report.non_positive_parallax})"
    )
    return kept


def absolute_magnitude(vmag: float, plx: float, unit: str = "arcsec") -> float:
    """Amag = Vmag + 5*log10(plx) + 5 with plx in arcseconds (`unit="mas"` converts)."""
    if plx is None or not plx > 0:
        raise NonPositiveParallaxError(f"Parallax must be positive, got {plx}")
    if unit == "mas":
        plx = plx / 1000.0
    elif unit != "arcsec":
        raise InputValidationError(f"Unknown parallax unit '{unit}'")
    return vmag + 5.0 * math.log10(plx) + 5.0


def amag_check(records: Sequence[StarRecord], unit: str = "mas") -> Optional[AmagCheck]:
    """Compare the file's Amag column with the recomputed magnitude."""
    deviations = [
        abs(absolute_magnitude(r.vmag, r.plx, unit) - r.amag)
        for r in records
        if r.vmag is not None and r.amag is not None and r.plx is not None and r.plx > 0
    ]
    if not deviations:
        return None
    return AmagCheck(
        parallax_unit=unit,
        rows=len(deviations),
        max_abs_deviation=float(max(deviations)),
        mean_abs_deviation=float(np.mean(deviations)),
    )


def spectral_class(sptype: Optional[str]) -> Optional[str]:
    """First character of SpType, uppercased, if it is one of O B A F G K M."""
    if not sptype:
        return None
    letter = sptype[0].upper()
    return letter if letter in SPECTRAL_CLASSES else None


def extract_labels(record: StarRecord) -> Tuple[int, Optional[str]]:
    """(+1 giant / -1 dwarf, spectral class letter or None)."""
    if record.target_class not in (0, 1):
        raise InputValidationError(f"TargetClass must be 0 or 1, got {record.target_class}")
    return (1 if record.target_class == 1 else -1), spectral_class(record.sptype)


def feature_values(record: StarRecord) -> Dict[str, Optional[float]]:
    amag, bv = record.amag, record.b_v
    both = amag is not None and bv is not None
    return {
        "Amag": amag,
        "B-V": bv,
        "Vmag": record.vmag,
        "Plx": record.plx,
        "e_Plx": record.e_plx,
        "Amag_SQ": amag * amag if amag is not None else None,
        "B-V_SQ": bv * bv if bv is not None else None,
        "B-V+Amag": bv + amag if both else None,
        "B-V-Amag": bv - amag if both else None,
    }


def engineer_features(record: StarRecord, features: Sequence[str] = DEFAULT_FEATURES) -> EngineeredSample:
    unknown = [f for f in features if f not in FEATURE_NAMES]
    if unknown:
        raise InputValidationError(f"Unknown features {unknown}")
    values = feature_values(record)
    absent = [f for f in features if values[f] is None]
    if absent:
        raise InputValidationError(f"Record is missing values for {absent}")
    binary, cls = extract_labels(record)
    return EngineeredSample(tuple(float(values[f]) for f in features), binary, cls)


def build_dataset(records: Sequence[StarRecord], features: Sequence[str] = DEFAULT_FEATURES) -> Dataset:
    """Engineer every record; records lacking a selected value (e.g. e_Plx) are skipped."""
    samples: List[EngineeredSample] = []
    skipped = 0
    for r in records:
        try:
            samples.append(engineer_features(r, features))
        except InputValidationError:
            skipped += 1
    if skipped:
        logger.warning(f"Skipped {skipped} record(s) lacking values for features {list(features)}")
    if not samples:
        raise InputValidationError("No usable samples after feature engineering")
    return Dataset(
        X=np.asarray([s.features for s in samples], dtype=np.float64),
        y_binary=np.asarray([s.binary_label for s in samples], dtype=np.int64),
        y_class=np.asarray([s.spectral_class or "" for s in samples], dtype=object),
        feature_names=list(features),
    )


def select_spectral_classes(
    dataset: Dataset, classes: Optional[Sequence[str]] = None, min_count: int = 50
) -> Tuple[Dataset, Dict[str, int]]:
    """Keep rows of the requested (or all) spectral classes with >= `min_count` samples.

    Returns the filtered dataset and the dropped classes with their counts.
    """
    wanted = list(classes) if classes else list(SPECTRAL_CLASSES)
    counts = {c: int(np.sum(dataset.y_class == c)) for c in wanted}
    dropped = {c: n for c, n in counts.items() if n < min_count}
    kept = [c for c in wanted if c not in dropped]
    if dropped:
        logger.warning(f"Dropping spectral classes below {min_count} samples: {dropped}")
    if len(kept) < 2:
        raise InputValidationError(f"Fewer than two spectral classes remain after filtering: {kept}")
    mask = np.isin(dataset.y_class.astype(str), kept)
    return dataset.subset(np.flatnonzero(mask)), dropped


def one_hot_spectral(records: Sequence[StarRecord]) -> pd.DataFrame:
    """Indicator columns SpClass_O ... SpClass_M (all zero for unrecognized types)."""
    letters = [spectral_class(r.sptype) for r in records]
    return pd.DataFrame({f"SpClass_{c}": [int(l == c) for l in letters] for c in SPECTRAL_CLASSES})


def records_frame(records: Sequence[StarRecord], one_hot: bool = True) -> pd.DataFrame:
    """Cleaned records with engineered columns and labels, ready for CSV export."""
    rows = []
    for r in records:
        row = {c: r.value(c) for c in REQUIRED_COLUMNS}
        values = feature_values(r)
        row.update({f: values[f] for f in ("Amag_SQ", "B-V_SQ", "B-V+Amag", "B-V-Amag")})
        binary, cls = extract_labels(r)
        row["BinaryLabel"] = binary
        row["SpClass"] = cls or ""
        rows.append(row)
    frame = pd.DataFrame(rows, columns=list(REQUIRED_COLUMNS) + ["Amag_SQ", "B-V_SQ", "B-V+Amag", "B-V-Amag", "BinaryLabel", "SpClass"])
    if one_hot:
        frame = pd.concat([frame, one_hot_spectral(records)], axis=1)
    return frame


def _matrix(samples) -> np.ndarray:
    return samples.X if isinstance(samples, Dataset) else np.asarray(samples, dtype=np.float64)


def fit_scaler(train, feature_names: Optional[Sequence[str]] = None) -> ScalerParams:
    """Fit standardization and the [0, pi] range map on the training split only."""
    X = _matrix(train)
    names = list(train.feature_names) if isinstance(train, Dataset) else list(feature_names or [f"f{i}" for i in range(X.shape[1])])
    if X.ndim != 2 or len(X) == 0:
        raise InputValidationError("Cannot fit a scaler on an empty training split")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    constant = [names[i] for i in np.flatnonzero(~(std > 0))]
    if constant:
        raise InputValidationError(f"Zero-variance feature(s) cannot be standardized: {', '.join(constant)}")
    z = (X - mean) / std
    return ScalerParams(
        feature_names=names,
        mean=mean.tolist(),
        std=std.tolist(),
        z_min=z.min(axis=0).tolist(),
        z_max=z.max(axis=0).tolist(),
    )


def apply_scaler(params: ScalerParams, samples, range_map: bool = True):
    """Standardize; with `range_map` also map the train range to [0, pi] and clip."""
    X = _matrix(samples)
    if X.shape[1] != len(params.mean):
        raise InputValidationError(f"Scaler expects {len(params.mean)} features, got {X.shape[1]}")
    z = (X - np.asarray(params.mean)) / np.asarray(params.std)
    if range_map:
        lo, hi = np.asarray(params.z_min), np.asarray(params.z_max)
        z = np.clip((z - lo) / (hi - lo) * math.pi, 0.0, math.pi)
    if isinstance(samples, Dataset):
        return replace(samples, X=z)
    return z


def _class_groups(labels: np.ndarray) -> List[np.ndarray]:
    keys = labels.astype(str)
    return [np.flatnonzero(keys == c) for c in sorted(set(keys.tolist()))]


def split(dataset: Dataset, test_fraction: float = 0.2, seed: int = 42, stratify_by: str = "binary") -> Tuple[Dataset, Dataset]:
    """Seeded stratified train/test split; per-class proportions match within one sample."""
    if not 0.0 < test_fraction < 1.0:
        raise InputValidationError(f"test_fraction must lie in (0, 1) or the test set is empty; got {test_fraction}")
    rng = np.random.default_rng(seed)
    test_idx: List[np.ndarray] = []
    for group in _class_groups(dataset.labels(stratify_by)):
        n_test = int(math.floor(test_fraction * len(group) + 0.5))
        test_idx.append(rng.permutation(group)[:n_test])
    test = np.sort(np.concatenate(test_idx))
    if len(test) == 0:
        raise InputValidationError("Split produced an empty test set")
    train = np.setdiff1d(np.arange(len(dataset)), test)
    if len(train) == 0:
        raise InputValidationError("Split produced an empty training set")
    return dataset.subset(train), dataset.subset(test)


def subsample(dataset: Dataset, size: int, seed: int = 42, stratify_by: str = "binary") -> Dataset:
    """Seeded stratified subsample of exactly `size` rows (largest-remainder quotas).

    Classes rounded down to zero rows get one row, taken from the largest quota.
    """
    n = len(dataset)
    if not 1 <= size <= n:
        raise InputValidationError(f"Requested subsample size {size} but only {n} samples are available")
    if size == n:
        return dataset
    groups = _class_groups(dataset.labels(stratify_by))
    exact = np.asarray([size * len(g) / n for g in groups])
    quota = np.floor(exact).astype(int)
    # stable sort keeps class order on equal remainders
    for i in np.argsort(-(exact - quota), kind="stable")[: size - quota.sum()]:
        quota[i] += 1
    # every class keeps at least one row when the size allows it
    if size >= len(groups):
        for i in np.flatnonzero(quota == 0):
            quota[int(np.argmax(quota))] -= 1
            quota[i] = 1
    rng = np.random.default_rng(seed)
    chosen = [rng.permutation(g)[:q] for g, q in zip(groups, quota)]
    return dataset.subset(np.sort(np.concatenate(chosen)))


def subsample_train(train: Dataset, size: int, seed: int = 42, stratify_by: str = "binary") -> Dataset:
    return subsample(train, size, seed, stratify_by)
