"""Linear classifiers, datasets, prediction, and threshold calibration.

The score of a point is ``intercept + sum_j coefficients[j] * x[j]`` and the
predicted label is +1 exactly when the score is >= 0. Models and datasets are
paired by feature *name*, never by column position.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import InputError, ParseError


@dataclass(frozen=True)
class LinearModel:
    """A linear classifier with named coefficients and an explicit intercept."""

    feature_names: tuple[str, ...]
    coefficients: tuple[float, ...]
    intercept: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "feature_names", tuple(str(n) for n in self.feature_names))
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        object.__setattr__(self, "intercept", float(self.intercept))
        if len(self.feature_names) != len(self.coefficients):
            raise InputError(
                f"model has {len(self.feature_names)} feature names but "
                f"{len(self.coefficients)} coefficients"
            )
        if len(set(self.feature_names)) != len(self.feature_names):
            raise InputError("model feature names must be unique")
        if not math.isfinite(self.intercept):
            raise InputError("model intercept must be finite")
        for name, c in zip(self.feature_names, self.coefficients):
            if not math.isfinite(c):
                raise InputError(f"coefficient for feature '{name}' must be finite")

    @property
    def dim(self) -> int:
        return len(self.feature_names)

    def coefficient_vector(self) -> np.ndarray:
        return np.asarray(self.coefficients, dtype=float)

    def index_of(self, feature: str) -> int:
        try:
            return self.feature_names.index(feature)
        except ValueError:
            raise InputError(f"model has no feature named '{feature}'") from None

    def score(self, x: Sequence[float]) -> float:
        xv = validate_point(self, x)
        return float(self.intercept + self.coefficient_vector() @ xv)


@dataclass(frozen=True)
class Prediction:
    """A score and its sign label (+1 iff score >= 0)."""

    score: float
    label: int


@dataclass(frozen=True)
class Dataset:
    """Feature rows with optional +/-1 labels, keyed by feature name."""

    feature_names: tuple[str, ...]
    rows: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self) -> None:
        names = tuple(str(n) for n in self.feature_names)
        rows = np.atleast_2d(np.asarray(self.rows, dtype=float))
        object.__setattr__(self, "feature_names", names)
        if len(set(names)) != len(names):
            raise InputError("dataset feature names must be unique")
        if rows.size and rows.shape[1] != len(names):
            raise InputError(
                f"dataset rows have {rows.shape[1]} values but header has {len(names)} features"
            )
        if rows.size == 0:
            rows = rows.reshape(0, len(names))
        if not np.all(np.isfinite(rows)):
            raise InputError("dataset values must be finite")
        rows = rows.copy()
        rows.flags.writeable = False
        object.__setattr__(self, "rows", rows)
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=int)
            if labels.shape != (rows.shape[0],):
                raise InputError("dataset labels must have one entry per row")
            if labels.size and not np.all(np.isin(labels, (-1, 1))):
                raise InputError("dataset labels must be -1 or +1")
            labels = labels.copy()
            labels.flags.writeable = False
            object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return int(self.rows.shape[0])

    def column(self, feature: str) -> np.ndarray:
        try:
            j = self.feature_names.index(feature)
        except ValueError:
            raise InputError(f"dataset has no feature named '{feature}'") from None
        return self.rows[:, j]


def validate_point(model: LinearModel, x: Sequence[float]) -> np.ndarray:
    xv = np.asarray(x, dtype=float)
    if xv.shape != (model.dim,):
        raise InputError(f"point has {xv.size} values but model expects {model.dim}")
    if not np.all(np.isfinite(xv)):
        raise InputError("point values must be finite")
    return xv


def predict(model: LinearModel, x: Sequence[float]) -> Prediction:
    """Score a point and label it +1 exactly when the score is >= 0."""
    s = model.score(x)
    return Prediction(score=s, label=1 if s >= 0.0 else -1)


def score_rows(model: LinearModel, data: Dataset) -> np.ndarray:
    """Scores for every dataset row; the dataset must be aligned to the model."""
    data = align_dataset(data, model)
    return data.rows @ model.coefficient_vector() + model.intercept


def align_dataset(data: Dataset, model: LinearModel) -> Dataset:
    """Reorder dataset columns to match the model's feature order.

    Matching is by name; a model feature missing from the dataset header is an
    error naming the feature.
    """
    if data.feature_names == model.feature_names:
        return data
    positions = []
    for name in model.feature_names:
        try:
            positions.append(data.feature_names.index(name))
        except ValueError:
            raise InputError(
                f"model feature '{name}' is missing from the dataset header"
            ) from None
    return Dataset(
        feature_names=model.feature_names,
        rows=data.rows[:, positions],
        labels=data.labels,
    )


def calibrate_threshold(model: LinearModel, data: Dataset, q: float) -> LinearModel:
    """Shift the intercept so a fraction ``q`` of rows is predicted +1.

    The threshold is placed at the ceil(q*n)-th largest intercept-free score;
    rows tied with that score are all admitted, so the realized positive rate
    may exceed ``q``. Coefficients are never changed, and the operation is
    idempotent at fixed ``q`` on fixed data.
    """
    if not (0.0 < q < 1.0):
        raise InputError(f"target positive rate must be in (0, 1), got {q}")
    aligned = align_dataset(data, model)
    if aligned.n == 0:
        raise InputError("cannot calibrate a threshold on an empty dataset")
    raw = aligned.rows @ model.coefficient_vector()
    k = math.ceil(q * aligned.n)
    threshold = float(np.sort(raw)[::-1][k - 1])
    return replace(model, intercept=-threshold)


# --- documents -------------------------------------------------------------

def model_to_document(model: LinearModel) -> dict:
    return {
        "intercept": model.intercept,
        "coefficients": {n: c for n, c in zip(model.feature_names, model.coefficients)},
    }


def model_from_document(doc: Mapping) -> LinearModel:
    if not isinstance(doc, Mapping):
        raise ParseError("model document must be a JSON object")
    for key in ("intercept", "coefficients"):
        if key not in doc:
            raise ParseError(f"model document is missing the '{key}' field")
    coeffs = doc["coefficients"]
    if not isinstance(coeffs, Mapping) or not coeffs:
        raise ParseError("model 'coefficients' must be a non-empty object of feature: number")
    names, values = [], []
    for name, value in coeffs.items():
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ParseError(f"coefficient for feature '{name}' is not a number")
        names.append(str(name))
        values.append(float(value))
    intercept = doc["intercept"]
    if not isinstance(intercept, (int, float)) or isinstance(intercept, bool):
        raise ParseError("model 'intercept' is not a number")
    return LinearModel(tuple(names), tuple(values), float(intercept))


def load_model(source: str | Path | Mapping) -> LinearModel:
    """Load a model from a parsed document or a JSON file path."""
    if isinstance(source, Mapping):
        return model_from_document(source)
    path = Path(source)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: invalid JSON ({e})") from None
    except OSError as e:
        raise InputError(f"{path}: {e.strerror or e}") from None
    return model_from_document(doc)


def save_model(model: LinearModel, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_document(model), indent=2) + "\n", encoding="utf-8")


def load_dataset(path: str | Path, label_column: str | None = None) -> Dataset:
    """Load a dataset from a headered CSV file.

    Values are parsed as decimal reals; the optional label column must contain
    only -1 or +1. Parse errors carry the row number and field name.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8-sig")
    except OSError as e:
        raise InputError(f"{path}: {e.strerror or e}") from None
    reader = csv.reader(text.splitlines())
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError(f"{path}: file is empty, expected a header row") from None
    header = [h.strip() for h in header]
    if label_column is not None and label_column not in header:
        raise ParseError(f"{path}: label column '{label_column}' not found in header")
    label_idx = header.index(label_column) if label_column is not None else None
    feature_names = tuple(h for i, h in enumerate(header) if i != label_idx)

    rows: list[list[float]] = []
    labels: list[int] = []
    for row_no, record in enumerate(reader, start=2):
        if not record or all(not cell.strip() for cell in record):
            continue
        if len(record) != len(header):
            raise ParseError(
                f"{path}: row {row_no} has {len(record)} cells, expected {len(header)}"
            )
        values = []
        for i, cell in enumerate(record):
            try:
                value = float(cell)
            except ValueError:
                raise ParseError(
                    f"{path}: row {row_no}, column '{header[i]}': "
                    f"could not parse {cell.strip()!r} as a number"
                ) from None
            if i == label_idx:
                if value not in (-1.0, 1.0):
                    raise ParseError(
                        f"{path}: row {row_no}, column '{header[i]}': "
                        f"label must be -1 or +1, got {cell.strip()!r}"
                    )
                labels.append(int(value))
            else:
                values.append(value)
        rows.append(values)

    matrix = np.asarray(rows, dtype=float) if rows else np.empty((0, len(feature_names)))
    return Dataset(
        feature_names=feature_names,
        rows=matrix,
        labels=np.asarray(labels, dtype=int) if label_idx is not None else None,
    )
