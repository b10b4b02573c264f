"""Feature-table ingestion, modality assembly, and standardization.

A dataset is an immutable bundle of an M x N float matrix, binary labels,
and names for both axes. CSV is the single on-disk format: UTF-8, header
row, one label column and one sample-id column, every other column a
numeric feature. Modalities (named feature subsets) are assembled by
column name, either from inline lists or from plain-text list files.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Dataset",
    "ModalitySpec",
    "StandardizationParams",
    "DataError",
    "load_csv",
    "save_csv",
    "load_feature_list",
    "assemble_modality",
    "fit_standardizer",
    "apply_standardizer",
    "take_rows",
]


class DataError(ValueError):
    """Raised for malformed files, unknown columns, or bad labels."""


@dataclass(frozen=True)
class Dataset:
    """Immutable M x N feature table with 0/1 labels.

    Label 1 is the positive class (event of interest), label 0 the
    complement. Feature names are unique and positionally aligned with
    the matrix columns; sample ids with the rows.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]
    sample_ids: tuple[str, ...]

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=np.float64)
        labs = np.asarray(self.labels)
        feats = feats.reshape(feats.shape[0], -1) if feats.ndim == 1 else feats
        if feats.ndim != 2:
            raise DataError(f"features must be 2-D, got shape {feats.shape}")
        m, n = feats.shape
        if not np.all(np.isfinite(feats)):
            bad = np.argwhere(~np.isfinite(feats))[0]
            raise DataError(f"non-finite feature value at row {bad[0]}, column {bad[1]}")
        if labs.shape != (m,):
            raise DataError(f"labels shape {labs.shape} does not match {m} samples")
        if labs.size and not np.isin(labs, (0, 1)).all():
            raise DataError("labels must contain only 0 and 1")
        if len(self.feature_names) != n:
            raise DataError(f"{len(self.feature_names)} feature names for {n} columns")
        if len(set(self.feature_names)) != n:
            raise DataError("feature names must be unique")
        if len(self.sample_ids) != m:
            raise DataError(f"{len(self.sample_ids)} sample ids for {m} rows")
        feats = feats.copy()
        feats.flags.writeable = False
        labs = labs.astype(np.int64).copy()
        labs.flags.writeable = False
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labs)
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "sample_ids", tuple(str(s) for s in self.sample_ids))

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class ModalitySpec:
    """Named, ordered feature subset (no duplicates)."""

    name: str
    feature_names: tuple[str, ...]

    def __post_init__(self):
        names = tuple(self.feature_names)
        if not names:
            raise DataError(f"modality {self.name!r} selects no features")
        if len(set(names)) != len(names):
            raise DataError(f"modality {self.name!r} has duplicate feature names")
        object.__setattr__(self, "feature_names", names)


@dataclass(frozen=True)
class StandardizationParams:
    """Per-column location/scale learned from a training split.

    Columns that were constant in the fitting data get scale 1.0 and are
    flagged in ``constant`` so callers can report them.
    """

    means: np.ndarray
    std_devs: np.ndarray
    constant: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        means = np.asarray(self.means, dtype=np.float64)
        stds = np.asarray(self.std_devs, dtype=np.float64)
        if means.shape != stds.shape or means.ndim != 1:
            raise DataError("means and std_devs must be 1-D and the same length")
        const = self.constant
        if const is None:
            const = np.zeros(means.shape, dtype=bool)
        const = np.asarray(const, dtype=bool)
        if const.shape != means.shape:
            raise DataError("constant mask length does not match means")
        if np.any(stds <= 0):
            raise DataError("std_devs must be strictly positive")
        for arr in (means, stds, const):
            arr.flags.writeable = False
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "std_devs", stds)
        object.__setattr__(self, "constant", const)


def load_csv(path, label_column: str, id_column: str, label_map: dict[str, int] | None = None) -> Dataset:
    """Read a feature table from ``path``.

    Every data row must parse completely; a malformed cell aborts the load
    with its row and column named rather than dropping the row. Labels must
    be 0/1 after applying ``label_map`` (raw cell -> 0/1), if given. Pass
    ``label_column=None`` for unlabeled prediction-time data; labels are
    then filled with 0 placeholders.
    """
    try:
        fh = open(path, "r", encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if len(set(header)) != len(header):
            dupes = sorted({h for h in header if header.count(h) > 1})
            raise DataError(f"{path}: duplicate header names {dupes}")
        if id_column not in header:
            raise DataError(f"{path}: missing id column {id_column!r}")
        if label_column is not None and label_column not in header:
            raise DataError(f"{path}: missing label column {label_column!r}")
        id_pos = header.index(id_column)
        label_pos = header.index(label_column) if label_column is not None else None
        feat_pos = [i for i in range(len(header)) if i != id_pos and i != label_pos]
        names = tuple(header[i] for i in feat_pos)

        rows, labels, ids = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise DataError(f"{path}: row {lineno} has {len(row)} cells, expected {len(header)}")
            ids.append(row[id_pos].strip())
            if label_pos is None:
                labels.append(0)
            else:
                cell = row[label_pos].strip()
                if label_map is not None and cell in label_map:
                    labels.append(label_map[cell])
                else:
                    try:
                        lab = int(cell)
                    except ValueError:
                        raise DataError(
                            f"{path}: row {lineno}: label {cell!r} is not 0/1 or a configured alias"
                        ) from None
                    labels.append(lab)
            vals = np.empty(len(feat_pos))
            for k, i in enumerate(feat_pos):
                try:
                    v = float(row[i])
                except ValueError:
                    raise DataError(
                        f"{path}: row {lineno}, column {header[i]!r}: non-numeric value {row[i]!r}"
                    ) from None
                if not math.isfinite(v):
                    raise DataError(f"{path}: row {lineno}, column {header[i]!r}: non-finite value {row[i]!r}")
                vals[k] = v
            rows.append(vals)

    labels_arr = np.asarray(labels, dtype=np.int64)
    if labels_arr.size and not np.isin(labels_arr, (0, 1)).all():
        bad = labels_arr[~np.isin(labels_arr, (0, 1))][0]
        raise DataError(f"{path}: label value {bad} outside {{0, 1}}")
    feats = np.asarray(rows) if rows else np.empty((0, len(names)))
    return Dataset(feats, labels_arr, names, tuple(ids))


def save_csv(d: Dataset, path, label_column: str = "label", id_column: str = "id") -> None:
    """Write ``d`` in the load_csv format.

    Floats are written with repr (shortest round-trip form), so a
    save/load cycle reproduces the matrix bit-exactly.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([id_column, label_column, *d.feature_names])
        for i in range(d.n_samples):
            writer.writerow([d.sample_ids[i], int(d.labels[i]), *[repr(float(v)) for v in d.features[i]]])


def load_feature_list(path) -> tuple[str, ...]:
    """Read a pre-selection list: one feature name per line, # comments."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise DataError(f"cannot open {path}: {exc}") from exc
    names = []
    for line in lines:
        stripped = line.split("#", 1)[0].strip()
        if stripped:
            names.append(stripped)
    if not names:
        raise DataError(f"{path}: feature list is empty")
    return tuple(names)


def assemble_modality(d: Dataset, spec: ModalitySpec) -> Dataset:
    """Column subset of ``d`` in spec order. Unknown names are an error."""
    index = {name: i for i, name in enumerate(d.feature_names)}
    missing = [name for name in spec.feature_names if name not in index]
    if missing:
        raise DataError(f"modality {spec.name!r}: unknown features {missing}")
    cols = [index[name] for name in spec.feature_names]
    return Dataset(d.features[:, cols], d.labels, spec.feature_names, d.sample_ids)


def take_rows(d: Dataset, indices) -> Dataset:
    """Row subset of ``d`` (used by splits and folds)."""
    idx = np.asarray(indices, dtype=np.intp)
    return Dataset(
        d.features[idx],
        d.labels[idx],
        d.feature_names,
        tuple(d.sample_ids[i] for i in idx),
    )


def fit_standardizer(d: Dataset) -> StandardizationParams:
    """Column means and sample standard deviations (denominator M - 1).

    Needs at least two samples. Constant columns get scale 1.0 and a flag
    instead of a zero divide.
    """
    if d.n_samples < 2:
        raise DataError("standardizer needs at least 2 samples")
    means = d.features.mean(axis=0)
    stds = d.features.std(axis=0, ddof=1)
    const = stds == 0.0
    stds = np.where(const, 1.0, stds)
    return StandardizationParams(means, stds, const)


def apply_standardizer(d: Dataset, p: StandardizationParams) -> Dataset:
    """(x - mean) / std per column; dimension mismatch is an error."""
    if p.means.shape[0] != d.n_features:
        raise DataError(f"standardizer has {p.means.shape[0]} columns, dataset has {d.n_features}")
    feats = (d.features - p.means) / p.std_devs
    return Dataset(feats, d.labels, d.feature_names, d.sample_ids)
