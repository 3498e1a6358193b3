"""Tabular regression data: loading, seeded shuffling, train/test splits and CV folds.

All shuffles use numpy's PCG64 bit generator (``np.random.default_rng``), whose
stream is fixed across platforms for a given integer seed.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np


class DataError(ValueError):
    """Base class for problems with input data."""


class MissingTarget(DataError):
    def __init__(self, target: str, path: str = ""):
        super().__init__(f"target column {target!r} not found in {path or 'header'}")
        self.target = target


class NonNumericCell(DataError):
    def __init__(self, row: int, col: str, value: str):
        super().__init__(f"row {row}, column {col!r}: cannot use {value!r} as a finite number")
        self.row = row
        self.col = col


class EmptyFile(DataError):
    pass


class DegenerateSplit(DataError):
    pass


class TooFewRows(DataError):
    pass


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    feature_names: tuple[str, ...]
    X: np.ndarray
    y: np.ndarray
    description: str = field(default="", compare=False)

    def __post_init__(self):
        X = _frozen(self.X)
        y = _frozen(self.y)
        if X.ndim != 2 or y.ndim != 1:
            raise DataError("X must be 2-d and y 1-d")
        n, p = X.shape
        if n < 1 or p < 1:
            raise DataError(f"need at least one row and one feature, got {X.shape}")
        if y.shape[0] != n:
            raise DataError(f"X has {n} rows but y has {y.shape[0]}")
        names = tuple(self.feature_names)
        if len(names) != p:
            raise DataError(f"{len(names)} feature names for {p} columns")
        if len(set(names)) != p:
            raise DataError("feature names must be unique")
        if not (np.isfinite(X).all() and np.isfinite(y).all()):
            raise DataError("all values must be finite")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "feature_names", names)

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def take(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=np.intp)
        return Dataset(self.feature_names, self.X[rows], self.y[rows], self.description)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.75
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError(f"train_fraction must be in (0, 1), got {self.train_fraction}")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True, eq=False)
class FoldAssignment:
    fold_of_row: np.ndarray
    k: int

    def train_test(self, fold: int) -> tuple[np.ndarray, np.ndarray]:
        """Row indices (train, validation) for one fold."""
        mask = self.fold_of_row == fold
        return np.flatnonzero(~mask), np.flatnonzero(mask)

    def sizes(self) -> list[int]:
        return np.bincount(self.fold_of_row, minlength=self.k).tolist()


def _parse_cell(text: str, row: int, col: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise NonNumericCell(row, col, text) from None
    if not math.isfinite(v):
        raise NonNumericCell(row, col, text)
    return v


def read_table(path) -> tuple[list[str], np.ndarray]:
    """Header and numeric body of a comma-separated file.

    Row numbers in errors are 1-based data rows (the header is row 0).
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or not any(h.strip() for h in header):
            raise EmptyFile(f"{path}: no header row")
        header = [h.strip() for h in header]
        rows = []
        for i, rec in enumerate(reader, start=1):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(header):
                raise DataError(f"{path}: row {i} has {len(rec)} cells, header has {len(header)}")
            rows.append([_parse_cell(c.strip(), i, header[j]) for j, c in enumerate(rec)])
    if not rows:
        raise EmptyFile(f"{path}: no data rows")
    return header, np.array(rows, dtype=float)


def load_csv(path, target: str) -> Dataset:
    """Read a headered numeric CSV; the ``target`` column becomes y."""
    header, data = read_table(path)
    if target not in header:
        raise MissingTarget(target, str(path))
    t = header.index(target)
    names = tuple(h for j, h in enumerate(header) if j != t)
    return Dataset(names, np.delete(data, t, axis=1), data[:, t], description=Path(path).name)


def save_csv(d: Dataset, path, target: str = "y") -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([*d.feature_names, target])
        for xr, yv in zip(d.X, d.y):
            w.writerow([repr(float(v)) for v in xr] + [repr(float(yv))])


def permutation(n: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).permutation(n)


def shuffle_split(d: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    n = d.n_rows
    n_train = math.ceil(spec.train_fraction * n)
    if n_train < 1 or n_train >= n:
        raise DegenerateSplit(f"{n} rows at fraction {spec.train_fraction} leaves an empty side")
    perm = permutation(n, spec.seed)
    return d.take(perm[:n_train]), d.take(perm[n_train:])


def make_folds(d: Dataset | int, k: int, seed: int) -> FoldAssignment:
    """Deal a seeded permutation of the rows round-robin into ``k`` folds."""
    n = d if isinstance(d, int) else d.n_rows
    if k < 2:
        raise ValueError("k must be at least 2")
    if n < k:
        raise TooFewRows(f"{n} rows cannot fill {k} folds")
    fold = np.empty(n, dtype=np.intp)
    fold[permutation(n, seed)] = np.arange(n) % k
    fold.setflags(write=False)
    return FoldAssignment(fold, k)


def from_arrays(X, y, feature_names: Sequence[str] | None = None, description: str = "") -> Dataset:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if feature_names is None:
        feature_names = [f"x{i + 1}" for i in range(X.shape[1])]
    return Dataset(tuple(feature_names), X, np.asarray(y, dtype=float), description)
