"""Labeled dataset containers and label-space bookkeeping."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    BadWeightsError,
    EmptyClassError,
    IndexOutOfRangeError,
    NonFiniteValueError,
    NonStochasticLabelError,
    ShapeMismatchError,
    SoftLabelsError,
)

LABEL_SUM_TOL = 1e-9


def _frozen(arr, dtype=np.float64):
    out = np.array(arr, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class LabeledDataset:
    """Features plus one label distribution per sample.

    Hard labels are stored as one-hot rows. Arrays are copied and made
    read-only on construction; invariants are checked by :func:`validate`.
    """

    features: np.ndarray
    labels: np.ndarray
    class_names: tuple = None
    id: str = "dataset"

    def __post_init__(self):
        object.__setattr__(self, "features", _frozen(self.features))
        object.__setattr__(self, "labels", _frozen(self.labels))
        if self.class_names is None:
            n_classes = self.labels.shape[1] if self.labels.ndim == 2 else 0
            names = tuple(str(c) for c in range(n_classes))
        else:
            names = tuple(str(c) for c in self.class_names)
        object.__setattr__(self, "class_names", names)

    @classmethod
    def from_hard_labels(cls, features, y, n_classes=None, class_names=None, id="dataset"):
        y = np.asarray(y)
        if y.ndim != 1 or not np.issubdtype(y.dtype, np.integer):
            raise ShapeMismatchError("hard labels must be a 1-d integer array")
        if y.size and y.min() < 0:
            raise IndexOutOfRangeError("negative class id")
        if n_classes is None:
            n_classes = len(class_names) if class_names is not None else int(y.max()) + 1
        if y.size and y.max() >= n_classes:
            raise IndexOutOfRangeError(f"class id {int(y.max())} >= n_classes={n_classes}")
        onehot = np.zeros((y.shape[0], n_classes))
        onehot[np.arange(y.shape[0]), y] = 1.0
        return cls(features, onehot, class_names, id)

    @property
    def n(self):
        return self.features.shape[0]

    @property
    def dim(self):
        return self.features.shape[1]

    @property
    def n_classes(self):
        return self.labels.shape[1]

    @property
    def is_hard(self):
        L = self.labels
        return bool(np.all((L == 0.0) | (L == 1.0)) and np.all((L == 1.0).sum(axis=1) == 1))

    @property
    def hard_labels(self):
        """Integer class id per sample; raises for soft-labeled data."""
        if not self.is_hard:
            raise SoftLabelsError(f"dataset {self.id!r} is not hard-labeled")
        return self.labels.argmax(axis=1)

    def with_id(self, id):
        return replace(self, id=id)


def validate(ds):
    """Raise if ``ds`` breaks any dataset invariant, else return None."""
    X, L = ds.features, ds.labels
    if X.ndim != 2 or L.ndim != 2:
        raise ShapeMismatchError("features and labels must be 2-d")
    if X.shape[0] != L.shape[0]:
        raise ShapeMismatchError(f"{X.shape[0]} feature rows but {L.shape[0]} label rows")
    if X.shape[0] < 1 or X.shape[1] < 1 or L.shape[1] < 1:
        raise ShapeMismatchError(f"empty dataset: features {X.shape}, labels {L.shape}")
    if len(ds.class_names) != L.shape[1]:
        raise ShapeMismatchError(f"{len(ds.class_names)} class names for {L.shape[1]} label columns")
    if not np.all(np.isfinite(X)):
        raise NonFiniteValueError(f"dataset {ds.id!r} has non-finite features")
    if not np.all(np.isfinite(L)):
        raise NonFiniteValueError(f"dataset {ds.id!r} has non-finite labels")
    if np.any(L < 0):
        raise NonStochasticLabelError(f"dataset {ds.id!r} has negative label mass")
    dev = np.abs(L.sum(axis=1) - 1.0)
    if np.any(dev > LABEL_SUM_TOL):
        row = int(dev.argmax())
        raise NonStochasticLabelError(f"label row {row} sums to {L[row].sum():.12g}")


@dataclass(frozen=True, eq=False)
class ClassConditional:
    class_index: int
    samples: np.ndarray
    mean: np.ndarray
    covariance: np.ndarray


def empirical_moments(samples):
    """Mean and population (1/n) covariance of the rows of ``samples``."""
    samples = np.asarray(samples, dtype=np.float64)
    mean = samples.mean(axis=0)
    centered = samples - mean
    cov = centered.T @ centered / samples.shape[0]
    return mean, 0.5 * (cov + cov.T)


def split_by_class(ds):
    validate(ds)
    y = ds.hard_labels
    out = []
    for c in range(ds.n_classes):
        samples = ds.features[y == c]
        if samples.shape[0] == 0:
            raise EmptyClassError(f"class {ds.class_names[c]!r} of {ds.id!r} has no samples")
        mean, cov = empirical_moments(samples)
        out.append(ClassConditional(c, _frozen(samples), _frozen(mean), _frozen(cov)))
    return out


@dataclass(frozen=True, eq=False)
class SimplexWeights:
    a: np.ndarray

    def __post_init__(self):
        a = np.atleast_1d(np.asarray(self.a, dtype=np.float64))
        if a.ndim != 1 or a.size == 0:
            raise BadWeightsError("weights must be a non-empty vector")
        if not np.all(np.isfinite(a)) or np.any(a < 0):
            raise BadWeightsError(f"weights must be finite and nonnegative, got {a}")
        if abs(a.sum() - 1.0) > LABEL_SUM_TOL:
            raise BadWeightsError(f"weights sum to {a.sum():.12g}, not 1")
        object.__setattr__(self, "a", _frozen(a))

    @classmethod
    def vertex(cls, m, i):
        a = np.zeros(m)
        a[i] = 1.0
        return cls(a)

    @classmethod
    def uniform(cls, m):
        return cls(np.full(m, 1.0 / m))

    def __len__(self):
        return self.a.size

    def vertex_index(self):
        """Index of the single unit entry, or None off the vertices."""
        hits = np.flatnonzero(self.a == 1.0)
        if hits.size == 1 and np.count_nonzero(self.a) == 1:
            return int(hits[0])
        return None


@dataclass(frozen=True)
class PaddedLabelSpace:
    """Block layout that places the label vectors of m datasets side by side."""

    per_dataset_class_counts: tuple
    offsets: tuple = field(init=False)
    total_dim: int = field(init=False)

    def __post_init__(self):
        counts = tuple(int(c) for c in self.per_dataset_class_counts)
        if not counts or any(c < 1 for c in counts):
            raise ShapeMismatchError(f"class counts must be positive, got {counts}")
        object.__setattr__(self, "per_dataset_class_counts", counts)
        object.__setattr__(self, "offsets", tuple(int(o) for o in np.cumsum((0,) + counts[:-1])))
        object.__setattr__(self, "total_dim", int(sum(counts)))

    @classmethod
    def for_datasets(cls, datasets):
        return cls(tuple(ds.n_classes for ds in datasets))

    @property
    def m(self):
        return len(self.per_dataset_class_counts)

    def block(self, i):
        if not 0 <= i < self.m:
            raise IndexOutOfRangeError(f"dataset index {i} outside 0..{self.m - 1}")
        start = self.offsets[i]
        return slice(start, start + self.per_dataset_class_counts[i])

    def pad(self, Y, i):
        """Embed an (n, C_i) label matrix of dataset ``i`` into (n, total_dim)."""
        Y = np.asarray(Y, dtype=np.float64)
        sl = self.block(i)
        if Y.shape[-1] != sl.stop - sl.start:
            raise ShapeMismatchError(f"dataset {i} has {sl.stop - sl.start} classes, label has {Y.shape[-1]}")
        out = np.zeros(Y.shape[:-1] + (self.total_dim,))
        out[..., sl] = Y
        return out

    def names(self, class_names_per_dataset, dataset_ids=None):
        ids = dataset_ids or [str(i) for i in range(self.m)]
        return tuple(f"{ids[i]}:{c}" for i, names in enumerate(class_names_per_dataset) for c in names)


def pad_label(y, i, space):
    """Zero-pad the label vector ``y`` of dataset ``i`` into ``space``."""
    return space.pad(y, i)


def harden(ds):
    """Replace each label distribution by the one-hot vector of its argmax."""
    validate(ds)
    return LabeledDataset.from_hard_labels(
        ds.features, ds.labels.argmax(axis=1), ds.n_classes, ds.class_names, ds.id
    )


def uniform_weights(n):
    return np.full(n, 1.0 / n)
