"""Dataset-to-dataset transport maps realized on the source samples."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .data import LabeledDataset, validate
from .errors import DegenerateRowError, DimensionMismatchError, KTooLargeError, ValidationError
from .labels import label_distance_matrix
from .ot import as_points
from .otdd import OtddConfig, otdd

MAP_KINDS = ("barycentric", "batched_barycentric", "identity")


@dataclass(frozen=True, eq=False)
class DatasetMap:
    """Image of every source sample under a map into the target dataset.

    Row ``i`` of ``mapped_features`` / ``mapped_labels`` is where source
    sample ``i`` lands; labels live in the target's label space.
    """

    source_id: str
    target_id: str
    mapped_features: np.ndarray
    mapped_labels: np.ndarray
    kind: str
    target_class_names: tuple = None

    def __post_init__(self):
        if self.kind not in MAP_KINDS:
            raise ValidationError(f"unknown map kind {self.kind!r}")
        if self.kind == "identity" and self.source_id != self.target_id:
            raise ValidationError("identity map must have equal source and target")
        for name in ("mapped_features", "mapped_labels"):
            arr = np.array(getattr(self, name), dtype=np.float64, copy=True)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.mapped_features.shape[0] != self.mapped_labels.shape[0]:
            raise ValidationError("mapped features and labels disagree on row count")
        if self.target_class_names is None:
            names = tuple(str(c) for c in range(self.mapped_labels.shape[1]))
            object.__setattr__(self, "target_class_names", names)

    @property
    def n(self):
        return self.mapped_features.shape[0]

    @property
    def n_target_classes(self):
        return self.mapped_labels.shape[1]

    def pushforward(self, id=None):
        return LabeledDataset(
            self.mapped_features,
            self.mapped_labels,
            self.target_class_names,
            id or f"{self.target_id}<-{self.source_id}",
        )


def _project_rows(pi, P):
    mass = pi.sum(axis=1)
    bad = np.flatnonzero(mass < 1e-12)
    if bad.size:
        raise DegenerateRowError(f"coupling row {int(bad[0])} carries mass {mass[bad[0]]:.3g}")
    W = pi / mass[:, None]
    features = W @ P.features
    labels = W @ P.labels
    labels /= labels.sum(axis=1, keepdims=True)
    return features, labels


def barycentric_map(Q, P, cfg=None, label_matrix=None):
    """Map each sample of ``Q`` to the coupling-weighted mean of ``P``.

    Row ``i`` of the OTDD coupling, rescaled to sum to one, weights the
    features and one-hot labels of ``P``; mapped labels are therefore soft.
    """
    cfg = cfg or OtddConfig()
    res = otdd(Q, P, cfg, label_matrix)
    features, labels = _project_rows(res.coupling.pi, P)
    return DatasetMap(Q.id, P.id, features, labels, "barycentric", P.class_names)


def _subset(ds, idx, suffix):
    return LabeledDataset(ds.features[idx], ds.labels[idx], ds.class_names, f"{ds.id}[{suffix}]")


def batched_barycentric_map(Q, P, batch_size, seed=0, cfg=None, label_matrix=None):
    """Barycentric map solved on consecutive batches of ``Q``.

    Each batch of ``Q`` (in original order) is coupled with a batch of up to
    ``batch_size`` samples of ``P``. ``P`` batches are drawn without
    replacement from a seeded permutation; when fewer than a full batch
    remain, a fresh permutation is started. If ``batch_size >= len(P)`` the
    whole of ``P`` is used for every batch. The label matrix is computed once
    on the full datasets.
    """
    cfg = cfg or OtddConfig()
    if batch_size < 2:
        raise ValidationError(f"batch_size must be at least 2, got {batch_size}")
    validate(Q)
    validate(P)
    if Q.dim != P.dim:
        raise DimensionMismatchError(f"feature dims differ: {Q.dim} vs {P.dim}")
    M = label_matrix if label_matrix is not None else label_distance_matrix(Q, P, cfg=cfg.label)
    rng = np.random.default_rng(seed)
    p_size = min(batch_size, P.n)
    perm = None
    cursor = 0
    features = np.empty((Q.n, P.dim))
    labels = np.empty((Q.n, P.n_classes))
    for start in range(0, Q.n, batch_size):
        q_idx = np.arange(start, min(start + batch_size, Q.n))
        if p_size == P.n:
            p_idx = np.arange(P.n)
        else:
            if perm is None or cursor + p_size > P.n:
                perm = rng.permutation(P.n)
                cursor = 0
            p_idx = np.sort(perm[cursor:cursor + p_size])
            cursor += p_size
        Qb = Q if q_idx.size == Q.n else _subset(Q, q_idx, f"{start}:{q_idx[-1] + 1}")
        Pb = P if p_idx.size == P.n else _subset(P, p_idx, "batch")
        res = otdd(Qb, Pb, cfg, M)
        features[q_idx], labels[q_idx] = _project_rows(res.coupling.pi, Pb)
    return DatasetMap(Q.id, P.id, features, labels, "batched_barycentric", P.class_names)


def identity_map(Q):
    validate(Q)
    return DatasetMap(Q.id, Q.id, Q.features, Q.labels, "identity", Q.class_names)


def knn_pseudolabel(unlabeled, few_shot, k=1, id="pseudolabeled"):
    """Hard labels for ``unlabeled`` by majority vote of ``k`` nearest neighbours.

    Equidistant neighbours are taken in ``few_shot`` row order; vote ties go
    to the lowest class index.
    """
    validate(few_shot)
    y = few_shot.hard_labels
    X = as_points(unlabeled)
    if X.ndim != 2 or X.shape[1] != few_shot.dim:
        raise DimensionMismatchError(f"unlabeled points {X.shape} vs few-shot dim {few_shot.dim}")
    if not 1 <= k <= few_shot.n:
        raise KTooLargeError(f"k={k} but only {few_shot.n} labeled samples")
    D = _kernels.sqdist(np.ascontiguousarray(X), np.ascontiguousarray(few_shot.features))
    votes = _kernels.knn_vote(D, y.astype(np.int64), int(k), few_shot.n_classes)
    return LabeledDataset.from_hard_labels(X, votes, few_shot.n_classes, few_shot.class_names, id)
