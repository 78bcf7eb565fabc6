"""Interpolated datasets built from transport maps out of a common source."""
from __future__ import annotations

import numpy as np

from .data import LabeledDataset, PaddedLabelSpace, SimplexWeights, validate
from .errors import OutOfRangeError, ShapeMismatchError, SourceMismatchError
from .maps import identity_map
from .ot import Coupling, as_points


def _as_weights(a):
    return a if isinstance(a, SimplexWeights) else SimplexWeights(a)


def check_common_source(maps):
    if not maps:
        raise ShapeMismatchError("need at least one map")
    first = maps[0]
    for mp in maps[1:]:
        if mp.source_id != first.source_id:
            raise SourceMismatchError(f"maps start from {first.source_id!r} and {mp.source_id!r}")
        if mp.n != first.n:
            raise ShapeMismatchError(f"maps have {first.n} and {mp.n} rows")
        if mp.mapped_features.shape[1] != first.mapped_features.shape[1]:
            raise ShapeMismatchError("maps disagree on feature dimension")


def combine(maps, a, space=None, id=None):
    """Dataset at weights ``a`` on the generalized geodesic spanned by ``maps``.

    Features are the ``a``-weighted sum of the mapped features; labels are
    the mapped labels zero-padded into ``space`` and weighted the same way.
    The output keeps one row per source sample.
    """
    check_common_source(maps)
    a = _as_weights(a)
    if len(a) != len(maps):
        raise ShapeMismatchError(f"{len(a)} weights for {len(maps)} maps")
    counts = tuple(mp.n_target_classes for mp in maps)
    space = space or PaddedLabelSpace(counts)
    if space.per_dataset_class_counts != counts:
        raise ShapeMismatchError(f"label space {space.per_dataset_class_counts} does not match maps {counts}")
    w = a.a
    vertex = a.vertex_index()
    if vertex is not None:
        features = maps[vertex].mapped_features.copy()
        labels = space.pad(maps[vertex].mapped_labels, vertex)
    else:
        features = w[0] * maps[0].mapped_features
        for wj, mp in zip(w[1:], maps[1:]):
            features = features + wj * mp.mapped_features
        labels = np.zeros((maps[0].n, space.total_dim))
        for j, mp in enumerate(maps):
            labels[:, space.block(j)] = w[j] * mp.mapped_labels
    names = space.names([mp.target_class_names for mp in maps], [mp.target_id for mp in maps])
    return LabeledDataset(features, labels, names, id or f"geodesic({maps[0].source_id})")


def mccann_dataset(Q, mp, t, id=None):
    """Point ``t`` of McCann's interpolation from ``Q`` along the map ``mp``.

    Labels live in the two-block space ``[C_Q ; C_P]``.
    """
    validate(Q)
    if not 0.0 <= t <= 1.0:
        raise OutOfRangeError(f"t={t} outside [0, 1]")
    if mp.source_id != Q.id or mp.n != Q.n:
        raise SourceMismatchError(f"map starts from {mp.source_id!r}, not {Q.id!r}")
    return combine([identity_map(Q), mp], SimplexWeights([1.0 - t, t]), id=id or f"mccann({Q.id},{t:g})")


def displacement_interpolate(coupling, X_src, X_tgt, t, n_samples, seed=0):
    """Sample the displacement interpolation at time ``t`` of a coupling.

    Index pairs ``(i, j)`` are drawn with probability ``pi[i, j]`` and emitted
    as ``(1 - t) x_i + t y_j``.
    """
    if not 0.0 <= t <= 1.0:
        raise OutOfRangeError(f"t={t} outside [0, 1]")
    pi = coupling.pi if isinstance(coupling, Coupling) else np.asarray(coupling, dtype=np.float64)
    X = as_points(X_src)
    Y = as_points(X_tgt)
    if pi.shape != (X.shape[0], Y.shape[0]) or X.shape[1] != Y.shape[1]:
        raise ShapeMismatchError(f"coupling {pi.shape} vs points {X.shape}, {Y.shape}")
    p = np.clip(pi.ravel(), 0.0, None)
    p = p / p.sum()
    idx = np.random.default_rng(seed).choice(p.size, size=n_samples, p=p)
    i, j = np.divmod(idx, Y.shape[0])
    return (1.0 - t) * X[i] + t * Y[j]
