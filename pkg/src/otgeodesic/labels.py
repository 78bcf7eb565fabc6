"""Distances between class-conditional feature distributions."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import split_by_class, validate
from .errors import DimensionMismatchError, NotPSDError, ShapeMismatchError, ValidationError
from .ot import SinkhornConfig, solve, sqeuclidean_cost

PSD_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class LabelDistanceMatrix:
    """Squared W2 between every class of ``row_dataset`` and of ``col_dataset``."""

    m: np.ndarray
    method: str
    row_dataset: str = ""
    col_dataset: str = ""

    @property
    def shape(self):
        return self.m.shape

    def transpose(self):
        return LabelDistanceMatrix(self.m.T.copy(), self.method, self.col_dataset, self.row_dataset)

    def permuted(self, row_perm=None, col_perm=None):
        m = self.m
        if row_perm is not None:
            m = m[np.asarray(row_perm)]
        if col_perm is not None:
            m = m[:, np.asarray(col_perm)]
        return LabelDistanceMatrix(m, self.method, self.row_dataset, self.col_dataset)


@dataclass(frozen=True)
class LabelConfig:
    """How the inner class-to-class W2 is evaluated.

    ``class_cap`` bounds the samples per class fed to the exact inner problem;
    larger classes are subsampled without replacement using ``seed``.
    """

    method: str = "exact"
    class_cap: int | None = 500
    seed: int = 0
    inner_solver: str = "exact"
    sinkhorn: SinkhornConfig = field(default_factory=SinkhornConfig)

    def __post_init__(self):
        if self.method not in ("exact", "gaussian"):
            raise ValidationError(f"label method must be 'exact' or 'gaussian', got {self.method!r}")
        if self.class_cap is not None and self.class_cap < 1:
            raise ValidationError("class_cap must be positive")


def _psd_sqrt(cov, name):
    cov = np.asarray(cov, dtype=np.float64)
    cov = 0.5 * (cov + cov.T)
    w, V = np.linalg.eigh(cov)
    if w.size and w.min() < -PSD_TOL:
        raise NotPSDError(f"{name} has eigenvalue {w.min():.3g}")
    return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T


def bures_w2_squared(mean1, cov1, mean2, cov2):
    """Closed-form squared W2 between two Gaussians."""
    mean1 = np.atleast_1d(np.asarray(mean1, dtype=np.float64))
    mean2 = np.atleast_1d(np.asarray(mean2, dtype=np.float64))
    cov1 = np.atleast_2d(np.asarray(cov1, dtype=np.float64))
    cov2 = np.atleast_2d(np.asarray(cov2, dtype=np.float64))
    d = mean1.shape[0]
    if mean2.shape != (d,) or cov1.shape != (d, d) or cov2.shape != (d, d):
        raise ShapeMismatchError(
            f"incompatible moments: {mean1.shape}, {cov1.shape}, {mean2.shape}, {cov2.shape}"
        )
    root1 = _psd_sqrt(cov1, "cov1")
    _psd_sqrt(cov2, "cov2")
    if np.array_equal(mean1, mean2) and np.array_equal(cov1, cov2):
        return 0.0
    cross = root1 @ (0.5 * (cov2 + cov2.T)) @ root1
    cross_eigs = np.linalg.eigvalsh(0.5 * (cross + cross.T))
    trace_term = np.trace(cov1) + np.trace(cov2) - 2.0 * np.sqrt(np.clip(cross_eigs, 0.0, None)).sum()
    diff = mean1 - mean2
    return max(float(diff @ diff + trace_term), 0.0)


def _capped(samples, cap, seed):
    if cap is None or samples.shape[0] <= cap:
        return samples
    idx = np.sort(np.random.default_rng(seed).choice(samples.shape[0], cap, replace=False))
    return samples[idx]


def _in_canonical_order(a, b):
    # solving the pair in a fixed order makes the result bit-symmetric
    return (a.shape, a.tobytes()) <= (b.shape, b.tobytes())


def class_w2_squared(samples_a, samples_b, cfg=None):
    """Squared W2 between two uniform empirical class-conditionals.

    Symmetric to the last bit: swapping the arguments gives the same value.
    """
    cfg = cfg or LabelConfig()
    a = _capped(np.ascontiguousarray(samples_a, dtype=np.float64), cfg.class_cap, cfg.seed)
    b = _capped(np.ascontiguousarray(samples_b, dtype=np.float64), cfg.class_cap, cfg.seed)
    if a.shape == b.shape and np.array_equal(a, b):
        return 0.0
    if not _in_canonical_order(a, b):
        a, b = b, a
    C = sqeuclidean_cost(a, b)
    return solve(C, solver=cfg.inner_solver, cfg=cfg.sinkhorn, max_cells=None)[1]


def label_distance_matrix(dsA, dsB, method=None, cfg=None):
    """Class-by-class squared W2 between two hard-labeled datasets.

    Entry ``(i, j)`` compares class ``i`` of ``dsA`` with class ``j`` of
    ``dsB``. ``method`` overrides ``cfg.method`` when given.
    """
    cfg = cfg or LabelConfig()
    method = method or cfg.method
    if method not in ("exact", "gaussian"):
        raise ValidationError(f"label method must be 'exact' or 'gaussian', got {method!r}")
    validate(dsA)
    validate(dsB)
    if dsA.dim != dsB.dim:
        raise DimensionMismatchError(f"feature dims differ: {dsA.dim} vs {dsB.dim}")
    condA = split_by_class(dsA)
    same = dsA is dsB or (
        np.array_equal(dsA.features, dsB.features) and np.array_equal(dsA.labels, dsB.labels)
    )
    condB = condA if same else split_by_class(dsB)

    def entry(ca, cb):
        if method == "gaussian":
            ka = np.concatenate([ca.mean.ravel(), ca.covariance.ravel()])
            kb = np.concatenate([cb.mean.ravel(), cb.covariance.ravel()])
            if not _in_canonical_order(ka, kb):
                ca, cb = cb, ca
            return bures_w2_squared(ca.mean, ca.covariance, cb.mean, cb.covariance)
        return class_w2_squared(ca.samples, cb.samples, cfg)

    M = np.zeros((len(condA), len(condB)))
    for i, ca in enumerate(condA):
        for j, cb in enumerate(condB):
            if same and j < i:
                M[i, j] = M[j, i]
            elif same and i == j:
                M[i, j] = 0.0
            else:
                M[i, j] = entry(ca, cb)
    return LabelDistanceMatrix(M, method, dsA.id, dsB.id)


def soft_label_cost(yA, yB, M):
    """Bilinear label cost ``yA^T M yB``; exact matrix entry for one-hot labels."""
    m = M.m if isinstance(M, LabelDistanceMatrix) else np.asarray(M, dtype=np.float64)
    yA = np.asarray(yA, dtype=np.float64)
    yB = np.asarray(yB, dtype=np.float64)
    if yA.shape != (m.shape[0],) or yB.shape != (m.shape[1],):
        raise ShapeMismatchError(f"labels {yA.shape}, {yB.shape} do not fit matrix {m.shape}")
    return float(yA @ m @ yB)


def label_cost_matrix(YA, YB, M):
    """All pairwise bilinear label costs between the rows of ``YA`` and ``YB``."""
    m = M.m if isinstance(M, LabelDistanceMatrix) else np.asarray(M, dtype=np.float64)
    YA = np.asarray(YA, dtype=np.float64)
    YB = np.asarray(YB, dtype=np.float64)
    if YA.shape[1] != m.shape[0] or YB.shape[1] != m.shape[1]:
        raise ShapeMismatchError(f"labels {YA.shape}, {YB.shape} do not fit matrix {m.shape}")
    return (YA @ m) @ YB.T
