"""Seeded synthetic labeled datasets.

All generators draw from ``numpy.random.default_rng(seed)`` (PCG64), so a
dataset is a deterministic function of its parameters and seed.
"""
from __future__ import annotations

import numpy as np

from .data import LabeledDataset
from .errors import NotPSDError, ShapeMismatchError
from .labels import PSD_TOL


def _cov_root(cov, index):
    cov = np.atleast_2d(np.asarray(cov, dtype=np.float64))
    sym = 0.5 * (cov + cov.T)
    if not np.allclose(cov, sym, atol=1e-9):
        raise NotPSDError(f"covariance {index} is not symmetric")
    w, V = np.linalg.eigh(sym)
    if w.min() < -PSD_TOL:
        raise NotPSDError(f"covariance {index} has eigenvalue {w.min():.3g}")
    return V * np.sqrt(np.clip(w, 0.0, None))


def gaussian_mixture(n_per_class, means, covs, seed=0, class_names=None, id="mixture"):
    """``n_per_class`` draws from each Gaussian component; class = component index."""
    means = [np.atleast_1d(np.asarray(mu, dtype=np.float64)) for mu in means]
    covs = list(covs)
    if not means or len(means) != len(covs):
        raise ShapeMismatchError(f"{len(means)} means for {len(covs)} covariances")
    dim = means[0].size
    if any(mu.shape != (dim,) for mu in means):
        raise ShapeMismatchError("component means differ in dimension")
    roots = [_cov_root(c, i) for i, c in enumerate(covs)]
    if any(r.shape != (dim, dim) for r in roots):
        raise ShapeMismatchError("covariance shape does not match mean dimension")
    rng = np.random.default_rng(seed)
    X = np.concatenate([mu + rng.standard_normal((n_per_class, dim)) @ R.T for mu, R in zip(means, roots)])
    y = np.repeat(np.arange(len(means)), n_per_class)
    return LabeledDataset.from_hard_labels(X, y, len(means), class_names, id)


def checkerboard(n_per_class, grid=4, spacing=1.0, std=0.1, seed=0, id="checkerboard"):
    """``grid x grid`` isotropic clusters on a square lattice, one class each.

    Component ``r * grid + c`` sits at ``spacing * (c, r)``.
    """
    means = [spacing * np.array([c, r], dtype=np.float64) for r in range(grid) for c in range(grid)]
    covs = [std**2 * np.eye(2)] * len(means)
    return gaussian_mixture(n_per_class, means, covs, seed, id=id)


def shifted_copy(ds, offset, relabel=None, id=None):
    """Translate the features of ``ds``; optionally permute or rename its classes.

    ``relabel`` is either a permutation of class indices (new index of each
    old class) or a sequence of new class names.
    """
    offset = np.atleast_1d(np.asarray(offset, dtype=np.float64))
    if offset.shape != (ds.dim,):
        raise ShapeMismatchError(f"offset {offset.shape} for {ds.dim}-d features")
    labels = ds.labels
    names = ds.class_names
    if relabel is not None:
        relabel = list(relabel)
        if len(relabel) != ds.n_classes:
            raise ShapeMismatchError(f"relabel has {len(relabel)} entries for {ds.n_classes} classes")
        if all(isinstance(r, (int, np.integer)) for r in relabel) and sorted(relabel) == list(range(ds.n_classes)):
            perm = np.asarray(relabel)
            new_labels = np.zeros_like(labels)
            new_labels[:, perm] = labels
            new_names = [None] * ds.n_classes
            for old, new in enumerate(perm):
                new_names[new] = names[old]
            labels, names = new_labels, tuple(new_names)
        else:
            names = tuple(str(r) for r in relabel)
    return LabeledDataset(ds.features + offset, labels, names, id or f"{ds.id}+shift")
