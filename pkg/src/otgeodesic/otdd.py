"""Optimal transport dataset distance between two labeled datasets."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import validate
from .errors import DimensionMismatchError, ShapeMismatchError, ValidationError
from .labels import LabelConfig, LabelDistanceMatrix, label_cost_matrix, label_distance_matrix
from .ot import Coupling, SinkhornConfig, solve, sqeuclidean_cost


@dataclass(frozen=True)
class OtddConfig:
    """Solver settings shared by every step that needs an OTDD coupling.

    ``solver`` picks entropic (``"sinkhorn"``) or exact (``"exact"``)
    transport for the outer problem; ``label`` controls the inner
    class-to-class distances.
    """

    solver: str = "sinkhorn"
    sinkhorn: SinkhornConfig = field(default_factory=SinkhornConfig)
    label: LabelConfig = field(default_factory=LabelConfig)
    exact_max_cells: int | None = 1_000_000

    def __post_init__(self):
        if self.solver not in ("exact", "sinkhorn"):
            raise ValidationError(f"solver must be 'exact' or 'sinkhorn', got {self.solver!r}")

    @property
    def label_method(self):
        return self.label.method

    def snapshot(self):
        return {
            "solver": self.solver,
            "epsilon": self.sinkhorn.epsilon,
            "relative_epsilon": self.sinkhorn.relative_epsilon,
            "tolerance": self.sinkhorn.tolerance,
            "max_iters": self.sinkhorn.max_iters,
            "label_method": self.label.method,
            "class_cap": self.label.class_cap,
            "seed": self.label.seed,
        }


@dataclass(frozen=True, eq=False)
class OtddResult:
    coupling: Coupling
    distance_squared: float
    label_matrix: LabelDistanceMatrix
    config: dict
    epsilon: float | None = None

    @property
    def distance(self):
        return float(np.sqrt(max(self.distance_squared, 0.0)))


def otdd_cost_matrix(Q, P, M):
    """Ground cost between every sample of ``Q`` (rows) and of ``P`` (columns).

    Squared feature distance plus the bilinear label cost under ``M``, which
    must be shaped ``(C_Q, C_P)``.
    """
    validate(Q)
    validate(P)
    if Q.dim != P.dim:
        raise DimensionMismatchError(f"feature dims differ: {Q.dim} vs {P.dim}")
    m = M.m if isinstance(M, LabelDistanceMatrix) else np.asarray(M, dtype=np.float64)
    if m.shape != (Q.n_classes, P.n_classes):
        raise ShapeMismatchError(f"label matrix {m.shape} does not match classes ({Q.n_classes}, {P.n_classes})")
    return sqeuclidean_cost(Q.features, P.features) + label_cost_matrix(Q.labels, P.labels, m)


def otdd(Q, P, cfg=None, label_matrix=None):
    """OTDD coupling and squared distance between ``Q`` and ``P``.

    Both datasets carry uniform sample weights. The label matrix is computed
    from the class-conditionals unless supplied, which is how soft-labeled
    datasets enter.
    """
    cfg = cfg or OtddConfig()
    validate(Q)
    validate(P)
    if Q.dim != P.dim:
        raise DimensionMismatchError(f"feature dims differ: {Q.dim} vs {P.dim}")
    M = label_matrix if label_matrix is not None else label_distance_matrix(Q, P, cfg=cfg.label)
    C = otdd_cost_matrix(Q, P, M)
    coupling, cost = solve(C, solver=cfg.solver, cfg=cfg.sinkhorn, max_cells=cfg.exact_max_cells)
    eps = cfg.sinkhorn.resolve_epsilon(C) if cfg.solver == "sinkhorn" else None
    return OtddResult(coupling, max(cost, 0.0), M, cfg.snapshot(), eps)
