"""Projection of a target dataset onto the generalized geodesic of sources.

The target ``Q`` is the common base: every source ``P_i`` is reached from
``Q`` by a map ``T_i``. Distances between maps are L2(Q) integrals of the
feature and label costs; the projection weights minimize the quadratic
surrogate

    f(a) = sum_i a_i d_i - 1/2 sum_{i != j} a_i a_j W_ij

over the probability simplex, with ``d_i`` the distance of ``T_i`` to the
identity and ``W_ij`` the distance between ``T_i`` and ``T_j``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .data import SimplexWeights, validate
from .errors import ShapeMismatchError, SolverFailureError, ValidationError
from .geodesic import check_common_source
from .labels import LabelDistanceMatrix, label_distance_matrix
from .maps import barycentric_map, batched_barycentric_map, identity_map
from .ot import as_points
from .otdd import OtddConfig

KKT_TOL = 1e-8
_ENUMERATION_MAX_M = 12
_TIE_TOL = 1e-13


@dataclass(frozen=True, eq=False)
class ProjectionProblem:
    """Coefficients of the surrogate, plus the maps they came from if known.

    ``label_matrices`` maps ``(i, j)`` to the label matrix between sources
    ``i`` and ``j``, and ``(i, "Q")`` to the one between source ``i`` and
    the target.
    """

    d: np.ndarray
    pairwise: np.ndarray
    maps: tuple = None
    label_matrices: dict = field(default=None, repr=False)

    def __post_init__(self):
        d = np.array(self.d, dtype=np.float64).reshape(-1)
        W = np.array(self.pairwise, dtype=np.float64)
        m = d.size
        if m == 0 or W.shape != (m, m):
            raise ShapeMismatchError(f"need m distances and an m x m matrix, got {d.shape} and {W.shape}")
        if not (np.all(np.isfinite(d)) and np.all(np.isfinite(W))):
            raise ValidationError("projection coefficients must be finite")
        if np.any(d < 0) or np.any(W < 0):
            raise ValidationError("dataset distances must be nonnegative")
        if np.any(np.diag(W) != 0):
            raise ValidationError("pairwise matrix must have a zero diagonal")
        if not np.array_equal(W, W.T):
            raise ValidationError("pairwise matrix must be symmetric")
        d.setflags(write=False)
        W.setflags(write=False)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "pairwise", W)

    @property
    def m(self):
        return self.d.size


@dataclass(frozen=True, eq=False)
class ProjectionSolution:
    a_hat: SimplexWeights
    objective: float
    iterations: int
    kkt_residual: float = 0.0


def dataset_distance_2q(map_i, map_j, M_ij):
    """Squared distance between two maps out of the same base dataset.

    Averages, over the base samples, the squared feature gap plus the
    bilinear label cost under ``M_ij`` (classes of ``map_i``'s target by
    classes of ``map_j``'s target). When both maps land in the same dataset,
    samples with identical mapped labels contribute no label cost.
    """
    check_common_source([map_i, map_j])
    m = M_ij.m if isinstance(M_ij, LabelDistanceMatrix) else np.asarray(M_ij, dtype=np.float64)
    Yi, Yj = map_i.mapped_labels, map_j.mapped_labels
    if m.shape != (Yi.shape[1], Yj.shape[1]):
        raise ShapeMismatchError(f"label matrix {m.shape} does not fit labels {Yi.shape[1]}, {Yj.shape[1]}")
    diff = map_i.mapped_features - map_j.mapped_features
    feat = np.einsum("nd,nd->n", diff, diff)
    # averaging both orientations keeps d(i, j) == d(j, i) bit for bit
    lab = 0.5 * (np.einsum("nc,cd,nd->n", Yi, m, Yj) + np.einsum("nd,dc,nc->n", Yj, m.T, Yi))
    if map_i.target_id == map_j.target_id and Yi.shape == Yj.shape:
        lab[np.all(Yi == Yj, axis=1)] = 0.0
    return float(np.mean(feat + lab))


def surrogate(a, prob):
    a = a.a if isinstance(a, SimplexWeights) else np.asarray(a, dtype=np.float64)
    if a.shape != (prob.m,):
        raise ShapeMismatchError(f"{a.shape[0] if a.ndim else 0} weights for {prob.m} datasets")
    return float(a @ prob.d - 0.5 * (a @ prob.pairwise @ a))


def euclidean_generalized_geodesic_distance(nu_samples, maps, a):
    """Both sides of the closed form for the squared (2, nu) distance.

    ``maps[i]`` holds ``T_i(x)`` for every sample ``x`` of ``nu``. Returns
    ``(direct, formula)``: the L2(nu) distance between ``sum_i a_i T_i`` and
    the identity, and the weighted expansion in pairwise map distances.
    """
    X = as_points(nu_samples)
    Ts = [as_points(T) for T in maps]
    a = a.a if isinstance(a, SimplexWeights) else np.asarray(a, dtype=np.float64)
    if a.shape != (len(Ts),):
        raise ShapeMismatchError(f"{a.size} weights for {len(Ts)} maps")
    for T in Ts:
        if T.shape != X.shape:
            raise ShapeMismatchError(f"map samples {T.shape} vs base samples {X.shape}")
    mixed = sum(w * T for w, T in zip(a, Ts))
    direct = float(np.mean(np.sum((X - mixed) ** 2, axis=1)))
    d = np.array([np.mean(np.sum((T - X) ** 2, axis=1)) for T in Ts])
    W = np.array([[np.mean(np.sum((Ti - Tj) ** 2, axis=1)) for Tj in Ts] for Ti in Ts])
    formula = float(a @ d - 0.5 * (a @ W @ a))
    return direct, formula


def build_projection_problem(Q, sources, cfg=None, maps=None, batch_size=None, seed=0):
    """Maps from ``Q`` to every source and the surrogate coefficients.

    ``Q`` must be hard-labeled (pseudo-label it first if needed). Label
    matrices between source pairs are computed once for ``i < j`` and
    transposed for the mirrored entry, so ``pairwise`` is exactly symmetric.
    """
    cfg = cfg or OtddConfig()
    validate(Q)
    sources = list(sources)
    if not sources:
        raise ShapeMismatchError("need at least one source dataset")
    if maps is None:
        if batch_size:
            maps = [batched_barycentric_map(Q, P, batch_size, seed, cfg) for P in sources]
        else:
            maps = [barycentric_map(Q, P, cfg) for P in sources]
    maps = list(maps)
    if len(maps) != len(sources):
        raise ShapeMismatchError(f"{len(maps)} maps for {len(sources)} sources")
    check_common_source(maps)
    ident = identity_map(Q)
    matrices = {}
    m = len(sources)
    d = np.empty(m)
    for i, P in enumerate(sources):
        matrices[(i, "Q")] = label_distance_matrix(P, Q, cfg=cfg.label)
        d[i] = dataset_distance_2q(maps[i], ident, matrices[(i, "Q")])
    W = np.zeros((m, m))
    for i, j in itertools.combinations(range(m), 2):
        M = label_distance_matrix(sources[i], sources[j], cfg=cfg.label)
        matrices[(i, j)] = M
        matrices[(j, i)] = M.transpose()
        W[i, j] = W[j, i] = dataset_distance_2q(maps[i], maps[j], M)
    return ProjectionProblem(np.clip(d, 0.0, None), np.clip(W, 0.0, None), tuple(maps), matrices)


def geodesic_distance_to_target(prob, a, Q):
    """Direct squared (2, Q) distance between the geodesic point and ``Q``.

    Uses the mixed map ``sum_i a_i T_i`` itself as the map from ``Q`` to the
    interpolated dataset; padded labels are compared with ``Q``'s through
    the stacked source-to-target label matrices. No claim of equality with
    :func:`surrogate` is made outside the purely Euclidean case.
    """
    if prob.maps is None or prob.label_matrices is None:
        raise ValidationError("problem was built without maps")
    a = a.a if isinstance(a, SimplexWeights) else np.asarray(a, dtype=np.float64)
    mixed = sum(w * mp.mapped_features for w, mp in zip(a, prob.maps))
    feat = np.mean(np.sum((mixed - Q.features) ** 2, axis=1))
    lab = sum(
        w * np.mean(np.einsum("nc,cd,nd->n", mp.mapped_labels, prob.label_matrices[(i, "Q")].m, Q.labels))
        for i, (w, mp) in enumerate(zip(a, prob.maps))
    )
    return float(feat + lab)


# ---------------------------------------------------------------------------
# simplex QP


def _scale(prob):
    return max(1.0, float(np.abs(prob.d).max()), float(np.abs(prob.pairwise).max()))


def kkt_residual(a, prob):
    """First-order optimality violation of ``a`` for the surrogate on the simplex.

    Scaled by the largest coefficient magnitude (at least 1).
    """
    a = np.asarray(a, dtype=np.float64)
    g = prob.d - prob.pairwise @ a
    support = a > 0
    lam = g[support].mean() if support.any() else g.min()
    res = max(
        float(np.abs(g[support] - lam).max()) if support.any() else np.inf,
        float(np.clip(lam - g[~support], 0.0, None).max()) if (~support).any() else 0.0,
        float(np.clip(-a, 0.0, None).max()),
        abs(float(a.sum()) - 1.0),
    )
    return res / _scale(prob)


def _face_stationary_point(prob, support):
    """Stationary point of the surrogate on the face spanned by ``support``."""
    S = np.asarray(support)
    k = S.size
    A = np.zeros((k + 1, k + 1))
    A[:k, :k] = -prob.pairwise[np.ix_(S, S)]
    A[:k, k] = -1.0
    A[k, :k] = 1.0
    rhs = np.concatenate([-prob.d[S], [1.0]])
    try:
        sol = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError:
        sol = np.linalg.lstsq(A, rhs, rcond=None)[0]
    a = np.zeros(prob.m)
    a[S] = sol[:k]
    return a


def _clean(a):
    a = np.where(a > 0, a, 0.0)
    return a / a.sum()


def _project_to_simplex(v):
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    rho = np.nonzero(u * np.arange(1, v.size + 1) > css)[0][-1]
    return np.maximum(v - css[rho] / (rho + 1.0), 0.0)


def _enumerate_faces(prob, tol):
    """Best KKT point over every face, smaller faces and lower indices first."""
    m = prob.m
    best = None
    examined = 0
    for size in range(1, m + 1):
        for S in itertools.combinations(range(m), size):
            examined += 1
            a = _face_stationary_point(prob, S)
            if np.any(a[list(S)] < -tol):
                continue
            a = _clean(a)
            if kkt_residual(a, prob) > tol:
                continue
            val = surrogate(a, prob)
            if best is None or val < best[1] - _TIE_TOL * _scale(prob):
                best = (a, val)
    return best, examined


def _multistart_projected_gradient(prob, tol, max_iters=20000):
    m = prob.m
    L = max(float(np.linalg.norm(prob.pairwise, 2)), 1e-12)
    starts = [np.eye(m)[i] for i in range(m)] + [np.full(m, 1.0 / m)]
    best = None
    total = 0
    for a in starts:
        for it in range(max_iters):
            g = prob.d - prob.pairwise @ a
            nxt = _project_to_simplex(a - g / L)
            total += 1
            if np.abs(nxt - a).max() <= 1e-15:
                a = nxt
                break
            a = nxt
        support = np.flatnonzero(a > 1e-10)
        polished = _face_stationary_point(prob, support)
        if np.all(polished[support] >= 0):
            polished = _clean(polished)
            if kkt_residual(polished, prob) <= kkt_residual(a, prob):
                a = polished
        val = surrogate(a, prob)
        if best is None or val < best[1] - _TIE_TOL * _scale(prob):
            best = (a, val)
    return best, total


def solve_projection_weights(prob, tol=KKT_TOL):
    """Minimize the surrogate over the probability simplex.

    The quadratic need not be convex, so the search is global: for up to
    twelve datasets every face is tried; beyond that, projected gradient is
    restarted from every vertex and the barycenter. Among equal objectives
    the first candidate found (lowest-index face or start) wins.
    """
    if prob.m <= _ENUMERATION_MAX_M:
        best, iters = _enumerate_faces(prob, tol)
    else:
        best, iters = _multistart_projected_gradient(prob, tol)
    if best is None:
        raise SolverFailureError("no point met the KKT tolerance")
    a, val = best
    vertex = int(np.argmin(prob.d))
    if prob.d[vertex] < val:
        a, val = np.eye(prob.m)[vertex], float(prob.d[vertex])
    res = kkt_residual(a, prob)
    if res > tol:
        raise SolverFailureError(f"KKT residual {res:.3g} exceeds {tol:.3g}")
    return ProjectionSolution(SimplexWeights(a), float(surrogate(a, prob)), iters, res)


def simplex_grid(m, resolution):
    """Every simplex point with coordinates in multiples of ``1/resolution``."""
    if m < 1:
        raise ValidationError("m must be positive")
    if resolution < 1:
        raise ValidationError("resolution must be positive")

    def compositions(total, parts):
        if parts == 1:
            yield (total,)
            return
        for first in range(total, -1, -1):
            for rest in compositions(total - first, parts - 1):
                yield (first,) + rest

    return [SimplexWeights(np.array(c, dtype=np.float64) / resolution) for c in compositions(resolution, m)]
