"""Discrete optimal transport solvers.

Two routes over an arbitrary nonnegative cost matrix: entropic Sinkhorn
(log-domain by default) for production use, and an exact network-simplex
solver that serves as the unregularized oracle.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from . import _kernels
from .errors import (
    NoConvergenceError,
    NonFiniteValueError,
    NumericalUnderflowError,
    ProblemTooLargeError,
    ShapeMismatchError,
    ValidationError,
)

MARGINAL_SUM_TOL = 1e-9
DEFAULT_MAX_CELLS = 4096


@dataclass(frozen=True, eq=False)
class Coupling:
    pi: np.ndarray
    row_marginal: np.ndarray
    col_marginal: np.ndarray

    def residuals(self):
        """Largest absolute row and column marginal violation."""
        r = np.abs(self.pi.sum(axis=1) - self.row_marginal).max()
        c = np.abs(self.pi.sum(axis=0) - self.col_marginal).max()
        return float(r), float(c)

    @property
    def shape(self):
        return self.pi.shape


@dataclass(frozen=True)
class SinkhornConfig:
    """Entropic solver settings.

    ``epsilon=None`` picks ``relative_epsilon * mean(cost)`` per problem so the
    regularization follows the scale of the features.
    """

    epsilon: float | None = None
    relative_epsilon: float = 0.01
    max_iters: int = 2000
    tolerance: float = 1e-9
    log_domain: bool = True
    newton_iters: int = 200

    def __post_init__(self):
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValidationError(f"epsilon must be positive, got {self.epsilon}")
        if not self.relative_epsilon > 0:
            raise ValidationError(f"relative_epsilon must be positive, got {self.relative_epsilon}")
        if not self.tolerance > 0:
            raise ValidationError(f"tolerance must be positive, got {self.tolerance}")
        if self.max_iters < 1:
            raise ValidationError(f"max_iters must be positive, got {self.max_iters}")
        if self.newton_iters < 0:
            raise ValidationError(f"newton_iters must be nonnegative, got {self.newton_iters}")

    def resolve_epsilon(self, cost):
        if self.epsilon is not None:
            return float(self.epsilon)
        mean = float(np.mean(cost))
        return self.relative_epsilon * mean if mean > 0 else self.relative_epsilon


def check_cost(cost):
    C = np.asarray(cost, dtype=np.float64)
    if C.ndim != 2 or C.shape[0] < 1 or C.shape[1] < 1:
        raise ShapeMismatchError(f"cost matrix must be a non-empty 2-d array, got shape {C.shape}")
    if not np.all(np.isfinite(C)):
        raise NonFiniteValueError("cost matrix has non-finite entries")
    if np.any(C < 0):
        raise ValidationError("cost matrix has negative entries")
    return C


def _marginal(w, size, name, strict_positive):
    if w is None:
        return np.full(size, 1.0 / size)
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (size,):
        raise ShapeMismatchError(f"{name} has shape {w.shape}, expected ({size},)")
    if not np.all(np.isfinite(w)):
        raise NonFiniteValueError(f"{name} has non-finite entries")
    if np.any(w < 0) or (strict_positive and np.any(w <= 0)):
        raise ValidationError(f"{name} must be {'strictly ' if strict_positive else ''}positive")
    if abs(w.sum() - 1.0) > MARGINAL_SUM_TOL:
        raise ValidationError(f"{name} sums to {w.sum():.12g}, not 1")
    return w


def sinkhorn(cost, mu=None, nu=None, cfg=None):
    """Entropic OT coupling; returns ``(Coupling, transport_cost)``.

    Runs up to ``cfg.max_iters`` log-domain Sinkhorn sweeps. At small epsilon
    these stall well above the tolerance, so a damped Newton ascent on the
    same dual takes over for up to ``cfg.newton_iters`` steps.
    ``transport_cost`` is the linear cost ``sum(C * pi)`` of the regularized
    plan, without the entropy term. Omitted marginals default to uniform.
    """
    cfg = cfg or SinkhornConfig()
    C = check_cost(cost)
    n, k = C.shape
    mu = _marginal(mu, n, "mu", True)
    nu = _marginal(nu, k, "nu", True)
    eps = cfg.resolve_epsilon(C)
    if cfg.log_domain:
        f, g, iters, err = _kernels.log_sinkhorn(
            C, np.log(mu), np.log(nu), eps, cfg.max_iters, cfg.tolerance
        )
        if err > cfg.tolerance and cfg.newton_iters:
            f, g, extra = _newton_dual_ascent(C, mu, nu, eps, f, g, cfg.tolerance, cfg.newton_iters)
            iters += extra
        pi = np.exp((f[:, None] + g[None, :] - C) / eps)
    else:
        pi, iters, err = _scaling_sinkhorn(C, mu, nu, eps, cfg.max_iters, cfg.tolerance)
    coupling = Coupling(pi, mu, nu)
    r_err, c_err = coupling.residuals()
    if not (r_err <= cfg.tolerance and c_err <= cfg.tolerance):
        raise NoConvergenceError(
            f"sinkhorn stopped after {iters} iterations with marginal error "
            f"{max(r_err, c_err):.3g} > {cfg.tolerance:.3g} (epsilon={eps:.3g})"
        )
    return coupling, float(np.sum(C * pi))


_DENSE_NEWTON_MAX = 2000


def _newton_dual_ascent(C, mu, nu, eps, f, g, tol, max_steps):
    """Levenberg-Marquardt damped Newton on the entropic dual.

    The Hessian is a weighted bipartite Laplacian whose tiny weights make it
    nearly singular at small epsilon; the ``lam * I`` damping keeps steps
    bounded and vanishes as the iterates converge.
    """
    n, k = C.shape

    def dual(f, g):
        with np.errstate(over="ignore"):
            return f @ mu + g @ nu - eps * np.exp((f[:, None] + g[None, :] - C) / eps).sum()

    def gradient(f, g):
        P = np.exp((f[:, None] + g[None, :] - C) / eps)
        r = P.sum(axis=1)
        c = P.sum(axis=0)
        return P, r, c, np.concatenate([mu - r, nu - c])

    lam = 1.0
    D = dual(f, g)
    P, r, c, grad = gradient(f, g)
    for step in range(max_steps):
        err = np.abs(grad).max()
        if err <= tol:
            return f, g, step
        while True:
            d = _damped_newton_step(P, r, c, eps, lam, grad)
            f_new = f + d[:n]
            g_new = g + d[n:]
            D_new = dual(f_new, g_new)
            # close to the optimum the dual gain drops below rounding, so a
            # step that keeps the dual and shrinks the marginal error also counts
            flat = D_new >= D - 1e-15 * max(1.0, abs(D))
            if D_new > D or flat:
                P_new, r_new, c_new, grad_new = gradient(f_new, g_new)
                if D_new > D or np.abs(grad_new).max() < err:
                    f, g, D = f_new, g_new, max(D, D_new)
                    P, r, c, grad = P_new, r_new, c_new, grad_new
                    lam = max(lam / 10.0, 1e-14)
                    break
            lam *= 10.0
            if lam > 1e20:
                return f, g, step
    return f, g, max_steps


def _damped_newton_step(P, r, c, eps, lam, grad):
    n, k = P.shape
    if n + k <= _DENSE_NEWTON_MAX:
        H = np.empty((n + k, n + k))
        H[:n, :n] = np.diag(r)
        H[:n, n:] = P
        H[n:, :n] = P.T
        H[n:, n:] = np.diag(c)
        H /= eps
        H[np.diag_indices(n + k)] += lam
        return np.linalg.solve(H, grad)

    def matvec(v):
        v1, v2 = v[:n], v[n:]
        return np.concatenate([r * v1 + P @ v2, P.T @ v1 + c * v2]) / eps + lam * v

    op = LinearOperator((n + k, n + k), matvec=matvec, dtype=np.float64)
    d, _ = cg(op, grad, rtol=1e-12, maxiter=10 * (n + k))
    return d


def _scaling_sinkhorn(C, mu, nu, eps, max_iters, tol):
    K = np.exp(-C / eps)
    if np.any(K.sum(axis=1) == 0) or np.any(K.sum(axis=0) == 0):
        raise NumericalUnderflowError(f"exp(-C/epsilon) underflows with epsilon={eps:.3g}; use log_domain")
    u = np.ones_like(mu)
    v = np.ones_like(nu)
    it = 0
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        while True:
            err = float(np.abs(u * (K @ v) - mu).max())
            if not np.isfinite(err):
                raise NumericalUnderflowError(f"scaling vectors overflowed with epsilon={eps:.3g}")
            if err <= tol or it >= max_iters:
                break
            u = mu / (K @ v)
            v = nu / (K.T @ u)
            if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
                raise NumericalUnderflowError(f"scaling vectors overflowed with epsilon={eps:.3g}")
            it += 1
    return u[:, None] * K * v[None, :], it, err


def exact_ot(cost, mu=None, nu=None, max_cells=DEFAULT_MAX_CELLS):
    """Exact (unregularized) OT by network simplex; returns ``(Coupling, cost)``.

    The returned plan is a basic, i.e. vertex, solution of the transportation
    LP. Uniform marginals are solved in integer mass units so that
    permutation plans come out exactly.
    """
    C = check_cost(cost)
    n, k = C.shape
    if max_cells is not None and n * k > max_cells:
        raise ProblemTooLargeError(f"{n}x{k} problem exceeds the {max_cells}-cell cap")
    mu = _marginal(mu, n, "mu", False)
    nu = _marginal(nu, k, "nu", False)
    if np.all(mu == mu[0]) and np.all(nu == nu[0]):
        supply = np.full(n, float(k))
        demand = np.full(k, float(n))
        unit = 1.0 / (n * k)
    else:
        supply = mu
        demand = nu * (mu.sum() / nu.sum())
        unit = 1.0
    rows, cols, flows, iters, status = _kernels.transport_simplex(
        C, supply, demand, 50 * n * k + 1000
    )
    if status != 0:
        raise NoConvergenceError(f"network simplex did not finish within {iters} pivots")
    pi = np.zeros((n, k))
    np.add.at(pi, (rows, cols), flows * unit)
    return Coupling(pi, mu, nu), float(np.sum(C * pi))


def as_points(X):
    """View a 1-d sample vector as an (n, 1) point array."""
    X = np.asarray(X, dtype=np.float64)
    return X.reshape(-1, 1) if X.ndim == 1 else X


def sqeuclidean_cost(X, Y):
    X = np.ascontiguousarray(as_points(X))
    Y = np.ascontiguousarray(as_points(Y))
    if X.ndim != 2 or Y.ndim != 2 or X.shape[1] != Y.shape[1]:
        raise ShapeMismatchError(f"incompatible point sets {X.shape} and {Y.shape}")
    return _kernels.sqdist(X, Y)


def solve(cost, mu=None, nu=None, solver="sinkhorn", cfg=None, max_cells=DEFAULT_MAX_CELLS):
    if solver == "exact":
        return exact_ot(cost, mu, nu, max_cells=max_cells)
    if solver == "sinkhorn":
        return sinkhorn(cost, mu, nu, cfg)
    raise ValidationError(f"unknown solver {solver!r}")


def w2_squared_empirical(X, Xp, solver="exact", cfg=None, max_cells=DEFAULT_MAX_CELLS):
    """Squared 2-Wasserstein distance between two uniform point clouds."""
    C = sqeuclidean_cost(as_points(X), as_points(Xp))
    return solve(C, solver=solver, cfg=cfg, max_cells=max_cells)[1]
