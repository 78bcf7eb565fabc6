"""Hot numeric loops.

Each kernel exists twice: a numba version (``*_numba``, compiled on first
use) and a numpy version (``*_numpy``). The module-level names without a
suffix dispatch to one of them according to ``_accel.USE_NUMBA``. The
transportation simplex has no vectorized formulation; without numba exact
problems go to scipy (assignment for square uniform problems, HiGHS
otherwise), and ``transport_simplex_python`` keeps the interpreted simplex
as a reference.
"""
import math

import numpy as np
from scipy import sparse
from scipy.optimize import linear_sum_assignment, linprog

from ._accel import USE_NUMBA, njit

# Tree pivots with entering reduced cost above -_RC_TOL * max|C| stop the simplex.
_RC_TOL = 1e-12


# ---------------------------------------------------------------------------
# squared euclidean distances


@njit
def sqdist_numba(X, Y):
    n, d = X.shape
    k = Y.shape[0]
    out = np.empty((n, k))
    for i in range(n):
        for j in range(k):
            s = 0.0
            for t in range(d):
                diff = X[i, t] - Y[j, t]
                s += diff * diff
            out[i, j] = s
    return out


def sqdist_numpy(X, Y, chunk=256):
    n = X.shape[0]
    out = np.empty((n, Y.shape[0]))
    for start in range(0, n, chunk):
        diff = X[start:start + chunk, None, :] - Y[None, :, :]
        out[start:start + chunk] = np.einsum("ijk,ijk->ij", diff, diff)
    return out


# ---------------------------------------------------------------------------
# log-domain sinkhorn


@njit
def log_sinkhorn_numba(C, log_mu, log_nu, eps, max_iters, tol):
    """Alternating dual updates; returns ``(f, g, iterations, row_error)``.

    After every update of ``g`` the column marginals are exact, so the row
    error is the only stopping quantity.
    """
    n, k = C.shape
    f = np.zeros(n)
    g = np.zeros(k)
    lse = np.empty(n)
    err = np.inf
    it = 0
    while True:
        err = 0.0
        for i in range(n):
            m = -np.inf
            for j in range(k):
                v = (g[j] - C[i, j]) / eps
                if v > m:
                    m = v
            s = 0.0
            for j in range(k):
                s += math.exp((g[j] - C[i, j]) / eps - m)
            lse[i] = m + math.log(s)
            r = math.exp(f[i] / eps + lse[i])
            e = abs(r - math.exp(log_mu[i]))
            if e > err:
                err = e
        if err <= tol or it >= max_iters:
            break
        for i in range(n):
            f[i] = eps * (log_mu[i] - lse[i])
        for j in range(k):
            m = -np.inf
            for i in range(n):
                v = (f[i] - C[i, j]) / eps
                if v > m:
                    m = v
            s = 0.0
            for i in range(n):
                s += math.exp((f[i] - C[i, j]) / eps - m)
            g[j] = eps * (log_nu[j] - (m + math.log(s)))
        it += 1
    return f, g, it, err


def _lse(A, axis):
    m = A.max(axis=axis, keepdims=True)
    return (m + np.log(np.exp(A - m).sum(axis=axis, keepdims=True))).squeeze(axis)


def log_sinkhorn_numpy(C, log_mu, log_nu, eps, max_iters, tol):
    n, k = C.shape
    f = np.zeros(n)
    g = np.zeros(k)
    mu = np.exp(log_mu)
    it = 0
    while True:
        lse = _lse((g[None, :] - C) / eps, axis=1)
        err = float(np.abs(np.exp(f / eps + lse) - mu).max())
        if err <= tol or it >= max_iters:
            break
        f = eps * (log_mu - lse)
        g = eps * (log_nu - _lse((f[:, None] - C) / eps, axis=0))
        it += 1
    return f, g, it, err


# ---------------------------------------------------------------------------
# exact transport: primal simplex on the bipartite transportation tree


@njit
def transport_simplex_numba(C, a, b, max_iters):
    """Exact transportation LP by the network simplex method.

    Returns ``(rows, cols, flows, iterations, status)`` describing the
    ``n + k - 1`` basic cells of the optimal tree; ``status`` is 0 on
    optimality and 1 when ``max_iters`` pivots did not suffice.
    Supplies ``a`` and demands ``b`` must carry equal total mass.
    """
    n, k = C.shape
    N = n + k
    B = n + k - 1
    brow = np.empty(B, np.int64)
    bcol = np.empty(B, np.int64)
    flow = np.empty(B)

    # north-west corner start
    s = a.copy()
    dd = b.copy()
    i = 0
    j = 0
    for t in range(B):
        brow[t] = i
        bcol[t] = j
        amt = min(s[i], dd[j])
        flow[t] = amt
        s[i] -= amt
        dd[j] -= amt
        if i == n - 1:
            j += 1
        elif j == k - 1:
            i += 1
        elif s[i] <= dd[j]:
            i += 1
        else:
            j += 1

    scale = 0.0
    for i in range(n):
        for j in range(k):
            if abs(C[i, j]) > scale:
                scale = abs(C[i, j])
    tol = _RC_TOL * scale

    deg = np.empty(N, np.int64)
    ptr = np.empty(N + 1, np.int64)
    fill = np.empty(N, np.int64)
    adj = np.empty(2 * B, np.int64)
    parent = np.empty(N, np.int64)
    pcell = np.empty(N, np.int64)
    depth = np.empty(N, np.int64)
    pot = np.empty(N)
    queue = np.empty(N, np.int64)
    iside = np.empty(N, np.int64)
    jside = np.empty(N, np.int64)

    n_cells = n * k
    block = max(int(math.sqrt(n_cells)), 10)
    if block > n_cells:
        block = n_cells
    next_cell = 0
    iters = 0
    status = 0
    while True:
        # rebuild tree adjacency and potentials (u_i + v_j = c_ij on the tree)
        for v in range(N):
            deg[v] = 0
        for t in range(B):
            deg[brow[t]] += 1
            deg[n + bcol[t]] += 1
        ptr[0] = 0
        for v in range(N):
            ptr[v + 1] = ptr[v] + deg[v]
            fill[v] = ptr[v]
        for t in range(B):
            r = brow[t]
            c = n + bcol[t]
            adj[fill[r]] = t
            fill[r] += 1
            adj[fill[c]] = t
            fill[c] += 1
        for v in range(N):
            parent[v] = -2
        parent[0] = -1
        pcell[0] = -1
        depth[0] = 0
        pot[0] = 0.0
        head = 0
        tail = 1
        queue[0] = 0
        while head < tail:
            v = queue[head]
            head += 1
            for p in range(ptr[v], ptr[v + 1]):
                t = adj[p]
                w = n + bcol[t] if v < n else brow[t]
                if parent[w] != -2:
                    continue
                parent[w] = v
                pcell[w] = t
                depth[w] = depth[v] + 1
                pot[w] = C[brow[t], bcol[t]] - pot[v]
                queue[tail] = w
                tail += 1

        # block pricing
        best = -tol
        ei = -1
        ej = -1
        scanned = 0
        in_block = 0
        while scanned < n_cells:
            ci = next_cell // k
            cj = next_cell - ci * k
            rc = C[ci, cj] - pot[ci] - pot[n + cj]
            if rc < best:
                best = rc
                ei = ci
                ej = cj
            next_cell += 1
            if next_cell == n_cells:
                next_cell = 0
            scanned += 1
            in_block += 1
            if in_block == block:
                if ei >= 0:
                    break
                in_block = 0
        if ei < 0:
            break
        if iters >= max_iters:
            status = 1
            break
        iters += 1

        # cycle through the tree between row ei and column ej
        u = ei
        v = n + ej
        ni = 0
        nj = 0
        while u != v:
            if depth[u] >= depth[v]:
                iside[ni] = pcell[u]
                ni += 1
                u = parent[u]
            else:
                jside[nj] = pcell[v]
                nj += 1
                v = parent[v]
        theta = np.inf
        for q in range(0, ni, 2):
            if flow[iside[q]] < theta:
                theta = flow[iside[q]]
        for q in range(0, nj, 2):
            if flow[jside[q]] < theta:
                theta = flow[jside[q]]
        # leaving cell: last blocking cell met when walking the cycle from its
        # apex along the entering direction
        leave = -1
        for q in range(0, nj, 2):
            if flow[jside[q]] == theta:
                leave = jside[q]
        if leave < 0:
            for q in range(0, ni, 2):
                if flow[iside[q]] == theta:
                    leave = iside[q]
                    break
        for q in range(ni):
            t = iside[q]
            if q % 2 == 0:
                flow[t] -= theta
            else:
                flow[t] += theta
        for q in range(nj):
            t = jside[q]
            if q % 2 == 0:
                flow[t] -= theta
            else:
                flow[t] += theta
        brow[leave] = ei
        bcol[leave] = ej
        flow[leave] = theta
    return brow, bcol, flow, iters, status


transport_simplex_python = transport_simplex_numba.py_func


def transport_scipy(C, a, b, max_iters):
    """Same contract as :func:`transport_simplex_numba`, solved by scipy."""
    n, k = C.shape
    if n == k and np.all(a == a[0]) and np.all(b == b[0]) and a[0] == b[0]:
        rows, cols = linear_sum_assignment(C)
        return rows.astype(np.int64), cols.astype(np.int64), np.full(n, float(a[0])), n, 0
    idx = np.arange(n * k)
    A = sparse.vstack([
        sparse.csr_matrix((np.ones(n * k), (idx // k, idx)), shape=(n, n * k)),
        sparse.csr_matrix((np.ones(n * k), (idx % k, idx)), shape=(k, n * k)),
    ])
    res = linprog(C.ravel(), A_eq=A, b_eq=np.concatenate([a, b]), bounds=(0, None),
                  method="highs-ds", options={"maxiter": int(max_iters)})
    if res.status != 0:
        return np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0), int(res.nit), 1
    x = res.x
    nz = np.flatnonzero(x > 0)
    return (nz // k).astype(np.int64), (nz % k).astype(np.int64), x[nz], int(res.nit), 0


# ---------------------------------------------------------------------------
# k-nearest-neighbour majority vote


@njit
def knn_vote_numba(D, labels, k, n_classes):
    """Majority class among the ``k`` smallest entries of each row of ``D``.

    Equal distances keep column order; vote ties go to the lowest class.
    """
    m, n = D.shape
    out = np.empty(m, np.int64)
    best_d = np.empty(k)
    best_j = np.empty(k, np.int64)
    counts = np.zeros(n_classes, np.int64)
    for q in range(m):
        filled = 0
        for j in range(n):
            d = D[q, j]
            if filled == k and d >= best_d[k - 1]:
                continue
            # insertion into the sorted prefix; strict comparison keeps earlier columns first
            pos = filled if filled < k else k - 1
            while pos > 0 and best_d[pos - 1] > d:
                if pos < k:
                    best_d[pos] = best_d[pos - 1]
                    best_j[pos] = best_j[pos - 1]
                pos -= 1
            best_d[pos] = d
            best_j[pos] = j
            if filled < k:
                filled += 1
        for c in range(n_classes):
            counts[c] = 0
        for t in range(k):
            counts[labels[best_j[t]]] += 1
        top = 0
        for c in range(1, n_classes):
            if counts[c] > counts[top]:
                top = c
        out[q] = top
    return out


def knn_vote_numpy(D, labels, k, n_classes):
    order = np.argsort(D, axis=1, kind="stable")[:, :k]
    votes = labels[order]
    counts = np.zeros((D.shape[0], n_classes), dtype=np.int64)
    np.add.at(counts, (np.arange(D.shape[0])[:, None], votes), 1)
    return counts.argmax(axis=1)


# Sinkhorn time is dominated by exp(); numpy's vectorized exp beats numba's
# scalar libm calls (see benchmarks/bench_kernels.py), so both modes use numpy.
log_sinkhorn = log_sinkhorn_numpy

if USE_NUMBA:
    sqdist = sqdist_numba
    transport_simplex = transport_simplex_numba
    knn_vote = knn_vote_numba
else:
    sqdist = sqdist_numpy
    transport_simplex = transport_scipy
    knn_vote = knn_vote_numpy
