"""Exact and entropic discrete optimal transport on explicit cost matrices.

The exact solver is a transportation simplex with Bland's anti-cycling rule
(lowest-index entering arc, lowest-index leaving arc among ties), which makes
the output deterministic for a fixed input.  The entropic solver runs
alternating scaling in the log domain.
"""

import math
from dataclasses import dataclass

import numpy as np

from .measures import EmpiricalMeasure, _check_simplex

#: refuse exact dense solves above this many cost entries
SIZE_GUARD = 25_000_000

_RC_TOL = 1e-11


@dataclass(frozen=True)
class TransportPlan:
    """Feasible coupling between two discrete marginals."""

    entries: np.ndarray
    row_marginal: np.ndarray
    col_marginal: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.entries, dtype=float)
        a = np.asarray(self.row_marginal, dtype=float).ravel()
        b = np.asarray(self.col_marginal, dtype=float).ravel()
        if g.shape != (a.size, b.size):
            raise ValueError(f"plan shape {g.shape} does not match marginals ({a.size}, {b.size})")
        if np.any(g < 0):
            raise ValueError("plan contains negative entries")
        if np.max(np.abs(g.sum(axis=1) - a)) > 1e-9:
            raise ValueError("row sums do not match the row marginal")
        if np.max(np.abs(g.sum(axis=0) - b)) > 1e-9:
            raise ValueError("column sums do not match the column marginal")
        for name, arr in (("entries", g), ("row_marginal", a), ("col_marginal", b)):
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class EntropicResult:
    """Entropic transport objective plus the stopping diagnostics."""

    objective: float
    iterations: int
    converged: bool  # True: marginal tolerance reached; False: max_iter hit


def _validate_cost(cost) -> np.ndarray:
    c = np.asarray(cost, dtype=float)
    if c.ndim != 2 or c.size == 0:
        raise ValueError(f"cost must be a nonempty 2d matrix, got shape {c.shape}")
    if not np.all(np.isfinite(c)) or np.any(c < 0):
        raise ValueError("cost entries must be finite and nonnegative")
    return c


def _northwest_corner(a, b):
    """Initial spanning-tree basis with exactly n + m - 1 cells."""
    n, m = a.size, b.size
    ra, rb = a.copy(), b.copy()
    rows = np.empty(n + m - 1, dtype=np.intp)
    cols = np.empty(n + m - 1, dtype=np.intp)
    flow = np.empty(n + m - 1)
    i = j = 0
    for k in range(n + m - 1):
        x = min(ra[i], rb[j])
        rows[k], cols[k], flow[k] = i, j, x
        ra[i] -= x
        rb[j] -= x
        if (ra[i] <= rb[j] and i < n - 1) or j == m - 1:
            i += 1
        else:
            j += 1
    return rows, cols, flow


def _tree_adjacency(rows, cols, n, m):
    """Adjacency lists over nodes 0..n-1 (rows) and n..n+m-1 (columns)."""
    adj = [[] for _ in range(n + m)]
    for k in range(rows.size):
        u, v = rows[k], n + cols[k]
        adj[u].append((v, k))
        adj[v].append((u, k))
    return adj


def _duals_from_basis(cost, rows, cols, n, m):
    adj = _tree_adjacency(rows, cols, n, m)
    pot = np.full(n + m, np.nan)
    pot[0] = 0.0
    stack = [0]
    while stack:
        u = stack.pop()
        for v, k in adj[u]:
            if np.isnan(pot[v]):
                c = cost[rows[k], cols[k]]
                pot[v] = c - pot[u]
                stack.append(v)
    return pot[:n], pot[n:], adj


def _cycle_path(adj, start, goal, n_nodes):
    """Edge indices of the unique tree path from start to goal."""
    parent_edge = np.full(n_nodes, -1, dtype=np.intp)
    parent_node = np.full(n_nodes, -1, dtype=np.intp)
    seen = np.zeros(n_nodes, dtype=bool)
    seen[start] = True
    stack = [start]
    while stack:
        u = stack.pop()
        if u == goal:
            break
        for v, k in adj[u]:
            if not seen[v]:
                seen[v] = True
                parent_edge[v] = k
                parent_node[v] = u
                stack.append(v)
    path = []
    u = goal
    while u != start:
        path.append(parent_edge[u])
        u = parent_node[u]
    return path


def solve_exact(cost, a, b):
    """Solve the transportation LP exactly.

    Parameters:
        cost: (n, m) nonnegative finite cost matrix.
        a, b: probability vectors of lengths n and m.

    Returns:
        (TransportPlan, objective) at the LP optimum.  The pivot rule is
        fixed, so the returned basic solution is deterministic.
    """
    c = _validate_cost(cost)
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    n, m = c.shape
    if a.size != n or b.size != m:
        raise ValueError(f"marginal lengths ({a.size}, {b.size}) do not match cost shape {c.shape}")
    _check_simplex(a, "row marginal")
    _check_simplex(b, "column marginal")

    rows, cols, flow = _northwest_corner(a, b)
    max_pivots = 100 * (n + m) * max(n, m) + 1000
    for _ in range(max_pivots):
        u, v, adj = _duals_from_basis(c, rows, cols, n, m)
        rc = c - u[:, None] - v[None, :]
        neg = np.flatnonzero(rc.ravel() < -_RC_TOL)
        if neg.size == 0:
            break
        enter = neg[0]  # Bland: lowest flat index
        ei, ej = divmod(enter, m)
        path = _cycle_path(adj, n + ej, ei, n + m)
        # entering cell takes +theta; path edges alternate starting with -
        minus = path[0::2]
        theta = min(flow[k] for k in minus)
        # Bland again: among blocking arcs pick the lowest cell index
        leave_pos = min(
            (k for k in minus if flow[k] <= theta),
            key=lambda k: rows[k] * m + cols[k],
        )
        for pos, k in enumerate(path):
            flow[k] += theta if pos % 2 else -theta
        rows[leave_pos], cols[leave_pos], flow[leave_pos] = ei, ej, theta
    else:
        raise RuntimeError("transportation simplex failed to terminate")

    plan = np.zeros((n, m))
    np.add.at(plan, (rows, cols), flow)
    np.clip(plan, 0.0, None, out=plan)
    # fsum: correctly rounded, so the objective is order-independent under
    # row/column permutations of the input
    objective = math.fsum(flow[k] * c[rows[k], cols[k]] for k in range(flow.size)
                          if flow[k] > 0)
    return TransportPlan(plan, a, b), objective


def solve_entropic(cost, a, b, epsilon: float = 0.01, max_iter: int = 10_000,
                   tol: float = 1e-8) -> EntropicResult:
    """Entropically regularized transport via log-domain alternating scaling.

    Stops when the column-marginal violation max-norm falls below `tol` or
    after `max_iter` sweeps; the result records which rule fired.  Returns
    the transport objective <plan, cost> of the scaled plan (without the
    entropy term).
    """
    c = _validate_cost(cost)
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.size != c.shape[0] or b.size != c.shape[1]:
        raise ValueError("marginal lengths do not match cost shape")
    _check_simplex(a, "row marginal")
    _check_simplex(b, "column marginal")

    # zero-mass rows/columns carry nothing; drop them for the log domain
    ri = np.flatnonzero(a > 0)
    cj = np.flatnonzero(b > 0)
    ar, bc = a[ri], b[cj]
    k = -c[np.ix_(ri, cj)] / epsilon
    log_a, log_b = np.log(ar), np.log(bc)

    if max_iter < 1:
        raise ValueError(f"max_iter must be at least 1, got {max_iter}")
    f = np.zeros(ar.size)
    g = np.zeros(bc.size)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        f = -_logsumexp(k + g[None, :] + log_b[None, :], axis=1)
        g = -_logsumexp(k + f[:, None] + log_a[:, None], axis=0)
        log_plan = k + f[:, None] + g[None, :] + log_a[:, None] + log_b[None, :]
        # the g-update makes column sums exact; rows carry the residual
        row_violation = np.max(np.abs(np.exp(_logsumexp(log_plan, axis=1)) - ar))
        if row_violation < tol:
            converged = True
            break
    plan = np.exp(log_plan)
    # project onto the exact marginals (scale down rows, then columns, then
    # spread the residual mass); a feasible plan never undercuts the LP optimum
    with np.errstate(divide="ignore", invalid="ignore"):
        row_scale = np.minimum(1.0, ar / plan.sum(axis=1))
        plan *= np.where(np.isfinite(row_scale), row_scale, 1.0)[:, None]
        col_scale = np.minimum(1.0, bc / plan.sum(axis=0))
        plan *= np.where(np.isfinite(col_scale), col_scale, 1.0)[None, :]
    err_a = ar - plan.sum(axis=1)
    err_b = bc - plan.sum(axis=0)
    residual = err_a.sum()
    if residual > 0:
        plan += np.outer(err_a, err_b) / residual
    objective = float(np.sum(plan * c[np.ix_(ri, cj)]))
    return EntropicResult(objective, it, converged)


def _logsumexp(x, axis):
    hi = np.max(x, axis=axis, keepdims=True)
    out = hi + np.log(np.sum(np.exp(x - hi), axis=axis, keepdims=True))
    return np.squeeze(out, axis=axis)


def squared_cost_matrix(mu: EmpiricalMeasure, nu: EmpiricalMeasure) -> np.ndarray:
    """Pairwise squared Euclidean distances between the two supports."""
    if mu.d != nu.d:
        raise ValueError(f"dimension mismatch: {mu.d} vs {nu.d}")
    diff = mu.points[:, None, :] - nu.points[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def wasserstein_exact(mu: EmpiricalMeasure, nu: EmpiricalMeasure) -> float:
    """Exact 2-Wasserstein distance between empirical measures in R^d."""
    if mu.d != nu.d:
        raise ValueError(f"dimension mismatch: {mu.d} vs {nu.d}")
    if mu.n * nu.n > SIZE_GUARD:
        raise ValueError(
            f"problem size {mu.n} x {nu.n} exceeds the exact-solver guard "
            f"({SIZE_GUARD} entries); use solve_entropic instead"
        )
    cost = squared_cost_matrix(mu, nu)
    _, objective = solve_exact(cost, mu.weights, nu.weights)
    return float(np.sqrt(max(objective, 0.0)))
