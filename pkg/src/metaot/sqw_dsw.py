"""Sliced distances between meta-measures.

Three estimators share the same 1D core:

* ``sqw``     -- slices 1D meta-measures through GP paths acting on quantile
                 functions, then takes the root mean of squared 1D distances.
* ``dsw``     -- double slicing: spheres the domain to 1D meta-measures,
                 then runs the SQW inner loop per direction.
* ``sw_wow``  -- sphere slicing with the inner 1D Wasserstein-over-Wasserstein
                 problem solved exactly (1D quantile costs + exact outer OT).

A whole distance matrix evaluated with one shared set of projections is an
exact pseudo-metric: each entry is the L2 norm of a common-length vector of
1D distances.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .discrete_ot import solve_exact
from .gp_slicer import KernelSpec, QuadratureGrid, cholesky_factor
from .measures import MetaMeasure
from .ot1d import MODES, _w2_squared, eval_quantile_grid, quantile_of
from .rng import substream
from .sphere import project_measure, sample_directions


@dataclass(frozen=True)
class SlicingConfig:
    """Monte Carlo estimator configuration.

    ``outer_S`` sphere directions are drawn, each reused across a block of
    ``inner_per_outer`` fresh GP paths; the total projection count is the
    product.  Block reuse amortizes the quantile computations, which are
    the dominant cost.
    """

    outer_S: int
    inner_per_outer: int
    grid: QuadratureGrid
    kernel: KernelSpec
    interpolation: str = "step"
    seed: int = 0

    def __post_init__(self):
        if self.outer_S < 1 or self.inner_per_outer < 1:
            raise ValueError("outer_S and inner_per_outer must be at least 1")
        if self.interpolation not in MODES:
            raise ValueError(f"unknown interpolation mode {self.interpolation!r}")

    @property
    def total_projections(self) -> int:
        return self.outer_S * self.inner_per_outer


@dataclass(frozen=True)
class DistanceEstimate:
    """Monte Carlo distance value with its dispersion."""

    value: float
    std_error: float
    S: int

    def __post_init__(self):
        if self.value < 0 or self.std_error < 0:
            raise ValueError("value and std_error must be nonnegative")


def _w2_sq_sorted_uniform(sa: np.ndarray, sb: np.ndarray) -> np.ndarray:
    """Per-column squared 1D distances for uniform equal-size supports."""
    diff = np.sort(sa, axis=0) - np.sort(sb, axis=0)
    return np.mean(diff * diff, axis=0)


def _w2_sq_weighted(xa, wa, xb, wb) -> float:
    """Squared 1D distance between weighted scalar samples (no merging)."""
    oa = np.argsort(xa, kind="stable")
    ob = np.argsort(xb, kind="stable")
    va, ca = xa[oa], np.cumsum(wa[oa])
    vb, cb = xb[ob], np.cumsum(wb[ob])
    ca[-1] = cb[-1] = 1.0
    breaks = np.concatenate([ca, cb])
    breaks.sort(kind="stable")
    starts = np.concatenate(([0.0], breaks[:-1]))
    ia = np.minimum(np.searchsorted(ca, starts, side="right"), va.size - 1)
    ib = np.minimum(np.searchsorted(cb, starts, side="right"), vb.size - 1)
    diff = va[ia] - vb[ib]
    return float(np.dot(breaks - starts, diff * diff))


def _w2_terms(scal_a, wa, scal_b, wb) -> np.ndarray:
    """Squared 1D distances per projection column of the scalar matrices."""
    uniform = (
        scal_a.shape[0] == scal_b.shape[0]
        and np.ptp(wa) == 0.0
        and np.ptp(wb) == 0.0
    )
    if uniform:
        return _w2_sq_sorted_uniform(scal_a, scal_b)
    return np.array([
        _w2_sq_weighted(scal_a[:, p], wa, scal_b[:, p], wb)
        for p in range(scal_a.shape[1])
    ])


def _estimate(sq_terms: np.ndarray, n_blocks: int = 0) -> DistanceEstimate:
    """Root-mean estimate with a delta-method standard error.

    With block sampling the terms inside a block share a direction, so the
    dispersion of the mean is taken across block means; otherwise across
    the individual terms.
    """
    sq_terms = np.asarray(sq_terms, dtype=float).ravel()
    S = sq_terms.size
    mean_sq = float(np.mean(sq_terms))
    value = float(np.sqrt(max(mean_sq, 0.0)))
    if n_blocks > 1:
        block_means = sq_terms.reshape(n_blocks, -1).mean(axis=1)
        se_mean = float(np.std(block_means, ddof=1) / np.sqrt(n_blocks))
    elif S > 1:
        se_mean = float(np.std(sq_terms, ddof=1) / np.sqrt(S))
    else:
        se_mean = 0.0
    std_error = se_mean / (2.0 * value) if value > 0 else 0.0
    return DistanceEstimate(value, std_error, S)


def _knot_values(meta: MetaMeasure, grid: QuadratureGrid, mode: str) -> np.ndarray:
    """Quantiles of the inner measures evaluated at the grid knots, (N, R)."""
    return np.stack([
        eval_quantile_grid(quantile_of(m), grid.knots, mode) for m in meta.inner
    ])


def _scalar_projections(knot_values, grid, paths) -> np.ndarray:
    # (N, R) x (R, P) weighted by the quadrature -> (N, P)
    return knot_values @ (grid.weights[:, None] * paths.T)


def sqw(a: MetaMeasure, b: MetaMeasure, paths: np.ndarray, grid: QuadratureGrid,
        interpolation: str = "step") -> DistanceEstimate:
    """Sliced quantile distance between 1D meta-measures over given GP paths."""
    if a.d != 1 or b.d != 1:
        raise ValueError(f"sqw requires 1D meta-measures, got d={a.d} and d={b.d}")
    paths = np.atleast_2d(np.asarray(paths, dtype=float))
    if paths.shape[0] < 1 or paths.shape[1] != grid.R:
        raise ValueError(f"need a nonempty (P, {grid.R}) path block, got {paths.shape}")
    scal_a = _scalar_projections(_knot_values(a, grid, interpolation), grid, paths)
    scal_b = _scalar_projections(_knot_values(b, grid, interpolation), grid, paths)
    return _estimate(_w2_terms(scal_a, a.outer_weights, scal_b, b.outer_weights))


def _dsw_direction_terms(metas, theta, factor, grid, mode, rng, inner_count):
    """Scalar projection matrices for every meta under one direction block."""
    z = rng.standard_normal((grid.R, inner_count))
    paths = (factor @ z).T
    out = []
    for meta in metas:
        kv = np.stack([
            eval_quantile_grid(quantile_of(project_measure(m, theta)), grid.knots, mode)
            for m in meta.inner
        ])
        out.append(_scalar_projections(kv, grid, paths))
    return out


def _run_blocks(metas, config, worker, threads):
    """Invoke `worker(i, theta, rng)` per direction, deterministically ordered."""
    d = metas[0].d
    dirs = sample_directions(d, config.outer_S, substream(config.seed, "dsw-directions", 0))
    if threads <= 1:
        for i in range(config.outer_S):
            worker(i, dirs[i], substream(config.seed, "dsw-paths", i))
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [
            pool.submit(worker, i, dirs[i], substream(config.seed, "dsw-paths", i))
            for i in range(config.outer_S)
        ]
        for f in futures:
            f.result()


def dsw(a: MetaMeasure, b: MetaMeasure, config: SlicingConfig,
        threads: int = 1) -> DistanceEstimate:
    """Double-sliced distance between meta-measures in R^d.

    Samples ``outer_S`` sphere directions; each projects both meta-measures
    to 1D and is paired with a fresh block of GP paths.  The value is the
    square root of the grand mean of all squared 1D distances.  Output is
    deterministic given the seed, at any thread count.
    """
    if a.d != b.d:
        raise ValueError(f"dimension mismatch: {a.d} vs {b.d}")
    factor = cholesky_factor(config.kernel, config.grid)
    terms = np.empty((config.outer_S, config.inner_per_outer))

    def worker(i, theta, rng):
        scal_a, scal_b = _dsw_direction_terms(
            (a, b), theta, factor, config.grid, config.interpolation, rng,
            config.inner_per_outer)
        terms[i] = _w2_terms(scal_a, a.outer_weights, scal_b, b.outer_weights)

    _run_blocks((a, b), config, worker, threads)
    return _estimate(terms, n_blocks=config.outer_S)


def dsw_distance_matrix(metas, config: SlicingConfig, threads: int = 1) -> np.ndarray:
    """Pairwise double-sliced distances under one shared projection set.

    Sharing directions and paths across all pairs makes the matrix an exact
    pseudo-metric: symmetric, zero diagonal, triangle inequality up to
    floating-point error.
    """
    metas = list(metas)
    K = len(metas)
    d = metas[0].d
    for meta in metas:
        if meta.d != d:
            raise ValueError("all meta-measures must share the ambient dimension")
    if K == 1:
        return np.zeros((1, 1))
    factor = cholesky_factor(config.kernel, config.grid)
    # per-direction block sums; K x K x outer keeps memory linear in S
    block_sums = np.zeros((config.outer_S, K, K))

    def worker(i, theta, rng):
        scals = _dsw_direction_terms(
            metas, theta, factor, config.grid, config.interpolation, rng,
            config.inner_per_outer)
        for p in range(K):
            for q in range(p + 1, K):
                block_sums[i, p, q] = np.sum(_w2_terms(
                    scals[p], metas[p].outer_weights,
                    scals[q], metas[q].outer_weights))

    _run_blocks(metas, config, worker, threads)
    matrix = np.sqrt(block_sums.sum(axis=0) / config.total_projections)
    return matrix + matrix.T


def sqw_distance_matrix(metas, paths: np.ndarray, grid: QuadratureGrid,
                        interpolation: str = "step") -> np.ndarray:
    """Pairwise SQW distances between 1D meta-measures over shared paths."""
    metas = list(metas)
    K = len(metas)
    paths = np.atleast_2d(np.asarray(paths, dtype=float))
    scals = [
        _scalar_projections(_knot_values(m, grid, interpolation), grid, paths)
        for m in metas
    ]
    matrix = np.zeros((K, K))
    for p in range(K):
        for q in range(p + 1, K):
            terms = _w2_terms(scals[p], metas[p].outer_weights,
                              scals[q], metas[q].outer_weights)
            matrix[p, q] = np.sqrt(np.mean(terms))
    return matrix + matrix.T


def _outer_objective(costs: np.ndarray, wa: np.ndarray, wb: np.ndarray) -> float:
    """Exact outer OT objective; assignment fast path for uniform square inputs."""
    n, m = costs.shape
    if n == m and np.ptp(wa) == 0.0 and np.ptp(wb) == 0.0:
        r, c = linear_sum_assignment(costs)
        return float(costs[r, c].sum() / n)
    _, objective = solve_exact(costs, wa, wb)
    return objective


def _all_uniform_equal(meta: MetaMeasure) -> bool:
    n = meta.inner[0].n
    return all(m.n == n and np.ptp(m.weights) == 0.0 for m in meta.inner)


def sw_wow(a: MetaMeasure, b: MetaMeasure, outer_S: int, seed: int) -> DistanceEstimate:
    """Sliced WoW: per-direction exact 1D WoW, root-mean over directions."""
    if a.d != b.d:
        raise ValueError(f"dimension mismatch: {a.d} vs {b.d}")
    dirs = sample_directions(a.d, outer_S, substream(seed, "sw-directions", 0))
    terms = np.empty(outer_S)
    # uniform inner measures of one common size admit a batched cost matrix:
    # the 1D W^2 between sorted projections is their mean squared difference
    fast = (_all_uniform_equal(a) and _all_uniform_equal(b)
            and a.inner[0].n == b.inner[0].n)
    if fast:
        pts_a = np.stack([m.points[:, 0] if a.d == 1 else m.points for m in a.inner])
        pts_b = np.stack([m.points[:, 0] if b.d == 1 else m.points for m in b.inner])
        for s in range(outer_S):
            sa = np.sort(pts_a @ dirs[s] if a.d > 1 else pts_a * dirs[s][0], axis=1)
            sb = np.sort(pts_b @ dirs[s] if b.d > 1 else pts_b * dirs[s][0], axis=1)
            diff = sa[:, None, :] - sb[None, :, :]
            costs = np.einsum("ijk,ijk->ij", diff, diff) / sa.shape[1]
            terms[s] = _outer_objective(costs, a.outer_weights, b.outer_weights)
        return _estimate(terms)
    for s in range(outer_S):
        qa = [quantile_of(project_measure(m, dirs[s])) for m in a.inner]
        qb = [quantile_of(project_measure(m, dirs[s])) for m in b.inner]
        costs = np.array([[_w2_squared(x, y) for y in qb] for x in qa])
        terms[s] = _outer_objective(costs, a.outer_weights, b.outer_weights)
    return _estimate(terms)
